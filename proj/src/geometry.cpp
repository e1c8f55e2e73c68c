// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/geometry.hpp"

#include <cmath>
#include <numbers>

#include "nearfield/errors.hpp"

namespace nearfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_pairwise_distance(const std::vector<Eigen::Vector3d>& pos) {
  double best = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = i + 1; j < pos.size(); ++j)
      best = std::max(best, (pos[i] - pos[j]).norm());
  return best;
}

/// Unit vector pointing from the array toward a source at (azimuth,
/// elevation). Broadside is +z, so a ULA in x and a UPA in x-y see zero
/// path difference at (0, 0).
Eigen::Vector3d direction_of_arrival(double azimuth, double elevation) {
  return {std::sin(azimuth) * std::cos(elevation), std::sin(elevation),
          std::cos(azimuth) * std::cos(elevation)};
}

}  // namespace

ArrayGeometry build_ula(int n, double spacing, double wavelength) {
  if (n < 1) throw InvalidArgument("build_ula: n must be >= 1");
  if (spacing <= 0.0) throw InvalidArgument("build_ula: spacing must be > 0");
  if (wavelength <= 0.0)
    throw InvalidArgument("build_ula: wavelength must be > 0");

  ArrayGeometry g;
  g.kind = ArrayKind::Ula;
  g.wavelength = wavelength;
  g.element_positions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = 0.5 * (2.0 * i - n + 1) * spacing;
    g.element_positions.emplace_back(x, 0.0, 0.0);
  }
  g.aperture = (n - 1) * spacing;
  return g;
}

ArrayGeometry build_upa(int nx, int ny, double spacing, double wavelength) {
  if (nx < 1 || ny < 1) throw InvalidArgument("build_upa: nx, ny must be >= 1");
  if (spacing <= 0.0) throw InvalidArgument("build_upa: spacing must be > 0");
  if (wavelength <= 0.0)
    throw InvalidArgument("build_upa: wavelength must be > 0");

  ArrayGeometry g;
  g.kind = ArrayKind::Upa;
  g.wavelength = wavelength;
  g.element_positions.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    double y = 0.5 * (2.0 * iy - ny + 1) * spacing;
    for (int ix = 0; ix < nx; ++ix) {
      double x = 0.5 * (2.0 * ix - nx + 1) * spacing;
      g.element_positions.emplace_back(x, y, 0.0);
    }
  }
  g.aperture = max_pairwise_distance(g.element_positions);
  return g;
}

double rayleigh_distance(const ArrayGeometry& g) {
  return 2.0 * g.aperture * g.aperture / g.wavelength;
}

CVec steer_far(const ArrayGeometry& g, double azimuth, double elevation) {
  const int n = g.size();
  const Eigen::Vector3d u = direction_of_arrival(azimuth, elevation);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  CVec a(n);
  for (int i = 0; i < n; ++i) {
    double phase = -kTwoPi * g.element_positions[i].dot(u) / g.wavelength;
    a[i] = std::polar(scale, phase);
  }
  return a;
}

CVec steer_near(const ArrayGeometry& g, double azimuth, double elevation,
                double distance) {
  if (distance <= 0.0)
    throw InvalidArgument("steer_near: distance must be > 0");
  const int n = g.size();
  const Eigen::Vector3d source =
      distance * direction_of_arrival(azimuth, elevation);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  CVec a(n);
  for (int i = 0; i < n; ++i) {
    double ri = (source - g.element_positions[i]).norm();
    // r_i - r ~ -<u, p_i> at large r, so the +j sign makes the planar-wave
    // limit coincide with steer_far.
    double phase = kTwoPi * (ri - distance) / g.wavelength;
    a[i] = std::polar(scale, phase);
  }
  return a;
}

}  // namespace nearfield
