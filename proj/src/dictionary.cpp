// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/dictionary.hpp"

#include <cmath>

#include "nearfield/errors.hpp"

namespace nearfield {

namespace {

constexpr double kOmpResidualStop = 1e-10;

// Midpoint grid in sine space: n points centered in [-1, 1), so a single
// angle lands on broadside.
std::vector<double> sine_grid(int n_angles) {
  std::vector<double> angles(static_cast<std::size_t>(n_angles));
  for (int q = 0; q < n_angles; ++q)
    angles[static_cast<std::size_t>(q)] =
        std::asin((2.0 * q + 1.0) / n_angles - 1.0);
  return angles;
}

}  // namespace

PolarDictionary build_far_dictionary(const ArrayGeometry& g, int n_angles) {
  if (n_angles < 1)
    throw InvalidArgument("build_far_dictionary: n_angles must be >= 1");
  PolarDictionary d;
  d.geometry_echo = g;
  d.atoms.resize(g.size(), n_angles);
  d.labels.reserve(static_cast<std::size_t>(n_angles));
  int col = 0;
  for (double az : sine_grid(n_angles)) {
    d.atoms.col(col++) = steer_far(g, az);
    d.labels.push_back({az, 0.0, std::nullopt});
  }
  return d;
}

PolarDictionary build_polar_dictionary(const ArrayGeometry& g, int n_angles,
                                       int n_rings, double rho_min) {
  if (n_angles < 1)
    throw InvalidArgument("build_polar_dictionary: n_angles must be >= 1");
  if (n_rings < 0)
    throw InvalidArgument("build_polar_dictionary: n_rings must be >= 0");
  if (rho_min <= 0.0)
    throw InvalidArgument("build_polar_dictionary: rho_min must be > 0");
  const double first_ring = rayleigh_distance(g);
  if (n_rings > 0 && rho_min >= first_ring)
    throw InvalidArgument(
        "build_polar_dictionary: rho_min must lie below the first ring "
        "distance (the Rayleigh distance)");

  PolarDictionary d;
  d.geometry_echo = g;
  d.atoms.resize(g.size(), static_cast<Eigen::Index>(n_angles) * (n_rings + 1));
  d.labels.reserve(static_cast<std::size_t>(n_angles) *
                   static_cast<std::size_t>(n_rings + 1));
  int col = 0;
  for (double az : sine_grid(n_angles)) {
    d.atoms.col(col++) = steer_far(g, az);
    d.labels.push_back({az, 0.0, std::nullopt});
    for (int s = 1; s <= n_rings; ++s) {
      double r = std::max(first_ring / s, rho_min);
      d.atoms.col(col++) = steer_near(g, az, 0.0, r);
      d.labels.push_back({az, 0.0, r});
    }
  }
  return d;
}

double mutual_coherence(const PolarDictionary& d) {
  const int q = d.n_atoms();
  if (q < 2)
    throw InvalidArgument("mutual_coherence: need at least two atoms");
  double best = 0.0;
  CMat gram = d.atoms.adjoint() * d.atoms;
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) best = std::max(best, std::abs(gram(i, j)));
  return std::min(best, 1.0);
}

OmpResult omp(const CVec& y, const PolarDictionary& d, int sparsity) {
  const int q = d.n_atoms();
  if (y.size() != d.atoms.rows())
    throw InvalidArgument("omp: measurement length does not match atom size");
  if (sparsity < 1 || sparsity > std::min<int>(static_cast<int>(d.atoms.rows()), q))
    throw InvalidArgument("omp: sparsity out of range");

  OmpResult res;
  CVec residual = y;
  for (int pick = 0; pick < sparsity; ++pick) {
    if (residual.norm() < kOmpResidualStop) break;
    CVec corr = d.atoms.adjoint() * residual;
    int best = 0;
    double best_mag = -1.0;
    for (int j = 0; j < q; ++j) {
      double mag = std::abs(corr[j]);
      if (mag > best_mag) {  // strict > keeps the lowest index on ties
        best_mag = mag;
        best = j;
      }
    }
    res.support.push_back(best);

    CMat sub(d.atoms.rows(), static_cast<Eigen::Index>(res.support.size()));
    for (std::size_t c = 0; c < res.support.size(); ++c)
      sub.col(static_cast<Eigen::Index>(c)) =
          d.atoms.col(res.support[c]);
    res.coefficients = sub.colPivHouseholderQr().solve(y);
    residual = y - sub * res.coefficients;
  }
  if (res.support.empty()) res.coefficients = CVec(0);
  return res;
}

}  // namespace nearfield
