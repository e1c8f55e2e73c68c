// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_GEOMETRY_HPP
#define NEARFIELD_GEOMETRY_HPP

#include <vector>

#include "nearfield/linalg.hpp"

namespace nearfield {

enum class ArrayKind { Ula, Upa };

/// Antenna element positions and carrier wavelength. Immutable after
/// construction; the source of steering vectors and the Rayleigh distance.
struct ArrayGeometry {
  std::vector<Eigen::Vector3d> element_positions;  // meters, centroid at origin
  double wavelength = 0.0;                         // meters
  ArrayKind kind = ArrayKind::Ula;
  double aperture = 0.0;  // max pairwise element distance, meters

  int size() const { return static_cast<int>(element_positions.size()); }
};

/// Uniform linear array along the x-axis, centered on the origin.
/// Element i sits at x = ((2i - n + 1)/2) * spacing.
ArrayGeometry build_ula(int n, double spacing, double wavelength);

/// Uniform planar array in the x-y plane, centered on the origin.
/// Element index is row-major with x fastest: index = iy * nx + ix.
ArrayGeometry build_upa(int nx, int ny, double spacing, double wavelength);

/// Fraunhofer boundary 2 D^2 / lambda with D the array aperture.
double rayleigh_distance(const ArrayGeometry& g);

/// Planar-wavefront steering vector for a source at (azimuth, elevation),
/// unit 2-norm. Entry i carries the phase of the path-length difference
/// <position_i, u> where u points from the array toward the source.
CVec steer_far(const ArrayGeometry& g, double azimuth, double elevation = 0.0);

/// Spherical-wavefront steering vector for a source at the given angles and
/// distance from the array centroid. Phase is referenced to the centroid
/// distance so steer_near converges to steer_far as distance grows.
CVec steer_near(const ArrayGeometry& g, double azimuth, double elevation,
                double distance);

}  // namespace nearfield

#endif  // NEARFIELD_GEOMETRY_HPP
