// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_DICTIONARY_HPP
#define NEARFIELD_DICTIONARY_HPP

#include <optional>
#include <vector>

#include "nearfield/geometry.hpp"
#include "nearfield/linalg.hpp"

namespace nearfield {

/// Grid point behind one dictionary column. `distance` absent marks the
/// far-field ring.
struct AtomLabel {
  double azimuth = 0.0;
  double elevation = 0.0;
  std::optional<double> distance;
};

/// Angle x distance codebook for sparse representation of near-field
/// channels. Columns are unit-norm steering vectors.
struct PolarDictionary {
  CMat atoms;  // N x Q
  std::vector<AtomLabel> labels;
  ArrayGeometry geometry_echo;

  int n_atoms() const { return static_cast<int>(atoms.cols()); }
};

/// Far-field (DFT-style) dictionary: one steer_far column per angle, angles
/// uniform in sine in [-1, 1).
PolarDictionary build_far_dictionary(const ArrayGeometry& g, int n_angles);

/// Polar dictionary: per angle, one far-field atom plus n_rings near-field
/// atoms at distances rayleigh_distance / s for s = 1..n_rings (uniform in
/// 1/r), clamped to >= rho_min. Q = n_angles * (n_rings + 1).
PolarDictionary build_polar_dictionary(const ArrayGeometry& g, int n_angles,
                                       int n_rings, double rho_min);

/// Largest |<a_i, a_j>| over distinct column pairs.
double mutual_coherence(const PolarDictionary& d);

struct OmpResult {
  std::vector<int> support;  // atom indices in pick order
  CVec coefficients;         // least-squares fit on the support
};

/// Orthogonal matching pursuit: greedily pick the atom with the largest
/// |<residual, atom>| (ties -> lowest index), re-fit least squares on the
/// support, stop after `sparsity` picks or when the residual 2-norm drops
/// below 1e-10.
OmpResult omp(const CVec& y, const PolarDictionary& d, int sparsity);

}  // namespace nearfield

#endif  // NEARFIELD_DICTIONARY_HPP
