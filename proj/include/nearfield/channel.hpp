// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_CHANNEL_HPP
#define NEARFIELD_CHANNEL_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "nearfield/geometry.hpp"
#include "nearfield/linalg.hpp"

namespace nearfield {

enum class PathRegime { Far, Near };
enum class GainModel { Unit, ComplexGaussian };

/// One multipath component of a user channel. Near paths carry a finite
/// positive distance, far paths none. An optional visible mask models
/// spatial non-stationarity (the path only illuminates a sub-aperture).
struct PathComponent {
  PathRegime regime = PathRegime::Far;
  double azimuth = 0.0;    // radians in [-pi/2, pi/2]
  double elevation = 0.0;  // radians in [-pi/2, pi/2]; 0 for ULA
  std::optional<double> distance;  // meters; present iff regime == Near
  Complex gain{0.0, 0.0};          // includes the sqrt(N/P) power scaling
  std::optional<std::vector<bool>> visible_mask;  // length N when present
};

struct ChannelConfig {
  int n_users = 1;
  int paths_per_user = 1;
  double near_fraction = 0.5;  // probability a path is near-field
  double distance_min = 1.0;   // meters
  double distance_max = 10.0;  // meters
  GainModel gain_model = GainModel::ComplexGaussian;
  bool non_stationary = false;
  int visible_region_len = 0;  // contiguous window size when non_stationary
};

/// Per-user channel columns plus the generating path metadata.
/// Invariant: column k equals the gain-weighted sum of its paths' (masked,
/// renormalized) steering vectors.
struct ChannelRealization {
  CMat matrix;  // N x K, column k = user k
  std::vector<std::vector<PathComponent>> paths;  // [K][paths_per_user]
  ChannelConfig config_echo;
};

/// Steering vector of a single path, with the path's visible mask applied
/// and the masked vector renormalized to unit 2-norm.
CVec path_steering(const ArrayGeometry& g, const PathComponent& p);

/// Draw a hybrid-field multi-user channel. Each path is near-field with
/// probability near_fraction; angles are uniform in the sine domain; gains
/// are scaled so that E||h_k||^2 = N. User k's paths derive from the
/// substream (seed, k), so draws are reproducible per user.
ChannelRealization sample_channel(const ArrayGeometry& g,
                                  const ChannelConfig& cfg,
                                  std::uint64_t seed);

}  // namespace nearfield

#endif  // NEARFIELD_CHANNEL_HPP
