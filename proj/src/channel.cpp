// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/channel.hpp"

#include <cmath>
#include <numbers>

#include "nearfield/errors.hpp"
#include "nearfield/rng.hpp"

namespace nearfield {

namespace {

void validate(const ArrayGeometry& g, const ChannelConfig& cfg) {
  if (cfg.n_users < 1)
    throw InvalidArgument("sample_channel: n_users must be >= 1");
  if (cfg.paths_per_user < 1)
    throw InvalidArgument("sample_channel: paths_per_user must be >= 1");
  if (cfg.near_fraction < 0.0 || cfg.near_fraction > 1.0)
    throw InvalidArgument("sample_channel: near_fraction must be in [0,1]");
  if (cfg.distance_min <= 0.0)
    throw InvalidArgument("sample_channel: distance_min must be > 0");
  if (cfg.distance_max < cfg.distance_min)
    throw InvalidArgument("sample_channel: distance_max < distance_min");
  if (cfg.non_stationary) {
    if (cfg.visible_region_len < 1)
      throw InvalidArgument("sample_channel: visible_region_len must be >= 1");
    if (cfg.visible_region_len > g.size())
      throw InvalidArgument(
          "sample_channel: visible_region_len exceeds element count");
  }
}

}  // namespace

CVec path_steering(const ArrayGeometry& g, const PathComponent& p) {
  CVec a = (p.regime == PathRegime::Near)
               ? steer_near(g, p.azimuth, p.elevation, p.distance.value())
               : steer_far(g, p.azimuth, p.elevation);
  if (p.visible_mask) {
    const auto& mask = *p.visible_mask;
    if (static_cast<int>(mask.size()) != g.size())
      throw InvalidArgument("path_steering: visible mask length mismatch");
    for (int i = 0; i < g.size(); ++i)
      if (!mask[static_cast<std::size_t>(i)]) a[i] = Complex{0.0, 0.0};
    double norm = a.norm();
    if (norm > 0.0) a /= norm;
  }
  return a;
}

ChannelRealization sample_channel(const ArrayGeometry& g,
                                  const ChannelConfig& cfg,
                                  std::uint64_t seed) {
  validate(g, cfg);
  const int n = g.size();
  const bool upa = g.kind == ArrayKind::Upa;
  const double path_scale =
      std::sqrt(static_cast<double>(n) / cfg.paths_per_user);

  ChannelRealization out;
  out.config_echo = cfg;
  out.matrix = CMat::Zero(n, cfg.n_users);
  out.paths.resize(static_cast<std::size_t>(cfg.n_users));

  Rng root(seed);
  for (int k = 0; k < cfg.n_users; ++k) {
    Rng rng = root.split(static_cast<std::uint64_t>(k));
    auto& user_paths = out.paths[static_cast<std::size_t>(k)];
    user_paths.reserve(static_cast<std::size_t>(cfg.paths_per_user));
    for (int p = 0; p < cfg.paths_per_user; ++p) {
      PathComponent pc;
      pc.regime = rng.bernoulli(cfg.near_fraction) ? PathRegime::Near
                                                   : PathRegime::Far;
      pc.azimuth = std::asin(rng.uniform(-1.0, 1.0));
      pc.elevation = upa ? std::asin(rng.uniform(-1.0, 1.0)) : 0.0;
      if (pc.regime == PathRegime::Near)
        pc.distance = rng.uniform(cfg.distance_min, cfg.distance_max);
      Complex gain = (cfg.gain_model == GainModel::Unit)
                         ? std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi))
                         : rng.cnormal(1.0);
      pc.gain = path_scale * gain;
      if (cfg.non_stationary) {
        int start = static_cast<int>(
            rng.uniform_index(static_cast<std::uint64_t>(n - cfg.visible_region_len + 1)));
        std::vector<bool> mask(static_cast<std::size_t>(n), false);
        for (int i = start; i < start + cfg.visible_region_len; ++i)
          mask[static_cast<std::size_t>(i)] = true;
        pc.visible_mask = std::move(mask);
      }
      out.matrix.col(k) += pc.gain * path_steering(g, pc);
      user_paths.push_back(std::move(pc));
    }
  }
  return out;
}

}  // namespace nearfield
