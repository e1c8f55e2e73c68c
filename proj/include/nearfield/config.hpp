// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_CONFIG_HPP
#define NEARFIELD_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nearfield/channel.hpp"
#include "nearfield/geometry.hpp"
#include "nearfield/measurement.hpp"

namespace nearfield {

struct GeometryBlock {
  ArrayKind kind = ArrayKind::Ula;
  int n = 64;   // ULA
  int nx = 8;   // UPA
  int ny = 8;
  double spacing_in_wavelengths = 0.5;
  double carrier_hz = 14e9;
};

struct MeasurementBlock {
  double compression_ratio = 0.5;
  SensingKind kind = SensingKind::UnitModulus;
  double snr_db = 5.0;
  Quantizer quantizer = Quantizer::None;
};

struct TrainingBlock {
  int epochs = 10;
  int batch = 16;
  double lr = 1e-3;
  double lip_budget = 0.9;
  int neumann_k = 1;
  double tol = 1e-4;
  int max_iter = 64;
  std::uint64_t seed = 1;
};

struct EvalBlock {
  int n_test = 100;
  std::vector<int> user_counts = {8};
  std::vector<double> snr_grid = {5.0};
};

/// One experiment bundle; JSON on disk with exactly these blocks and keys.
/// Missing keys take the documented defaults, unknown keys are rejected.
struct ExperimentConfig {
  std::string scenario = "default";
  GeometryBlock geometry;
  ChannelConfig channel;
  MeasurementBlock measurement;
  TrainingBlock training;
  EvalBlock eval;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Canonical JSON text (sorted keys, stable float formatting); load/save
/// round-trips to the identical byte string.
std::string config_to_json(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

ArrayGeometry make_geometry(const GeometryBlock& block);

}  // namespace nearfield

#endif  // NEARFIELD_CONFIG_HPP
