// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_HARNESS_HPP
#define NEARFIELD_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nearfield/beamforming.hpp"
#include "nearfield/config.hpp"
#include "nearfield/dataset.hpp"
#include "nearfield/fpn.hpp"

namespace nearfield {

struct MetricsRow {
  std::string experiment;
  std::string method;
  int n_antennas = 0;
  int n_users = 0;
  double snr_db = 0.0;
  std::string metric_name;  // nmse_db | sum_rate | residual | memory_buffers
  double value = 0.0;
  double runtime_ms = 0.0;
  long iterations = 0;
  std::uint64_t seed = 0;
};

/// Exact schema:
/// experiment,method,n_antennas,n_users,snr_db,metric_name,value,runtime_ms,iterations,seed
void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_metrics_csv_file(const std::string& path,
                            const std::vector<MetricsRow>& rows);

struct GenResult {
  std::uint64_t count = 0;
  std::uint64_t checksum = 0;
};

/// Write a channel dataset. Estimation datasets (with observation/sensing
/// pairs) require n_users == 1; with_pairs defaults to exactly that case.
GenResult cmd_gen(const ExperimentConfig& cfg, const std::string& out_path,
                  std::uint64_t seed,
                  std::optional<bool> with_pairs = std::nullopt);

/// Train the FPN estimator on a paired dataset; writes the model to
/// model_out and the per-epoch loss history to model_out + ".loss.csv".
void cmd_train_fpn(const ExperimentConfig& cfg, const std::string& data_path,
                   const std::string& model_out, std::uint64_t seed);

/// Train the NC beamformer on a channel dataset; same output convention.
void cmd_train_nc(const ExperimentConfig& cfg, const std::string& data_path,
                  const std::string& model_out, std::uint64_t seed);

/// Estimation eval (paired dataset): NMSE and median runtime for
/// ls / oamp_soft / fpn. Beamforming eval (model is an NC file): sum rate
/// and median runtime for zf / mrt / wmmse / nc across eval.user_counts;
/// channels come from the dataset when its K matches, otherwise they are
/// generated from the config.
std::vector<MetricsRow> cmd_eval(const ExperimentConfig& cfg,
                                 const std::string& model_path,
                                 const std::string& data_path,
                                 std::uint64_t seed, int workers = 1);

/// Out-of-distribution suite for a trained FPN model. Shift names:
///   snr_delta:<dB>  near_fraction:<p>  paths_per_user:<n>
///   resample_sensing  quantizer_on
/// Emits the matched row plus one row per shift.
std::vector<MetricsRow> cmd_ood(const ExperimentConfig& cfg,
                                const std::string& model_path,
                                const std::vector<std::string>& shifts,
                                std::uint64_t seed);

/// Training-memory and wall-time comparison of implicit (FPN) vs
/// stored-state unfolded gradients at max_iter in {8, 16, 32, 64}.
std::vector<MetricsRow> cmd_bench(const ExperimentConfig& cfg,
                                  std::uint64_t seed);

/// Paired estimation samples drawn from the config (the in-memory
/// counterpart of a gen'd dataset); shared by eval/ood/tests. The sensing
/// matrix derives from sensing_seed so OOD can resample it independently.
struct EvalSet {
  MeasurementSpec spec;
  std::vector<CVec> observations;
  std::vector<CVec> channels;
};
EvalSet build_eval_set(const ExperimentConfig& cfg, int n_samples,
                       std::uint64_t seed, std::uint64_t sensing_seed);

/// Median wall-clock of fn() in milliseconds: `repeats` timed runs after
/// `warmup` untimed ones, single thread.
double median_runtime_ms(const std::function<void()>& fn, int repeats = 11,
                         int warmup = 2);

}  // namespace nearfield

#endif  // NEARFIELD_HARNESS_HPP
