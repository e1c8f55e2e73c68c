// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nearfield/errors.hpp"
#include "nearfield/harness.hpp"

namespace {

// Exit codes, part of the CLI contract.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kTrainingFailure = 4;
constexpr int kIoError = 5;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--seed", args.seed, "seed override (default: config)");
  auto* out = cmd->add_option("--out", args.out_path, "output path");
  if (needs_out) out->required();
  cmd->add_option("--workers", args.workers, "parallel evaluation workers")
      ->check(CLI::PositiveNumber);
}

std::uint64_t pick_seed(const nearfield::ExperimentConfig& cfg,
                        const CommonArgs& args) {
  return args.seed.value_or(cfg.training.seed);
}

void emit_rows(const std::string& out_path,
               const std::vector<nearfield::MetricsRow>& rows) {
  if (out_path.empty()) {
    nearfield::write_metrics_csv(std::cout, rows);
  } else {
    nearfield::write_metrics_csv_file(out_path, rows);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-field XL-MIMO transceiver harness"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  bool gen_pairs = false;
  bool gen_no_pairs = false;
  auto* gen = app.add_subcommand("gen", "generate a channel dataset");
  add_common(gen, gen_args, true);
  gen->add_flag("--pairs", gen_pairs, "force observation/sensing pairs");
  gen->add_flag("--no-pairs", gen_no_pairs, "channels only");

  CommonArgs tf_args;
  std::string tf_data;
  auto* train_fpn = app.add_subcommand("train-fpn", "train the FPN estimator");
  add_common(train_fpn, tf_args, true);
  train_fpn->add_option("--data", tf_data, "training dataset")->required();

  CommonArgs tn_args;
  std::string tn_data;
  auto* train_nc = app.add_subcommand("train-nc", "train the NC beamformer");
  add_common(train_nc, tn_args, true);
  train_nc->add_option("--data", tn_data, "training dataset")->required();

  CommonArgs ev_args;
  std::string ev_model, ev_data;
  auto* eval = app.add_subcommand("eval", "evaluate a trained model");
  add_common(eval, ev_args, false);
  eval->add_option("--model", ev_model, "trained model file")->required();
  eval->add_option("--data", ev_data, "dataset (required for estimation)");

  CommonArgs ood_args;
  std::string ood_model;
  std::vector<std::string> ood_shifts;
  auto* ood = app.add_subcommand("ood", "out-of-distribution suite");
  add_common(ood, ood_args, false);
  ood->add_option("--model", ood_model, "trained FPN model")->required();
  ood->add_option("--shifts", ood_shifts,
                  "shift specs, e.g. snr_delta:-5 near_fraction:0.8 "
                  "paths_per_user:5 resample_sensing quantizer_on");

  CommonArgs bench_args;
  auto* bench = app.add_subcommand("bench",
                                   "implicit vs unfolded training cost");
  add_common(bench, bench_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = nearfield::load_config(gen_args.config_path);
      std::optional<bool> pairs;
      if (gen_pairs) pairs = true;
      if (gen_no_pairs) pairs = false;
      auto res = nearfield::cmd_gen(cfg, gen_args.out_path,
                                    pick_seed(cfg, gen_args), pairs);
      std::printf("wrote %llu samples, checksum %016llx\n",
                  static_cast<unsigned long long>(res.count),
                  static_cast<unsigned long long>(res.checksum));
    } else if (train_fpn->parsed()) {
      auto cfg = nearfield::load_config(tf_args.config_path);
      nearfield::cmd_train_fpn(cfg, tf_data, tf_args.out_path,
                               pick_seed(cfg, tf_args));
      std::cout << "model written to " << tf_args.out_path << "\n";
    } else if (train_nc->parsed()) {
      auto cfg = nearfield::load_config(tn_args.config_path);
      nearfield::cmd_train_nc(cfg, tn_data, tn_args.out_path,
                              pick_seed(cfg, tn_args));
      std::cout << "model written to " << tn_args.out_path << "\n";
    } else if (eval->parsed()) {
      auto cfg = nearfield::load_config(ev_args.config_path);
      auto rows = nearfield::cmd_eval(cfg, ev_model, ev_data,
                                      pick_seed(cfg, ev_args), ev_args.workers);
      emit_rows(ev_args.out_path, rows);
    } else if (ood->parsed()) {
      auto cfg = nearfield::load_config(ood_args.config_path);
      auto rows = nearfield::cmd_ood(cfg, ood_model, ood_shifts,
                                     pick_seed(cfg, ood_args));
      emit_rows(ood_args.out_path, rows);
    } else if (bench->parsed()) {
      auto cfg = nearfield::load_config(bench_args.config_path);
      auto rows = nearfield::cmd_bench(cfg, pick_seed(cfg, bench_args));
      emit_rows(bench_args.out_path, rows);
    }
  } catch (const nearfield::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nearfield::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const nearfield::TrainingFailure& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return kTrainingFailure;
  } catch (const nearfield::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
