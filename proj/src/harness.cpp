// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "nearfield/errors.hpp"
#include "nearfield/rng.hpp"

namespace nearfield {

namespace {

// Seed-stream tags so gen / eval / ood derive disjoint substreams from one
// user seed while sharing the sensing matrix.
constexpr std::uint64_t kSensingStream = 0xA11A5;
constexpr std::uint64_t kChannelStream = 0xC4A2;
constexpr std::uint64_t kNoiseStream = 0x17E5;
constexpr std::uint64_t kEvalChannelStream = 0xE7A1;
constexpr std::uint64_t kEvalNoiseStream = 0xE7A2;

constexpr int kWmmseIters = 100;
constexpr double kSignalPowerRef = 1.0;  // E|[A h]_i|^2 under the normalization

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0) {
  return Rng(seed).split(stream).split(index).next_u64();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

/// Index-deterministic parallel loop: results land by index regardless of
/// the worker count.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic_int next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

double time_once_ms(const std::function<void()>& fn) {
  auto start = std::chrono::steady_clock::now();
  fn();
  auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

int measurement_rows(const ExperimentConfig& cfg, int n) {
  int m = static_cast<int>(std::lround(cfg.measurement.compression_ratio * n));
  return std::clamp(m, 1, n);
}

FpnTrainConfig fpn_train_config(const ExperimentConfig& cfg,
                                std::uint64_t seed) {
  FpnTrainConfig tc;
  tc.epochs = cfg.training.epochs;
  tc.batch = cfg.training.batch;
  tc.lr = cfg.training.lr;
  tc.tol = cfg.training.tol;
  tc.max_iter = cfg.training.max_iter;
  tc.neumann_k = cfg.training.neumann_k;
  tc.lip_budget = cfg.training.lip_budget;
  tc.seed = seed;
  return tc;
}

FpnModel load_fpn_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model: " + path);
  return load_fpn_model(is);
}

NcModel load_nc_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model: " + path);
  return load_nc_model(is);
}

std::string peek_magic(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is) throw DataError("model file too short: " + path);
  return std::string(magic, 4);
}

void write_loss_csv(const std::string& path,
                    const std::vector<double>& history,
                    const char* value_name) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "epoch," << value_name << "\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    os << i << "," << format_double(history[i]) << "\n";
  if (!os) throw IoError("loss history write failed: " + path);
}

/// Downlink channels for one (K, seed) cell: P = 1, sigma^2 = 10^(-snr/10).
std::vector<MultiUserChannel> make_downlink_set(const ExperimentConfig& cfg,
                                                int n_users, int n_samples,
                                                double snr_db,
                                                std::uint64_t seed) {
  ArrayGeometry g = make_geometry(cfg.geometry);
  ChannelConfig cc = cfg.channel;
  cc.n_users = n_users;
  double noise = snr_to_noise_var(snr_db, 1.0);
  std::vector<MultiUserChannel> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    ChannelRealization real = sample_channel(
        g, cc, derive_seed(seed, kEvalChannelStream, static_cast<std::uint64_t>(i)));
    out.push_back({real.matrix.transpose(), noise, 1.0});
  }
  return out;
}

struct ShiftSpec {
  std::string name;
  double snr_delta = 0.0;
  std::optional<double> near_fraction;
  std::optional<int> paths_per_user;
  bool resample_sensing = false;
  bool quantizer_on = false;
};

ShiftSpec parse_shift(const std::string& text) {
  ShiftSpec s;
  s.name = text;
  auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto need_arg = [&](const char* what) {
    if (arg.empty())
      throw ConfigError("shift '" + head + "' needs a value, e.g. " +
                        std::string(what));
    try {
      return std::stod(arg);
    } catch (...) {
      throw ConfigError("bad value in shift '" + text + "'");
    }
  };
  if (head == "snr_delta") {
    s.snr_delta = need_arg("snr_delta:-5");
  } else if (head == "near_fraction") {
    s.near_fraction = need_arg("near_fraction:0.8");
  } else if (head == "paths_per_user") {
    s.paths_per_user = static_cast<int>(need_arg("paths_per_user:5"));
  } else if (head == "resample_sensing") {
    s.resample_sensing = true;
  } else if (head == "quantizer_on") {
    s.quantizer_on = true;
  } else {
    throw ConfigError("unknown shift '" + text + "'");
  }
  return s;
}

}  // namespace

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "experiment,method,n_antennas,n_users,snr_db,metric_name,value,"
        "runtime_ms,iterations,seed\n";
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.method << ',' << r.n_antennas << ','
       << r.n_users << ',' << format_double(r.snr_db) << ',' << r.metric_name
       << ',' << format_double(r.value) << ',' << format_double(r.runtime_ms)
       << ',' << r.iterations << ',' << r.seed << "\n";
  }
}

void write_metrics_csv_file(const std::string& path,
                            const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_metrics_csv(os, rows);
  if (!os) throw IoError("metrics write failed: " + path);
}

double median_runtime_ms(const std::function<void()>& fn, int repeats,
                         int warmup) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) times.push_back(time_once_ms(fn));
  return median(std::move(times));
}

EvalSet build_eval_set(const ExperimentConfig& cfg, int n_samples,
                       std::uint64_t seed, std::uint64_t sensing_seed) {
  ArrayGeometry g = make_geometry(cfg.geometry);
  const int n = g.size();
  EvalSet set;
  set.spec = build_sensing(g, measurement_rows(cfg, n), cfg.measurement.kind,
                           sensing_seed);
  set.spec.noise_var =
      snr_to_noise_var(cfg.measurement.snr_db, kSignalPowerRef);
  set.spec.quantizer = cfg.measurement.quantizer;

  ChannelConfig cc = cfg.channel;
  cc.n_users = 1;  // one estimation instance per sample
  set.channels.reserve(static_cast<std::size_t>(n_samples));
  set.observations.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    ChannelRealization real = sample_channel(
        g, cc, derive_seed(seed, kEvalChannelStream, static_cast<std::uint64_t>(i)));
    CVec h = real.matrix.col(0);
    set.observations.push_back(observe(
        set.spec, h, derive_seed(seed, kEvalNoiseStream, static_cast<std::uint64_t>(i))));
    set.channels.push_back(std::move(h));
  }
  return set;
}

GenResult cmd_gen(const ExperimentConfig& cfg, const std::string& out_path,
                  std::uint64_t seed, std::optional<bool> with_pairs) {
  ArrayGeometry g = make_geometry(cfg.geometry);
  const int n = g.size();
  const bool pairs = with_pairs.value_or(cfg.channel.n_users == 1);
  if (pairs && cfg.channel.n_users != 1)
    throw DataError("cmd_gen: paired (estimation) datasets require n_users == 1");

  ChannelDataset ds;
  ds.n_antennas = n;
  ds.n_users = cfg.channel.n_users;
  ds.has_pairs = pairs;

  MeasurementSpec spec;
  if (pairs) {
    spec = build_sensing(g, measurement_rows(cfg, n), cfg.measurement.kind,
                         derive_seed(seed, kSensingStream));
    spec.noise_var = snr_to_noise_var(cfg.measurement.snr_db, kSignalPowerRef);
    spec.quantizer = cfg.measurement.quantizer;
  }

  ds.samples.resize(static_cast<std::size_t>(cfg.eval.n_test));
  for (int i = 0; i < cfg.eval.n_test; ++i) {
    DatasetSample& s = ds.samples[static_cast<std::size_t>(i)];
    ChannelRealization real = sample_channel(
        g, cfg.channel, derive_seed(seed, kChannelStream, static_cast<std::uint64_t>(i)));
    s.channels = std::move(real.matrix);
    if (pairs) {
      s.observation =
          observe(spec, s.channels.col(0),
                  derive_seed(seed, kNoiseStream, static_cast<std::uint64_t>(i)));
      s.sensing = spec.sensing;
    }
  }
  save_dataset_file(out_path, ds);
  return {ds.samples.size(), file_checksum(out_path)};
}

namespace {

/// Reconstruct per-sample measurement specs from a paired dataset; the
/// sigma_max cache is shared whenever samples reuse the same matrix.
std::vector<MeasurementSpec> specs_from_dataset(const ChannelDataset& ds,
                                                const ExperimentConfig& cfg) {
  if (!ds.has_pairs)
    throw DataError("dataset has no measurement pairs; regenerate with gen");
  if (ds.samples.empty()) throw DataError("dataset is empty");
  std::vector<MeasurementSpec> specs(ds.samples.size());
  double noise = snr_to_noise_var(cfg.measurement.snr_db, kSignalPowerRef);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    MeasurementSpec& spec = specs[i];
    spec.sensing = ds.samples[i].sensing;
    spec.noise_var = noise;
    spec.quantizer = cfg.measurement.quantizer;
    spec.compression_ratio =
        static_cast<double>(spec.sensing.rows()) / spec.sensing.cols();
    if (i > 0 && specs[i - 1].sensing.rows() == spec.sensing.rows() &&
        specs[i - 1].sensing == spec.sensing) {
      spec.sensing_sigma_max = specs[i - 1].sensing_sigma_max;
    } else {
      spec.sensing_sigma_max = spec.sensing.jacobiSvd().singularValues()(0);
    }
  }
  return specs;
}

}  // namespace

void cmd_train_fpn(const ExperimentConfig& cfg, const std::string& data_path,
                   const std::string& model_out, std::uint64_t seed) {
  ChannelDataset ds = load_dataset_file(data_path);
  if (ds.samples.empty()) throw DataError("cmd_train_fpn: empty dataset");
  std::vector<MeasurementSpec> specs = specs_from_dataset(ds, cfg);
  std::vector<FpnSample> samples(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    samples[i].spec = &specs[i];
    samples[i].y = ds.samples[i].observation;
    samples[i].h_true = ds.samples[i].channels.col(0);
  }
  FpnTrainResult result = train_fpn(samples, fpn_train_config(cfg, seed));
  std::ofstream os(model_out, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + model_out);
  save_fpn_model(os, result.model);
  write_loss_csv(model_out + ".loss.csv", result.loss_history, "loss");
}

void cmd_train_nc(const ExperimentConfig& cfg, const std::string& data_path,
                  const std::string& model_out, std::uint64_t seed) {
  ChannelDataset ds = load_dataset_file(data_path);
  if (ds.samples.empty()) throw DataError("cmd_train_nc: empty dataset");
  double noise = snr_to_noise_var(cfg.measurement.snr_db, 1.0);
  std::vector<MultiUserChannel> channels;
  channels.reserve(ds.samples.size());
  for (const auto& s : ds.samples)
    channels.push_back({s.channels.transpose(), noise, 1.0});
  NcTrainConfig tc;
  tc.epochs = cfg.training.epochs;
  tc.batch = cfg.training.batch;
  tc.lr = cfg.training.lr;
  tc.seed = seed;
  NcTrainResult result = train_nc(channels, tc);
  std::ofstream os(model_out, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + model_out);
  save_nc_model(os, result.model);
  write_loss_csv(model_out + ".loss.csv", result.objective_history, "sum_rate");
}

namespace {

std::vector<MetricsRow> eval_estimation(const ExperimentConfig& cfg,
                                        const std::string& model_path,
                                        const ChannelDataset& ds,
                                        std::uint64_t seed, int workers) {
  FpnModel model = load_fpn_file(model_path);
  if (model.n_antennas != ds.n_antennas)
    throw DataError("cmd_eval: model antenna count does not match dataset");
  std::vector<MeasurementSpec> specs = specs_from_dataset(ds, cfg);
  if (model.n_measurements != specs.front().m())
    throw DataError("cmd_eval: model measurement count does not match dataset");
  const int count = static_cast<int>(ds.samples.size());
  const double snr = cfg.measurement.snr_db;
  const double tol = cfg.training.tol;
  const int max_iter = cfg.training.max_iter;

  std::vector<MetricsRow> rows;
  auto add_row = [&](const std::string& method, double value_db,
                     double runtime, long iters) {
    rows.push_back({cfg.scenario, method, ds.n_antennas, ds.n_users, snr,
                    "nmse_db", value_db, runtime, iters, seed});
  };

  // ls
  {
    std::vector<double> ratios(count), times(count);
    parallel_for(count, workers, [&](int i) {
      const CVec& h = ds.samples[static_cast<std::size_t>(i)].channels.col(0);
      CVec h_hat;
      times[static_cast<std::size_t>(i)] = time_once_ms([&] {
        h_hat = estimate_ls(specs[static_cast<std::size_t>(i)],
                            ds.samples[static_cast<std::size_t>(i)].observation);
      });
      ratios[static_cast<std::size_t>(i)] =
          (h_hat - h).squaredNorm() / h.squaredNorm();
    });
    add_row("ls", 10.0 * std::log10(mean(ratios)), median(times), 1);
  }

  // oamp_soft with grid-searched lambda
  {
    std::vector<double> grid;
    for (int i = 0; i < 15; ++i)
      grid.push_back(std::pow(10.0, -3.0 + i * (3.0 + std::log10(3.0)) / 14.0));
    double best_lambda = grid.front();
    double best_nmse = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
      std::vector<double> ratios(count);
      parallel_for(count, workers, [&](int i) {
        const auto& s = ds.samples[static_cast<std::size_t>(i)];
        EstimatorOutput out = estimate_oamp_soft(
            specs[static_cast<std::size_t>(i)], s.observation, lambda, tol,
            max_iter);
        ratios[static_cast<std::size_t>(i)] =
            (out.h_hat - s.channels.col(0)).squaredNorm() /
            s.channels.col(0).squaredNorm();
      });
      double nmse = mean(ratios);
      if (nmse < best_nmse) {
        best_nmse = nmse;
        best_lambda = lambda;
      }
    }
    std::vector<double> times(count), iters(count);
    parallel_for(count, workers, [&](int i) {
      const auto& s = ds.samples[static_cast<std::size_t>(i)];
      EstimatorOutput out;
      times[static_cast<std::size_t>(i)] = time_once_ms([&] {
        out = estimate_oamp_soft(specs[static_cast<std::size_t>(i)],
                                 s.observation, best_lambda, tol, max_iter);
      });
      iters[static_cast<std::size_t>(i)] = out.trace.iterations_used;
    });
    add_row("oamp_soft", 10.0 * std::log10(best_nmse), median(times),
            std::lround(median(iters)));
  }

  // fpn
  {
    std::vector<double> ratios(count), times(count), iters(count);
    parallel_for(count, workers, [&](int i) {
      const auto& s = ds.samples[static_cast<std::size_t>(i)];
      EstimatorOutput out;
      times[static_cast<std::size_t>(i)] = time_once_ms([&] {
        out = solve_fixed_point(model, specs[static_cast<std::size_t>(i)],
                                s.observation, CVec::Zero(ds.n_antennas), tol,
                                max_iter);
      });
      ratios[static_cast<std::size_t>(i)] =
          (out.h_hat - s.channels.col(0)).squaredNorm() /
          s.channels.col(0).squaredNorm();
      iters[static_cast<std::size_t>(i)] = out.trace.iterations_used;
    });
    add_row("fpn", 10.0 * std::log10(mean(ratios)), median(times),
            std::lround(median(iters)));
  }
  return rows;
}

std::vector<MetricsRow> eval_beamforming(const ExperimentConfig& cfg,
                                         const std::string& model_path,
                                         const std::string& data_path,
                                         std::uint64_t seed, int workers) {
  NcModel model = load_nc_file(model_path);
  ArrayGeometry g = make_geometry(cfg.geometry);
  if (model.n_antennas != g.size())
    throw DataError("cmd_eval: model antenna count does not match config");

  std::optional<ChannelDataset> ds;
  if (!data_path.empty()) {
    ds = load_dataset_file(data_path);
    if (ds->n_antennas != g.size())
      throw DataError("cmd_eval: dataset antenna count does not match config");
  }

  std::vector<MetricsRow> rows;
  for (double snr : cfg.eval.snr_grid) {
    for (int k : cfg.eval.user_counts) {
      std::vector<MultiUserChannel> set;
      if (ds && ds->n_users == k) {
        double noise = snr_to_noise_var(snr, 1.0);
        int take = std::min<int>(cfg.eval.n_test,
                                 static_cast<int>(ds->samples.size()));
        for (int i = 0; i < take; ++i)
          set.push_back({ds->samples[static_cast<std::size_t>(i)]
                             .channels.transpose(),
                         noise, 1.0});
      } else {
        set = make_downlink_set(cfg, k, cfg.eval.n_test, snr,
                                derive_seed(seed, 0xBF00 + static_cast<std::uint64_t>(k)));
      }
      const int count = static_cast<int>(set.size());

      struct MethodStats {
        std::vector<double> rates, times;
      };
      auto run_method = [&](const std::string& name, auto&& make_bf,
                            long iters) {
        MethodStats st;
        st.rates.resize(static_cast<std::size_t>(count));
        st.times.resize(static_cast<std::size_t>(count));
        // warm up on the first instance so lazy allocations do not skew
        // medians
        if (count > 0) {
          make_bf(set[0]);
          make_bf(set[0]);
        }
        parallel_for(count, workers, [&](int i) {
          Beamformer bf;
          st.times[static_cast<std::size_t>(i)] = time_once_ms(
              [&] { bf = make_bf(set[static_cast<std::size_t>(i)]); });
          st.rates[static_cast<std::size_t>(i)] =
              sum_rate(set[static_cast<std::size_t>(i)], bf);
        });
        rows.push_back({cfg.scenario, name, g.size(), k, snr, "sum_rate",
                        mean(st.rates), median(st.times), iters, seed});
      };

      run_method("zf", [](const MultiUserChannel& ch) {
        return zf_beamformer(ch);
      }, 1);
      run_method("mrt", [](const MultiUserChannel& ch) {
        return mrt_beamformer(ch);
      }, 1);
      run_method("wmmse", [](const MultiUserChannel& ch) {
        return wmmse(ch, kWmmseIters).beamformer;
      }, kWmmseIters);
      run_method("nc", [&](const MultiUserChannel& ch) {
        return nc_beamformer(model, ch);
      }, 1);
    }
  }
  return rows;
}

}  // namespace

std::vector<MetricsRow> cmd_eval(const ExperimentConfig& cfg,
                                 const std::string& model_path,
                                 const std::string& data_path,
                                 std::uint64_t seed, int workers) {
  std::string magic = peek_magic(model_path);
  if (magic == "NFFP") {
    if (data_path.empty())
      throw DataError("cmd_eval: estimation eval needs --data");
    ChannelDataset ds = load_dataset_file(data_path);
    return eval_estimation(cfg, model_path, ds, seed, workers);
  }
  if (magic == "NFNC")
    return eval_beamforming(cfg, model_path, data_path, seed, workers);
  throw DataError("cmd_eval: unrecognized model file magic");
}

std::vector<MetricsRow> cmd_ood(const ExperimentConfig& cfg,
                                const std::string& model_path,
                                const std::vector<std::string>& shifts,
                                std::uint64_t seed) {
  FpnModel model = load_fpn_file(model_path);
  ArrayGeometry g = make_geometry(cfg.geometry);
  if (model.n_antennas != g.size())
    throw DataError("cmd_ood: model antenna count does not match config");

  const std::uint64_t sensing_seed = derive_seed(seed, kSensingStream);
  auto evaluate = [&](const ExperimentConfig& c, std::uint64_t sseed,
                      const std::string& label) {
    EvalSet set = build_eval_set(c, c.eval.n_test, seed, sseed);
    int count = static_cast<int>(set.channels.size());
    std::vector<double> ratios(static_cast<std::size_t>(count));
    std::vector<double> iters(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      EstimatorOutput out = solve_fixed_point(
          model, set.spec, set.observations[static_cast<std::size_t>(i)],
          CVec::Zero(g.size()), cfg.training.tol, cfg.training.max_iter);
      ratios[static_cast<std::size_t>(i)] =
          (out.h_hat - set.channels[static_cast<std::size_t>(i)]).squaredNorm() /
          set.channels[static_cast<std::size_t>(i)].squaredNorm();
      iters[static_cast<std::size_t>(i)] = out.trace.iterations_used;
    }
    return MetricsRow{cfg.scenario + "/" + label, "fpn", g.size(), 1,
                      c.measurement.snr_db, "nmse_db",
                      10.0 * std::log10(mean(ratios)), 0.0,
                      std::lround(median(iters)), seed};
  };

  std::vector<MetricsRow> rows;
  rows.push_back(evaluate(cfg, sensing_seed, "matched"));
  for (const auto& text : shifts) {
    ShiftSpec shift = parse_shift(text);
    ExperimentConfig shifted = cfg;
    shifted.measurement.snr_db += shift.snr_delta;
    if (shift.near_fraction) shifted.channel.near_fraction = *shift.near_fraction;
    if (shift.paths_per_user) shifted.channel.paths_per_user = *shift.paths_per_user;
    if (shift.quantizer_on) shifted.measurement.quantizer = Quantizer::OneBit;
    std::uint64_t sseed =
        shift.resample_sensing ? derive_seed(seed, kSensingStream, 1) : sensing_seed;
    rows.push_back(evaluate(shifted, sseed, shift.name));
  }
  return rows;
}

std::vector<MetricsRow> cmd_bench(const ExperimentConfig& cfg,
                                  std::uint64_t seed) {
  EvalSet set = build_eval_set(cfg, 1, seed, derive_seed(seed, kSensingStream));
  const CVec& h = set.channels.front();
  const CVec& y = set.observations.front();
  FpnModel model = make_fpn_model(set.spec, fpn_train_config(cfg, seed));
  const CVec x0 = CVec::Zero(h.size());
  const double denom = h.squaredNorm();

  std::vector<MetricsRow> rows;
  for (int depth : {8, 16, 32, 64}) {
    // Implicit training step: solve (early stop disabled so the depth is
    // honored), keep only the fixed point, Neumann backward.
    IterateLedger fpn_ledger;
    auto fpn_step = [&](IterateLedger* ledger) {
      EstimatorOutput sol = solve_fixed_point(model, set.spec, y, x0, 1e-300,
                                              depth, ledger);
      Vec loss_grad = 2.0 * (stack_ri(sol.h_hat) - stack_ri(h)) / denom;
      // tol = inf skips the convergence precondition: the bench fixes the
      // iteration count instead of iterating to tolerance.
      GradBundle grads = implicit_backward(
          model, set.spec, y, sol.h_hat, loss_grad, cfg.training.neumann_k,
          std::numeric_limits<double>::infinity(), ledger);
      if (ledger) ledger->release(1);  // the retained fixed point
      (void)grads;
    };
    fpn_step(&fpn_ledger);
    double fpn_ms = median_runtime_ms([&] { fpn_step(nullptr); });
    rows.push_back({cfg.scenario, "fpn", model.n_antennas, 1,
                    cfg.measurement.snr_db, "memory_buffers",
                    static_cast<double>(fpn_ledger.peak), fpn_ms, depth, seed});

    IterateLedger unf_ledger;
    auto unfolded_step = [&](IterateLedger* ledger) {
      EstimatorOutput sol =
          solve_fixed_point(model, set.spec, y, x0, 1e-300, depth);
      Vec loss_grad = 2.0 * (stack_ri(sol.h_hat) - stack_ri(h)) / denom;
      GradBundle grads =
          unfolded_backward(model, set.spec, y, x0, depth, loss_grad, ledger);
      (void)grads;
    };
    unfolded_step(&unf_ledger);
    double unf_ms = median_runtime_ms([&] { unfolded_step(nullptr); });
    rows.push_back({cfg.scenario, "unfolded", model.n_antennas, 1,
                    cfg.measurement.snr_db, "memory_buffers",
                    static_cast<double>(unf_ledger.peak), unf_ms, depth, seed});
  }
  return rows;
}

}  // namespace nearfield
