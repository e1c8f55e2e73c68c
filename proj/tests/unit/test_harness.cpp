// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nearfield/errors.hpp"
#include "nearfield/harness.hpp"

using namespace nearfield;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("nearfield_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

/// Small estimation scenario that trains in well under a second.
ExperimentConfig tiny_estimation_config() {
  ExperimentConfig cfg = parse_config(R"({
    "scenario": "tiny",
    "geometry": {"kind": "ula", "n": 8},
    "channel": {"n_users": 1, "paths_per_user": 2, "near_fraction": 0.5,
                "distance_range": [0.2, 1.0]},
    "measurement": {"compression_ratio": 0.5, "snr_db": 5.0},
    "training": {"epochs": 2, "batch": 4, "max_iter": 32},
    "eval": {"n_test": 8}
  })");
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("minimal file takes documented defaults") {
    ExperimentConfig cfg = parse_config("{}");
    CHECK(cfg.scenario == "default");
    CHECK(cfg.geometry.n == 64);
    CHECK(cfg.measurement.compression_ratio == doctest::Approx(0.5));
    CHECK(cfg.training.lip_budget == doctest::Approx(0.9));
    CHECK(cfg.training.neumann_k == 1);
    CHECK(cfg.eval.user_counts == std::vector<int>{8});
  }

  SUBCASE("constraint violations name the field") {
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"measurement": {"compression_ratio": 1.5}})"),
        doctest::Contains("compression_ratio"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"training": {"lip_budget": 1.0}})"),
                         doctest::Contains("lip_budget"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"channel": {"near_fraction": 2}})"),
                         doctest::Contains("near_fraction"), ConfigError);
  }

  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"blah": 1})"),
                         doctest::Contains("blah"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"geometry": {"m": 4}})"),
                         doctest::Contains("geometry.m"), ConfigError);
  }

  SUBCASE("parse errors surface as config errors") {
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  }

  SUBCASE("round trip is canonical") {
    std::string messy = R"({
      "scenario": "roundtrip",
      "training": {"epochs": 3, "lr": 0.002},
      "geometry": {"kind": "upa", "nx": 4, "ny": 2}
    })";
    std::string canonical = config_to_json(parse_config(messy));
    CHECK(config_to_json(parse_config(canonical)) == canonical);
  }
}

TEST_CASE("gen writes deterministic datasets") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_estimation_config();

  SUBCASE("header-only when n_test = 0") {
    cfg.eval.n_test = 0;
    GenResult res = cmd_gen(cfg, tmp.file("empty.nfch"), 1);
    CHECK(res.count == 0);
    ChannelDataset ds = load_dataset_file(tmp.file("empty.nfch"));
    CHECK(ds.samples.empty());
    CHECK(ds.n_antennas == 8);
  }

  SUBCASE("same seed gives byte-identical files") {
    GenResult a = cmd_gen(cfg, tmp.file("a.nfch"), 7);
    GenResult b = cmd_gen(cfg, tmp.file("b.nfch"), 7);
    GenResult c = cmd_gen(cfg, tmp.file("c.nfch"), 8);
    CHECK(a.checksum == b.checksum);
    CHECK(a.checksum != c.checksum);
    CHECK(slurp(tmp.file("a.nfch")) == slurp(tmp.file("b.nfch")));
  }

  SUBCASE("header dims match the config") {
    cmd_gen(cfg, tmp.file("d.nfch"), 7);
    ChannelDataset ds = load_dataset_file(tmp.file("d.nfch"));
    CHECK(ds.n_antennas == 8);
    CHECK(ds.n_users == 1);
    CHECK(ds.has_pairs);
    CHECK(ds.samples.size() == 8);
    CHECK(ds.samples[0].observation.size() == 4);
    CHECK(ds.samples[0].sensing.rows() == 4);
    CHECK(ds.samples[0].sensing.cols() == 8);
  }

  SUBCASE("multi-user paired generation is rejected") {
    cfg.channel.n_users = 3;
    CHECK_THROWS_AS(cmd_gen(cfg, tmp.file("x.nfch"), 1, true), DataError);
    // channels-only works
    GenResult res = cmd_gen(cfg, tmp.file("bf.nfch"), 1);
    CHECK(res.count == 8);
    CHECK(!load_dataset_file(tmp.file("bf.nfch")).has_pairs);
  }
}

TEST_CASE("train commands write model and loss history") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_estimation_config();
  cmd_gen(cfg, tmp.file("train.nfch"), 3);

  SUBCASE("fpn") {
    cmd_train_fpn(cfg, tmp.file("train.nfch"), tmp.file("fpn.nfm"), 3);
    CHECK(fs::exists(tmp.file("fpn.nfm")));
    std::string loss = slurp(tmp.file("fpn.nfm") + ".loss.csv");
    CHECK(loss.substr(0, 11) == "epoch,loss\n");
    // one line per epoch plus header
    CHECK(std::count(loss.begin(), loss.end(), '\n') == cfg.training.epochs + 1);

    cmd_train_fpn(cfg, tmp.file("train.nfch"), tmp.file("fpn2.nfm"), 3);
    CHECK(slurp(tmp.file("fpn.nfm")) == slurp(tmp.file("fpn2.nfm")));
  }

  SUBCASE("nc") {
    ExperimentConfig bf = cfg;
    bf.channel.n_users = 3;
    bf.training.epochs = 2;
    cmd_gen(bf, tmp.file("bf.nfch"), 4);
    cmd_train_nc(bf, tmp.file("bf.nfch"), tmp.file("nc.nfm"), 4);
    CHECK(fs::exists(tmp.file("nc.nfm")));
    CHECK(fs::exists(tmp.file("nc.nfm") + ".loss.csv"));
    cmd_train_nc(bf, tmp.file("bf.nfch"), tmp.file("nc2.nfm"), 4);
    CHECK(slurp(tmp.file("nc.nfm")) == slurp(tmp.file("nc2.nfm")));
  }
}

TEST_CASE("eval emits the stable csv schema") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_estimation_config();
  cmd_gen(cfg, tmp.file("train.nfch"), 3);
  cmd_train_fpn(cfg, tmp.file("train.nfch"), tmp.file("fpn.nfm"), 3);
  std::vector<MetricsRow> rows =
      cmd_eval(cfg, tmp.file("fpn.nfm"), tmp.file("train.nfch"), 3);

  REQUIRE(rows.size() == 3);
  CHECK(rows[0].method == "ls");
  CHECK(rows[1].method == "oamp_soft");
  CHECK(rows[2].method == "fpn");
  for (const auto& r : rows) {
    CHECK(r.metric_name == "nmse_db");
    CHECK(r.n_antennas == 8);
    CHECK(r.runtime_ms >= 0.0);
  }

  std::ostringstream os;
  write_metrics_csv(os, rows);
  std::string text = os.str();
  CHECK(text.substr(0, text.find('\n')) ==
        "experiment,method,n_antennas,n_users,snr_db,metric_name,value,"
        "runtime_ms,iterations,seed");

  SUBCASE("workers do not change values") {
    std::vector<MetricsRow> par =
        cmd_eval(cfg, tmp.file("fpn.nfm"), tmp.file("train.nfch"), 3, 2);
    REQUIRE(par.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      CHECK(par[i].value == doctest::Approx(rows[i].value).epsilon(1e-12));
  }

  SUBCASE("incompatible model fails fast") {
    ExperimentConfig big = cfg;
    big.geometry.n = 16;
    cmd_gen(big, tmp.file("big.nfch"), 5);
    CHECK_THROWS_AS(
        cmd_eval(cfg, tmp.file("fpn.nfm"), tmp.file("big.nfch"), 3),
        DataError);
  }
}

TEST_CASE("ls on a noiseless full-rank observation is near exact") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_estimation_config();
  cfg.measurement.compression_ratio = 1.0;
  cfg.measurement.snr_db = 300.0;  // effectively noiseless
  cmd_gen(cfg, tmp.file("full.nfch"), 11);
  cmd_train_fpn(cfg, tmp.file("full.nfch"), tmp.file("fpn.nfm"), 11);
  std::vector<MetricsRow> rows =
      cmd_eval(cfg, tmp.file("fpn.nfm"), tmp.file("full.nfch"), 11);
  CHECK(rows[0].method == "ls");
  CHECK(rows[0].value <= -120.0);
}

TEST_CASE("beamforming eval covers every method/user-count cell") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_estimation_config();
  cfg.scenario = "bf";
  cfg.channel.n_users = 2;
  cfg.eval.n_test = 4;
  cfg.eval.user_counts = {2, 3};
  cfg.eval.snr_grid = {10.0};
  cfg.training.epochs = 1;
  cmd_gen(cfg, tmp.file("bf.nfch"), 6);
  cmd_train_nc(cfg, tmp.file("bf.nfch"), tmp.file("nc.nfm"), 6);
  std::vector<MetricsRow> rows =
      cmd_eval(cfg, tmp.file("nc.nfm"), tmp.file("bf.nfch"), 6);
  REQUIRE(rows.size() == 8);  // 4 methods x 2 user counts x 1 snr
  for (int k : {2, 3})
    for (const std::string& method : {"zf", "mrt", "wmmse", "nc"}) {
      int found = 0;
      for (const auto& r : rows)
        if (r.method == method && r.n_users == k &&
            r.metric_name == "sum_rate")
          ++found;
      CHECK(found == 1);
    }
}

TEST_CASE("ood shift bookkeeping") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_estimation_config();
  cmd_gen(cfg, tmp.file("train.nfch"), 3);
  cmd_train_fpn(cfg, tmp.file("train.nfch"), tmp.file("fpn.nfm"), 3);

  SUBCASE("empty shift list gives the matched row only") {
    std::vector<MetricsRow> rows = cmd_ood(cfg, tmp.file("fpn.nfm"), {}, 3);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].experiment == "tiny/matched");
  }

  SUBCASE("null snr shift equals matched") {
    std::vector<MetricsRow> rows =
        cmd_ood(cfg, tmp.file("fpn.nfm"), {"snr_delta:0"}, 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].value == doctest::Approx(rows[0].value));
  }

  SUBCASE("five shifts give six rows") {
    std::vector<MetricsRow> rows = cmd_ood(
        cfg, tmp.file("fpn.nfm"),
        {"snr_delta:-5", "near_fraction:0.8", "paths_per_user:4",
         "resample_sensing", "quantizer_on"},
        3);
    CHECK(rows.size() == 6);
  }

  SUBCASE("unknown shifts are config errors") {
    CHECK_THROWS_AS(cmd_ood(cfg, tmp.file("fpn.nfm"), {"bogus"}, 3),
                    ConfigError);
    CHECK_THROWS_AS(cmd_ood(cfg, tmp.file("fpn.nfm"), {"near_fraction"}, 3),
                    ConfigError);
  }
}

TEST_CASE("bench shows constant fpn memory and growing unfolded memory") {
  ExperimentConfig cfg = tiny_estimation_config();
  std::vector<MetricsRow> rows = cmd_bench(cfg, 3);
  REQUIRE(rows.size() == 8);  // {fpn, unfolded} x 4 depths
  double fpn_at_8 = 0, fpn_at_64 = 0, unf_at_8 = 0, unf_at_64 = 0;
  for (const auto& r : rows) {
    REQUIRE(r.metric_name == "memory_buffers");
    if (r.method == "fpn" && r.iterations == 8) fpn_at_8 = r.value;
    if (r.method == "fpn" && r.iterations == 64) fpn_at_64 = r.value;
    if (r.method == "unfolded" && r.iterations == 8) unf_at_8 = r.value;
    if (r.method == "unfolded" && r.iterations == 64) unf_at_64 = r.value;
  }
  CHECK(fpn_at_64 / fpn_at_8 <= 1.2);
  CHECK(unf_at_64 / unf_at_8 >= 4.0);
}

TEST_CASE("dataset io rejects malformed input") {
  std::stringstream bad(std::ios::in | std::ios::out | std::ios::binary);
  bad << "JUNKJUNKJUNK";
  CHECK_THROWS_AS(load_dataset(bad), DataError);

  std::stringstream truncated(std::ios::in | std::ios::out | std::ios::binary);
  truncated << "NFCH";
  CHECK_THROWS_AS(load_dataset(truncated), DataError);
}
