// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nearfield/errors.hpp"

namespace nearfield {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& block,
                         const std::set<std::string>& known) {
  for (const auto& [key, _] : obj.items())
    if (!known.contains(key))
      throw ConfigError("unknown key '" + block + "." + key + "'");
}

template <typename T>
void read_field(const json& obj, const std::string& block,
                const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + block + "." + key + "'");
  }
}

void fail_field(const std::string& block, const std::string& key,
                const std::string& why) {
  throw ConfigError("invalid '" + block + "." + key + "': " + why);
}

GeometryBlock parse_geometry(const json& obj) {
  reject_unknown_keys(obj, "geometry",
                      {"kind", "n", "nx", "ny", "spacing_in_wavelengths",
                       "carrier_hz"});
  GeometryBlock g;
  std::string kind = "ula";
  read_field(obj, "geometry", "kind", kind);
  if (kind == "ula")
    g.kind = ArrayKind::Ula;
  else if (kind == "upa")
    g.kind = ArrayKind::Upa;
  else
    fail_field("geometry", "kind", "must be 'ula' or 'upa'");
  read_field(obj, "geometry", "n", g.n);
  read_field(obj, "geometry", "nx", g.nx);
  read_field(obj, "geometry", "ny", g.ny);
  read_field(obj, "geometry", "spacing_in_wavelengths",
             g.spacing_in_wavelengths);
  read_field(obj, "geometry", "carrier_hz", g.carrier_hz);
  if (g.kind == ArrayKind::Ula && g.n < 1)
    fail_field("geometry", "n", "must be >= 1");
  if (g.kind == ArrayKind::Upa && (g.nx < 1 || g.ny < 1))
    fail_field("geometry", "nx/ny", "must be >= 1");
  if (g.spacing_in_wavelengths <= 0.0)
    fail_field("geometry", "spacing_in_wavelengths", "must be > 0");
  if (g.carrier_hz <= 0.0) fail_field("geometry", "carrier_hz", "must be > 0");
  return g;
}

ChannelConfig parse_channel(const json& obj) {
  reject_unknown_keys(obj, "channel",
                      {"n_users", "paths_per_user", "near_fraction",
                       "distance_range", "gain_model", "non_stationary",
                       "visible_region_len"});
  ChannelConfig c;
  read_field(obj, "channel", "n_users", c.n_users);
  read_field(obj, "channel", "paths_per_user", c.paths_per_user);
  read_field(obj, "channel", "near_fraction", c.near_fraction);
  if (obj.contains("distance_range")) {
    std::vector<double> range;
    read_field(obj, "channel", "distance_range", range);
    if (range.size() != 2)
      fail_field("channel", "distance_range", "must be [min, max]");
    c.distance_min = range[0];
    c.distance_max = range[1];
  }
  std::string gain = "complex_gaussian";
  read_field(obj, "channel", "gain_model", gain);
  if (gain == "unit")
    c.gain_model = GainModel::Unit;
  else if (gain == "complex_gaussian")
    c.gain_model = GainModel::ComplexGaussian;
  else
    fail_field("channel", "gain_model", "must be 'unit' or 'complex_gaussian'");
  read_field(obj, "channel", "non_stationary", c.non_stationary);
  read_field(obj, "channel", "visible_region_len", c.visible_region_len);
  if (c.n_users < 1) fail_field("channel", "n_users", "must be >= 1");
  if (c.paths_per_user < 1)
    fail_field("channel", "paths_per_user", "must be >= 1");
  if (c.near_fraction < 0.0 || c.near_fraction > 1.0)
    fail_field("channel", "near_fraction", "must be in [0, 1]");
  if (c.distance_min <= 0.0 || c.distance_max < c.distance_min)
    fail_field("channel", "distance_range", "requires 0 < min <= max");
  if (c.non_stationary && c.visible_region_len < 1)
    fail_field("channel", "visible_region_len",
               "must be >= 1 when non_stationary");
  return c;
}

MeasurementBlock parse_measurement(const json& obj) {
  reject_unknown_keys(obj, "measurement",
                      {"compression_ratio", "kind", "snr_db", "quantizer"});
  MeasurementBlock m;
  read_field(obj, "measurement", "compression_ratio", m.compression_ratio);
  std::string kind = "unit_modulus";
  read_field(obj, "measurement", "kind", kind);
  if (kind == "gaussian")
    m.kind = SensingKind::Gaussian;
  else if (kind == "unit_modulus")
    m.kind = SensingKind::UnitModulus;
  else
    fail_field("measurement", "kind", "must be 'gaussian' or 'unit_modulus'");
  read_field(obj, "measurement", "snr_db", m.snr_db);
  std::string quant = "none";
  read_field(obj, "measurement", "quantizer", quant);
  if (quant == "none")
    m.quantizer = Quantizer::None;
  else if (quant == "one_bit")
    m.quantizer = Quantizer::OneBit;
  else
    fail_field("measurement", "quantizer", "must be 'none' or 'one_bit'");
  if (m.compression_ratio <= 0.0 || m.compression_ratio > 1.0)
    fail_field("measurement", "compression_ratio", "must be in (0, 1]");
  return m;
}

TrainingBlock parse_training(const json& obj) {
  reject_unknown_keys(obj, "training",
                      {"epochs", "batch", "lr", "lip_budget", "neumann_k",
                       "tol", "max_iter", "seed"});
  TrainingBlock t;
  read_field(obj, "training", "epochs", t.epochs);
  read_field(obj, "training", "batch", t.batch);
  read_field(obj, "training", "lr", t.lr);
  read_field(obj, "training", "lip_budget", t.lip_budget);
  read_field(obj, "training", "neumann_k", t.neumann_k);
  read_field(obj, "training", "tol", t.tol);
  read_field(obj, "training", "max_iter", t.max_iter);
  read_field(obj, "training", "seed", t.seed);
  if (t.epochs < 1) fail_field("training", "epochs", "must be >= 1");
  if (t.batch < 1) fail_field("training", "batch", "must be >= 1");
  if (t.lr <= 0.0) fail_field("training", "lr", "must be > 0");
  if (t.lip_budget <= 0.0 || t.lip_budget >= 1.0)
    fail_field("training", "lip_budget", "must be in (0, 1)");
  if (t.neumann_k < 0) fail_field("training", "neumann_k", "must be >= 0");
  if (t.tol <= 0.0) fail_field("training", "tol", "must be > 0");
  if (t.max_iter < 1) fail_field("training", "max_iter", "must be >= 1");
  return t;
}

EvalBlock parse_eval(const json& obj) {
  reject_unknown_keys(obj, "eval", {"n_test", "user_counts", "snr_grid"});
  EvalBlock e;
  read_field(obj, "eval", "n_test", e.n_test);
  read_field(obj, "eval", "user_counts", e.user_counts);
  read_field(obj, "eval", "snr_grid", e.snr_grid);
  if (e.n_test < 0) fail_field("eval", "n_test", "must be >= 0");
  for (int k : e.user_counts)
    if (k < 1) fail_field("eval", "user_counts", "entries must be >= 1");
  return e;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  reject_unknown_keys(root, "config",
                      {"scenario", "geometry", "channel", "measurement",
                       "training", "eval"});
  ExperimentConfig cfg;
  read_field(root, "config", "scenario", cfg.scenario);
  if (root.contains("geometry")) cfg.geometry = parse_geometry(root["geometry"]);
  if (root.contains("channel")) cfg.channel = parse_channel(root["channel"]);
  if (root.contains("measurement"))
    cfg.measurement = parse_measurement(root["measurement"]);
  if (root.contains("training")) cfg.training = parse_training(root["training"]);
  if (root.contains("eval")) cfg.eval = parse_eval(root["eval"]);

  // Cross-block validation the modules would otherwise only catch at run
  // time: the visible region must fit the array.
  const int n = (cfg.geometry.kind == ArrayKind::Ula)
                    ? cfg.geometry.n
                    : cfg.geometry.nx * cfg.geometry.ny;
  if (cfg.channel.non_stationary && cfg.channel.visible_region_len > n)
    throw ConfigError("invalid 'channel.visible_region_len': exceeds element count");
  if (static_cast<int>(cfg.measurement.compression_ratio * n) < 1)
    throw ConfigError("invalid 'measurement.compression_ratio': M would be 0");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["scenario"] = cfg.scenario;
  json& g = root["geometry"];
  g["kind"] = cfg.geometry.kind == ArrayKind::Ula ? "ula" : "upa";
  if (cfg.geometry.kind == ArrayKind::Ula) {
    g["n"] = cfg.geometry.n;
  } else {
    g["nx"] = cfg.geometry.nx;
    g["ny"] = cfg.geometry.ny;
  }
  g["spacing_in_wavelengths"] = cfg.geometry.spacing_in_wavelengths;
  g["carrier_hz"] = cfg.geometry.carrier_hz;

  json& c = root["channel"];
  c["n_users"] = cfg.channel.n_users;
  c["paths_per_user"] = cfg.channel.paths_per_user;
  c["near_fraction"] = cfg.channel.near_fraction;
  c["distance_range"] = {cfg.channel.distance_min, cfg.channel.distance_max};
  c["gain_model"] =
      cfg.channel.gain_model == GainModel::Unit ? "unit" : "complex_gaussian";
  c["non_stationary"] = cfg.channel.non_stationary;
  c["visible_region_len"] = cfg.channel.visible_region_len;

  json& m = root["measurement"];
  m["compression_ratio"] = cfg.measurement.compression_ratio;
  m["kind"] = cfg.measurement.kind == SensingKind::Gaussian ? "gaussian"
                                                            : "unit_modulus";
  m["snr_db"] = cfg.measurement.snr_db;
  m["quantizer"] =
      cfg.measurement.quantizer == Quantizer::OneBit ? "one_bit" : "none";

  json& t = root["training"];
  t["epochs"] = cfg.training.epochs;
  t["batch"] = cfg.training.batch;
  t["lr"] = cfg.training.lr;
  t["lip_budget"] = cfg.training.lip_budget;
  t["neumann_k"] = cfg.training.neumann_k;
  t["tol"] = cfg.training.tol;
  t["max_iter"] = cfg.training.max_iter;
  t["seed"] = cfg.training.seed;

  json& e = root["eval"];
  e["n_test"] = cfg.eval.n_test;
  e["user_counts"] = cfg.eval.user_counts;
  e["snr_grid"] = cfg.eval.snr_grid;

  return root.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << config_to_json(cfg);
  if (!os) throw IoError("config write failed: " + path);
}

ArrayGeometry make_geometry(const GeometryBlock& block) {
  const double wavelength = 299792458.0 / block.carrier_hz;
  const double spacing = block.spacing_in_wavelengths * wavelength;
  if (block.kind == ArrayKind::Ula)
    return build_ula(block.n, spacing, wavelength);
  return build_upa(block.nx, block.ny, spacing, wavelength);
}

}  // namespace nearfield
