// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/dataset.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "nearfield/errors.hpp"

namespace nearfield {

namespace {

constexpr char kMagic[4] = {'N', 'F', 'C', 'H'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!is) throw DataError("dataset stream truncated");
  return value;
}

void write_cmat(std::ostream& os, const CMat& m) {
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) {
      write_le(os, m(r, c).real());
      write_le(os, m(r, c).imag());
    }
}

void read_cmat(std::istream& is, CMat& m) {
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) {
      double re = read_le<double>(is);
      double im = read_le<double>(is);
      m(r, c) = Complex{re, im};
    }
}

}  // namespace

void save_dataset(std::ostream& os, const ChannelDataset& ds) {
  os.write(kMagic, 4);
  write_le(os, kVersion);
  write_le(os, static_cast<std::uint32_t>(ds.n_antennas));
  write_le(os, static_cast<std::uint32_t>(ds.n_users));
  write_le(os, static_cast<std::uint64_t>(ds.samples.size()));
  write_le(os, static_cast<std::uint8_t>(ds.has_pairs ? 1 : 0));
  for (const auto& s : ds.samples) {
    if (s.channels.rows() != ds.n_antennas || s.channels.cols() != ds.n_users)
      throw DataError("save_dataset: sample dims disagree with header");
    write_cmat(os, s.channels);
    if (ds.has_pairs) {
      write_le(os, static_cast<std::uint32_t>(s.observation.size()));
      for (int i = 0; i < s.observation.size(); ++i) {
        write_le(os, s.observation[i].real());
        write_le(os, s.observation[i].imag());
      }
      if (s.sensing.rows() != s.observation.size() ||
          s.sensing.cols() != ds.n_antennas)
        throw DataError("save_dataset: sensing dims disagree");
      write_cmat(os, s.sensing);
    }
  }
  if (!os) throw IoError("save_dataset: write failed");
}

ChannelDataset load_dataset(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("load_dataset: bad magic");
  if (read_le<std::uint16_t>(is) != kVersion)
    throw DataError("load_dataset: unsupported version");
  ChannelDataset ds;
  ds.n_antennas = static_cast<int>(read_le<std::uint32_t>(is));
  ds.n_users = static_cast<int>(read_le<std::uint32_t>(is));
  auto count = read_le<std::uint64_t>(is);
  ds.has_pairs = (read_le<std::uint8_t>(is) & 1) != 0;
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.channels.resize(ds.n_antennas, ds.n_users);
    read_cmat(is, s.channels);
    if (ds.has_pairs) {
      auto m = read_le<std::uint32_t>(is);
      s.observation.resize(m);
      for (std::uint32_t i = 0; i < m; ++i) {
        double re = read_le<double>(is);
        double im = read_le<double>(is);
        s.observation[i] = Complex{re, im};
      }
      s.sensing.resize(m, ds.n_antennas);
      read_cmat(is, s.sensing);
    }
  }
  return ds;
}

void save_dataset_file(const std::string& path, const ChannelDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  save_dataset(os, ds);
}

ChannelDataset load_dataset_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return load_dataset(is);
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for checksum: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (is) {
    is.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

}  // namespace nearfield
