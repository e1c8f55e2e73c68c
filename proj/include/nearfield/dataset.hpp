// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_DATASET_HPP
#define NEARFIELD_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nearfield/linalg.hpp"

namespace nearfield {

struct DatasetSample {
  CMat channels;     // N x K, column k = user k
  CVec observation;  // length M; only when the dataset carries pairs
  CMat sensing;      // M x N; only when the dataset carries pairs
};

/// Channel dataset, optionally with (observation, sensing matrix) pairs for
/// estimation experiments. Binary format: magic "NFCH", version u16 = 1,
/// N u32, K u32, count u64, flags u8 (bit0: has pairs); per sample K*N
/// complex f64 (interleaved re/im, column-major by user) and, when flagged,
/// M u32 + M complex observations + the M x N sensing matrix column-major.
/// Little-endian throughout.
struct ChannelDataset {
  int n_antennas = 0;
  int n_users = 0;
  bool has_pairs = false;
  std::vector<DatasetSample> samples;
};

void save_dataset(std::ostream& os, const ChannelDataset& ds);
ChannelDataset load_dataset(std::istream& is);

void save_dataset_file(const std::string& path, const ChannelDataset& ds);
ChannelDataset load_dataset_file(const std::string& path);

/// FNV-1a over a file's bytes; the checksum `gen` prints.
std::uint64_t file_checksum(const std::string& path);

}  // namespace nearfield

#endif  // NEARFIELD_DATASET_HPP
