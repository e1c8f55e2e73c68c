// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_BEAMFORMING_HPP
#define NEARFIELD_BEAMFORMING_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nearfield/linalg.hpp"
#include "nearfield/nn.hpp"

namespace nearfield {

/// Downlink multi-user channel. Row k of `h` is user k's channel.
struct MultiUserChannel {
  CMat h;                    // K x N
  double noise_power = 1.0;  // sigma^2 > 0
  double power_budget = 1.0; // P > 0

  int n_users() const { return static_cast<int>(h.rows()); }
  int n_antennas() const { return static_cast<int>(h.cols()); }
};

/// Precoding matrix; column k serves user k. ||W||_F^2 <= power budget.
struct Beamformer {
  CMat w;  // N x K
};

enum class NcBasis : std::uint8_t { Zf = 0, Mrt = 1 };

/// Shared user-wise calibration network feeding a cheap basis beamformer.
/// The same 2N -> 2N network is applied to every user's channel row, so the
/// construction is permutation-equivariant for any user count.
struct NcModel {
  Mlp calib;
  NcBasis basis = NcBasis::Zf;
  int n_antennas = 0;
};

/// Zero-forcing: W0 = H^H (H H^H)^{-1}, rescaled by one scalar so that
/// ||W||_F^2 equals the power budget exactly.
Beamformer zf_beamformer(const MultiUserChannel& ch);

/// Maximum ratio transmission: column k proportional to h_k^H with equal
/// per-user power P/K.
Beamformer mrt_beamformer(const MultiUserChannel& ch);

/// sum_k log2(1 + |h_k w_k|^2 / (sum_{j != k} |h_k w_j|^2 + sigma^2)).
double sum_rate(const MultiUserChannel& ch, const Beamformer& w);

struct WmmseResult {
  Beamformer beamformer;
  std::vector<double> rates;  // sum rate recorded after each iteration
};

/// Classical MISO weighted-MMSE block updates (receiver scalar, MSE weight,
/// transmit filter with the power multiplier found by bisection), started
/// from ZF (MRT if ZF is infeasible). The sum-rate upper-bound baseline.
WmmseResult wmmse(const MultiUserChannel& ch, int iters,
                  double bisect_tol = 1e-10);

/// Applies the calibration network to every channel row; noise and power
/// carry over unchanged.
MultiUserChannel nc_calibrate(const NcModel& model,
                              const MultiUserChannel& ch);

/// Basis beamformer (ZF by default) on the calibrated channel, normalized
/// to the original channel's power budget.
Beamformer nc_beamformer(const NcModel& model, const MultiUserChannel& ch);

struct NcTrainConfig {
  int epochs = 50;
  int batch = 8;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::vector<int> hidden_mult = {2};  // hidden dims = mult * 2N
  double residual_damping = 0.9;       // near-identity initialization
  double leaky_slope = 0.1;
  double init_scale = 0.1;
};

struct NcTrainResult {
  NcModel model;
  std::vector<double> objective_history;  // mean sum rate per epoch
};

/// Near-identity calibration network for the given antenna count.
NcModel make_nc_model(int n_antennas, const NcTrainConfig& cfg,
                      NcBasis basis = NcBasis::Zf);

/// Sum rate of the NC beamformer on one channel plus its exact gradient
/// w.r.t. the calibration parameters (through the differentiable basis).
double nc_rate_and_grad(const NcModel& model, const MultiUserChannel& ch,
                        GradBundle& grads);

/// Unsupervised training: gradient ascent on the mean sum rate of the NC
/// beamformer. User counts may vary across samples; antenna counts may not.
NcTrainResult train_nc(const std::vector<MultiUserChannel>& dataset,
                       const NcTrainConfig& cfg);

/// NC model container: magic "NFNC", version u16, N u32, basis u8, then the
/// nn_core-format calibration network.
void save_nc_model(std::ostream& os, const NcModel& model);
NcModel load_nc_model(std::istream& is);

}  // namespace nearfield

#endif  // NEARFIELD_BEAMFORMING_HPP
