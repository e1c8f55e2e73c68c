// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_FPN_HPP
#define NEARFIELD_FPN_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "nearfield/linalg.hpp"
#include "nearfield/measurement.hpp"
#include "nearfield/nn.hpp"

namespace nearfield {

/// Counts simultaneously live iterate-sized buffers. The fixed-point solver
/// and the unfolded comparator register their stored iterates here, so the
/// O(1)-vs-O(T) training-memory comparison is a deterministic count rather
/// than a noisy RSS reading.
struct IterateLedger {
  int live = 0;
  int peak = 0;

  void acquire(int n = 1) {
    live += n;
    peak = std::max(peak, live);
  }
  void release(int n = 1) { live -= n; }
};

/// FPN-OAMP estimator: the linear estimator is kept intact and the
/// non-linear estimator is a Lipschitz-budgeted damped-residual denoiser on
/// the stacked-real representation. One application is one fixed-point
/// iteration.
struct FpnModel {
  Mlp denoiser;            // 2N -> 2N
  double gamma = 0.0;      // LE step size, in (0, 2/sigma_max(A)^2)
  double lip_budget = 0.9; // certified contraction of the NLE, in (0, 1)
  int n_antennas = 0;
  int n_measurements = 0;
};

struct FixedPointTrace {
  std::vector<double> residuals;  // ||x_{t+1} - x_t|| / max(||x_t||, eps)
  int iterations_used = 0;
  bool converged = false;
};

struct EstimatorOutput {
  CVec h_hat;
  FixedPointTrace trace;
};

/// Denoiser hidden widths as multiples of 2N; the compiled-in architecture
/// of both the FPN denoiser and its training entry points.
struct FpnTrainConfig {
  int epochs = 10;
  int batch = 16;
  double lr = 1e-3;
  double tol = 1e-4;
  int max_iter = 64;
  int neumann_k = 1;
  double lip_budget = 0.9;
  std::uint64_t seed = 1;
  std::vector<int> hidden_mult = {2, 2};  // hidden dims = mult * 2N
  double residual_damping = 0.5;
  double leaky_slope = 0.1;
};

struct FpnSample {
  const MeasurementSpec* spec = nullptr;  // not owned
  CVec y;
  CVec h_true;
};

struct FpnTrainResult {
  FpnModel model;
  std::vector<double> loss_history;  // mean NMSE (linear) per epoch
};

/// Fresh model for the given observation model: denoiser initialized within
/// the NLE budget, gamma = 1 / sigma_max(A)^2.
FpnModel make_fpn_model(const MeasurementSpec& spec, const FpnTrainConfig& cfg);

/// Gradient-descent linear estimator r = x + gamma A^H (y - A x). The map
/// x -> r has Lipschitz constant sigma_max(I - gamma A^H A) <= 1 for valid
/// gamma. Pass a Bussgang-scaled spec for the one-bit model.
CVec le_step(const MeasurementSpec& spec, const CVec& y, const CVec& x,
             double gamma);

/// Elementwise complex soft threshold r * max(1 - lambda/|r|, 0).
CVec nle_soft_threshold(const CVec& r, double lambda);

/// One contraction iteration x' = NLE(LE(x)). Applies Bussgang scaling
/// internally when the spec carries a one-bit quantizer.
CVec fpn_iteration(const FpnModel& model, const MeasurementSpec& spec,
                   const CVec& y, const CVec& x);

/// Banach iteration of an arbitrary map; the FPN solver is this applied to
/// fpn_iteration. Residuals are relative with floor eps = 1e-12.
EstimatorOutput iterate_to_fixed_point(
    const std::function<CVec(const CVec&)>& step, const CVec& x0, double tol,
    int max_iter, IterateLedger* ledger = nullptr);

EstimatorOutput solve_fixed_point(const FpnModel& model,
                                  const MeasurementSpec& spec, const CVec& y,
                                  const CVec& x0, double tol = 1e-4,
                                  int max_iter = 64,
                                  IterateLedger* ledger = nullptr);

/// Vector-Jacobian product of one fpn_iteration w.r.t. x, evaluated at
/// x_star, in stacked-real coordinates: returns J^T w. The building block of
/// the implicit gradient; exposed so tests can assemble J explicitly.
Vec fpn_iteration_vjp(const FpnModel& model, const MeasurementSpec& spec,
                      const CVec& y, const CVec& x_star, const Vec& w);

/// Implicit (Neumann-truncated) gradient at a converged fixed point:
///   v = sum_{k=0..neumann_k} (J^T)^k loss_grad
/// by repeated VJPs of one iteration, then the parameter gradients of the
/// denoiser with upstream v. Stores no intermediate iterate. loss_grad is
/// the stacked-real gradient of the loss at x_star; the returned bundle's
/// input_grad holds v.
GradBundle implicit_backward(const FpnModel& model, const MeasurementSpec& spec,
                             const CVec& y, const CVec& x_star,
                             const Vec& loss_grad, int neumann_k,
                             double tol = 1e-4,
                             IterateLedger* ledger = nullptr);

/// Stored-state comparator: unrolls `depth` iterations from x0, keeps every
/// iterate, and backpropagates through the whole chain. Same iteration map
/// as the FPN; O(depth) retained buffers by construction.
GradBundle unfolded_backward(const FpnModel& model, const MeasurementSpec& spec,
                             const CVec& y, const CVec& x0, int depth,
                             const Vec& loss_grad,
                             IterateLedger* ledger = nullptr);

/// Train by solving the fixed point per sample, loss = ||x* - h||^2/||h||^2,
/// implicit gradients, Adam, and a Lipschitz projection after every step so
/// the contraction certificate holds throughout.
FpnTrainResult train_fpn(const std::vector<FpnSample>& dataset,
                         const FpnTrainConfig& cfg);

/// Minimum-norm least squares A^H (A A^H)^{-1} y (Bussgang-scaled under
/// one-bit quantization).
CVec estimate_ls(const MeasurementSpec& spec, const CVec& y);

/// Classical OAMP baseline: LE + complex soft threshold, fixed lambda.
EstimatorOutput estimate_oamp_soft(const MeasurementSpec& spec, const CVec& y,
                                   double lambda, double tol = 1e-4,
                                   int max_iter = 64);

/// 10 log10(||h_hat - h||^2 / ||h||^2), floored at -300 dB.
double nmse_db(const CVec& h_hat, const CVec& h_true);

/// FPN model container: magic "NFFP", version u16, gamma f64, lip_budget
/// f64, N u32, M u32, then the nn_core-format denoiser.
void save_fpn_model(std::ostream& os, const FpnModel& model);
FpnModel load_fpn_model(std::istream& is);

}  // namespace nearfield

#endif  // NEARFIELD_FPN_HPP
