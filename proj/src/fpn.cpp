// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/fpn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "nearfield/errors.hpp"
#include "nearfield/rng.hpp"

namespace nearfield {

namespace {

constexpr double kResidualNormFloor = 1e-12;
constexpr double kNmseFloorDb = -300.0;

void check_gamma(const MeasurementSpec& spec, double gamma) {
  double sigma = spec.sensing_sigma_max;
  if (!(gamma > 0.0) || !(gamma < 2.0 / (sigma * sigma)))
    throw InvalidArgument("le_step: gamma outside (0, 2/sigma_max(A)^2)");
}

/// NLE budget so that beta + (1-beta) * prod sigma <= lip_budget.
double denoiser_budget(double lip_budget, double residual_damping) {
  return (lip_budget - residual_damping) / (1.0 - residual_damping);
}

/// Adjoint of the LE map in stacked-real coordinates. I - gamma A^H A is
/// Hermitian, so the adjoint is the map itself.
Vec le_adjoint(const MeasurementSpec& spec, double gamma, const Vec& w) {
  CVec u = unstack_ri(w);
  CVec out = u - gamma * (spec.sensing.adjoint() * (spec.sensing * u));
  return stack_ri(out);
}

/// VJP of one full iteration w.r.t. x, evaluated with the denoiser input
/// r (stacked): J^T w = J_LE^T (J_NLE^T w).
Vec iteration_vjp(const FpnModel& model, const MeasurementSpec& eff,
                  const Vec& r_stacked, const Vec& w) {
  GradBundle g = backward(model.denoiser, r_stacked, w);
  return le_adjoint(eff, model.gamma, g.input_grad);
}

/// Neumann-truncated implicit gradient; assumes x_star is (numerically) a
/// fixed point. Shared by implicit_backward and the training loop.
GradBundle neumann_gradient(const FpnModel& model, const MeasurementSpec& eff,
                            const CVec& y, const CVec& x_star,
                            const Vec& loss_grad, int neumann_k,
                            IterateLedger* ledger) {
  Vec r_stacked = stack_ri(le_step(eff, y, x_star, model.gamma));
  if (ledger) ledger->acquire(2);  // v and the running VJP term
  Vec v = loss_grad;
  Vec w = loss_grad;
  for (int k = 0; k < neumann_k; ++k) {
    w = iteration_vjp(model, eff, r_stacked, w);
    v += w;
  }
  GradBundle out = backward(model.denoiser, r_stacked, v);
  out.input_grad = v;
  if (ledger) ledger->release(2);
  return out;
}

template <typename T>
void write_le(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!is) throw DataError("model stream truncated");
  return value;
}

constexpr char kFpnMagic[4] = {'N', 'F', 'F', 'P'};
constexpr std::uint16_t kFpnVersion = 1;

}  // namespace

FpnModel make_fpn_model(const MeasurementSpec& spec,
                        const FpnTrainConfig& cfg) {
  if (cfg.lip_budget <= cfg.residual_damping || cfg.lip_budget >= 1.0)
    throw InvalidArgument(
        "make_fpn_model: lip_budget must lie in (residual_damping, 1)");
  const int n = spec.n();
  std::vector<int> dims;
  dims.push_back(2 * n);
  for (int mult : cfg.hidden_mult) dims.push_back(mult * 2 * n);
  dims.push_back(2 * n);

  FpnModel model;
  model.denoiser =
      make_mlp(dims, cfg.leaky_slope, cfg.residual_damping,
               denoiser_budget(cfg.lip_budget, cfg.residual_damping), cfg.seed);
  model.lip_budget = cfg.lip_budget;
  model.n_antennas = n;
  model.n_measurements = spec.m();
  const MeasurementSpec eff = effective_spec(spec);
  model.gamma = 1.0 / (eff.sensing_sigma_max * eff.sensing_sigma_max);
  return model;
}

CVec le_step(const MeasurementSpec& spec, const CVec& y, const CVec& x,
             double gamma) {
  if (y.size() != spec.sensing.rows() || x.size() != spec.sensing.cols())
    throw InvalidArgument("le_step: dimension mismatch");
  check_gamma(spec, gamma);
  return x + gamma * (spec.sensing.adjoint() * (y - spec.sensing * x));
}

CVec nle_soft_threshold(const CVec& r, double lambda) {
  if (lambda < 0.0)
    throw InvalidArgument("nle_soft_threshold: lambda must be >= 0");
  CVec out(r.size());
  for (int i = 0; i < r.size(); ++i) {
    double mag = std::abs(r[i]);
    out[i] = (mag <= lambda || mag == 0.0)
                 ? Complex{0.0, 0.0}
                 : r[i] * (1.0 - lambda / mag);
  }
  return out;
}

CVec fpn_iteration(const FpnModel& model, const MeasurementSpec& spec,
                   const CVec& y, const CVec& x) {
  const MeasurementSpec eff = effective_spec(spec);
  CVec r = le_step(eff, y, x, model.gamma);
  return unstack_ri(forward(model.denoiser, stack_ri(r)));
}

EstimatorOutput iterate_to_fixed_point(
    const std::function<CVec(const CVec&)>& step, const CVec& x0, double tol,
    int max_iter, IterateLedger* ledger) {
  if (!(tol > 0.0)) throw InvalidArgument("iterate_to_fixed_point: tol <= 0");
  if (max_iter < 1)
    throw InvalidArgument("iterate_to_fixed_point: max_iter must be >= 1");

  if (ledger) ledger->acquire(2);  // current iterate and its successor
  EstimatorOutput out;
  CVec x = x0;
  for (int t = 0; t < max_iter; ++t) {
    CVec x_next = step(x);
    if (!x_next.allFinite())
      throw NumericError(
          "fixed-point iteration diverged (non-finite iterate); the "
          "contraction certificate does not hold");
    double residual =
        (x_next - x).norm() / std::max(x.norm(), kResidualNormFloor);
    out.trace.residuals.push_back(residual);
    out.trace.iterations_used = t + 1;
    x = std::move(x_next);
    if (residual < tol) {
      out.trace.converged = true;
      break;
    }
  }
  out.h_hat = std::move(x);
  if (ledger) ledger->release(1);  // successor buffer; the result stays live
  return out;
}

EstimatorOutput solve_fixed_point(const FpnModel& model,
                                  const MeasurementSpec& spec, const CVec& y,
                                  const CVec& x0, double tol, int max_iter,
                                  IterateLedger* ledger) {
  const MeasurementSpec eff = effective_spec(spec);
  auto step = [&](const CVec& x) {
    CVec r = le_step(eff, y, x, model.gamma);
    return unstack_ri(forward(model.denoiser, stack_ri(r)));
  };
  return iterate_to_fixed_point(step, x0, tol, max_iter, ledger);
}

Vec fpn_iteration_vjp(const FpnModel& model, const MeasurementSpec& spec,
                      const CVec& y, const CVec& x_star, const Vec& w) {
  const MeasurementSpec eff = effective_spec(spec);
  Vec r_stacked = stack_ri(le_step(eff, y, x_star, model.gamma));
  return iteration_vjp(model, eff, r_stacked, w);
}

GradBundle implicit_backward(const FpnModel& model, const MeasurementSpec& spec,
                             const CVec& y, const CVec& x_star,
                             const Vec& loss_grad, int neumann_k, double tol,
                             IterateLedger* ledger) {
  if (neumann_k < 0)
    throw InvalidArgument("implicit_backward: neumann_k must be >= 0");
  const MeasurementSpec eff = effective_spec(spec);
  CVec next = unstack_ri(
      forward(model.denoiser, stack_ri(le_step(eff, y, x_star, model.gamma))));
  double residual =
      (next - x_star).norm() / std::max(x_star.norm(), kResidualNormFloor);
  if (!(residual < tol))
    throw InvalidState(
        "implicit_backward: x_star is not a converged fixed point");
  return neumann_gradient(model, eff, y, x_star, loss_grad, neumann_k, ledger);
}

GradBundle unfolded_backward(const FpnModel& model, const MeasurementSpec& spec,
                             const CVec& y, const CVec& x0, int depth,
                             const Vec& loss_grad, IterateLedger* ledger) {
  if (depth < 1) throw InvalidArgument("unfolded_backward: depth must be >= 1");
  const MeasurementSpec eff = effective_spec(spec);

  // Forward sweep retains every iterate; this is the O(T) memory of
  // stored-state unfolded training.
  std::vector<CVec> iterates;
  iterates.reserve(static_cast<std::size_t>(depth) + 1);
  iterates.push_back(x0);
  if (ledger) ledger->acquire(1);
  for (int t = 0; t < depth; ++t) {
    CVec r = le_step(eff, y, iterates.back(), model.gamma);
    iterates.push_back(unstack_ri(forward(model.denoiser, stack_ri(r))));
    if (ledger) ledger->acquire(1);
  }

  GradBundle total = zero_grads(model.denoiser);
  if (ledger) ledger->acquire(1);  // adjoint vector
  Vec v = loss_grad;
  for (int t = depth - 1; t >= 0; --t) {
    Vec r_stacked = stack_ri(
        le_step(eff, y, iterates[static_cast<std::size_t>(t)], model.gamma));
    GradBundle step_grads = backward(model.denoiser, r_stacked, v);
    for (std::size_t l = 0; l < total.layers.size(); ++l) {
      total.layers[l].weight += step_grads.layers[l].weight;
      total.layers[l].bias += step_grads.layers[l].bias;
    }
    v = le_adjoint(eff, model.gamma, step_grads.input_grad);
  }
  total.input_grad = v;
  if (ledger) ledger->release(depth + 2);
  return total;
}

FpnTrainResult train_fpn(const std::vector<FpnSample>& dataset,
                         const FpnTrainConfig& cfg) {
  if (dataset.empty()) throw InvalidArgument("train_fpn: empty dataset");
  for (const auto& s : dataset)
    if (s.spec == nullptr) throw InvalidArgument("train_fpn: null spec");
  const MeasurementSpec& spec0 = *dataset.front().spec;

  FpnTrainResult result;
  result.model = make_fpn_model(spec0, cfg);
  FpnModel& model = result.model;
  const double nle_budget =
      denoiser_budget(cfg.lip_budget, cfg.residual_damping);
  AdamState adam = make_adam(model.denoiser, cfg.lr);
  Rng shuffle_rng = Rng(cfg.seed).split(0xba7c4);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Deterministic Fisher-Yates reshuffle per epoch.
    Rng epoch_rng = shuffle_rng.split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = epoch_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::size_t batch_end =
          std::min(cursor + static_cast<std::size_t>(cfg.batch), order.size());
      GradBundle batch_grads = zero_grads(model.denoiser);
      int batch_count = 0;
      for (std::size_t i = cursor; i < batch_end; ++i) {
        const FpnSample& sample = dataset[order[i]];
        const MeasurementSpec eff = effective_spec(*sample.spec);
        CVec x0 = CVec::Zero(sample.h_true.size());
        EstimatorOutput sol = solve_fixed_point(model, *sample.spec, sample.y,
                                                x0, cfg.tol, cfg.max_iter);
        Vec diff = stack_ri(sol.h_hat) - stack_ri(sample.h_true);
        double denom = sample.h_true.squaredNorm();
        if (denom <= 0.0) throw InvalidArgument("train_fpn: zero target");
        double loss = diff.squaredNorm() / denom;
        if (!std::isfinite(loss))
          throw TrainingFailure("train_fpn: non-finite loss");
        epoch_loss += loss;
        Vec loss_grad = 2.0 * diff / denom;
        batch_grads.accumulate(neumann_gradient(model, eff, sample.y,
                                                sol.h_hat, loss_grad,
                                                cfg.neumann_k, nullptr));
        ++batch_count;
      }
      batch_grads.scale(1.0 / batch_count);
      adam_step(model.denoiser, batch_grads, adam);
      project_lipschitz(model.denoiser, nle_budget);
      cursor = batch_end;
    }
    result.loss_history.push_back(epoch_loss / dataset.size());
  }
  return result;
}

CVec estimate_ls(const MeasurementSpec& spec, const CVec& y) {
  const MeasurementSpec eff = effective_spec(spec);
  if (y.size() != eff.sensing.rows())
    throw InvalidArgument("estimate_ls: dimension mismatch");
  CMat gram = eff.sensing * eff.sensing.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
  const Vec& lambda = eig.eigenvalues();
  double lmax = lambda(lambda.size() - 1);
  double lmin = lambda(0);
  if (lmin <= 0.0 || lmax / lmin > 1e12)
    throw IllConditioned("estimate_ls: A A^H condition exceeds 1e12");
  CVec t = eig.eigenvectors().adjoint() * y;
  t = t.cwiseQuotient(lambda.cast<Complex>());
  return eff.sensing.adjoint() * (eig.eigenvectors() * t);
}

EstimatorOutput estimate_oamp_soft(const MeasurementSpec& spec, const CVec& y,
                                   double lambda, double tol, int max_iter) {
  const MeasurementSpec eff = effective_spec(spec);
  double gamma = 1.0 / (eff.sensing_sigma_max * eff.sensing_sigma_max);
  auto step = [&](const CVec& x) {
    return nle_soft_threshold(le_step(eff, y, x, gamma), lambda);
  };
  return iterate_to_fixed_point(step, CVec::Zero(eff.sensing.cols()), tol,
                                max_iter);
}

double nmse_db(const CVec& h_hat, const CVec& h_true) {
  double denom = h_true.squaredNorm();
  if (denom <= 0.0) throw InvalidArgument("nmse_db: zero reference");
  double ratio = (h_hat - h_true).squaredNorm() / denom;
  double db = 10.0 * std::log10(ratio);
  return std::max(db, kNmseFloorDb);
}

void save_fpn_model(std::ostream& os, const FpnModel& model) {
  os.write(kFpnMagic, 4);
  write_le(os, kFpnVersion);
  write_le(os, model.gamma);
  write_le(os, model.lip_budget);
  write_le(os, static_cast<std::uint32_t>(model.n_antennas));
  write_le(os, static_cast<std::uint32_t>(model.n_measurements));
  save_mlp(os, model.denoiser);
}

FpnModel load_fpn_model(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kFpnMagic, 4) != 0)
    throw DataError("load_fpn_model: bad magic");
  if (read_le<std::uint16_t>(is) != kFpnVersion)
    throw DataError("load_fpn_model: unsupported version");
  FpnModel model;
  model.gamma = read_le<double>(is);
  model.lip_budget = read_le<double>(is);
  model.n_antennas = static_cast<int>(read_le<std::uint32_t>(is));
  model.n_measurements = static_cast<int>(read_le<std::uint32_t>(is));
  model.denoiser = load_mlp(is);
  if (model.denoiser.input_dim() != 2 * model.n_antennas)
    throw DataError("load_fpn_model: denoiser dims inconsistent with header");
  return model;
}

}  // namespace nearfield
