// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/beamforming.hpp"

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

constexpr double kCondLimit = 1e12;
constexpr double kLn2 = 0.6931471805599453;

void validate_channel(const MultiUserChannel& ch) {
  if (ch.n_users() < 1) throw InvalidArgument("channel: K must be >= 1");
  if (!(ch.noise_power > 0.0))
    throw InvalidArgument("channel: noise_power must be > 0");
  if (!(ch.power_budget > 0.0))
    throw InvalidArgument("channel: power_budget must be > 0");
}

/// H^H (H H^H)^{-1} and the Gram inverse; throws when H H^H is too
/// ill-conditioned for a trustworthy pseudo-inverse.
struct ZfParts {
  CMat w0;       // N x K, unnormalized
  CMat gram_inv; // (H H^H)^{-1}
};

ZfParts zf_parts(const CMat& h) {
  CMat gram = h * h.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
  const Vec& lambda = eig.eigenvalues();
  double lmax = lambda(lambda.size() - 1);
  double lmin = lambda(0);
  if (lmin <= 0.0 || lmax / lmin > kCondLimit)
    throw IllConditioned("zf_beamformer: H H^H condition exceeds 1e12");
  CMat inv_gram = eig.eigenvectors() *
                  lambda.cwiseInverse().asDiagonal().toDenseMatrix().cast<Complex>() *
                  eig.eigenvectors().adjoint();
  return {h.adjoint() * inv_gram, inv_gram};
}

/// d(sum rate)/dA* for A = H W; the Wirtinger gradient used by both WMMSE
/// tests and the NC training path.
CMat rate_grad_wrt_products(const CMat& a, double noise_power) {
  const int k = static_cast<int>(a.rows());
  CMat g = CMat::Zero(k, k);
  for (int row = 0; row < k; ++row) {
    double total = noise_power;
    for (int j = 0; j < k; ++j) total += std::norm(a(row, j));
    double interference = total - std::norm(a(row, row));
    for (int j = 0; j < k; ++j) {
      if (j == row) {
        g(row, j) = a(row, j) / (kLn2 * total);
      } else {
        g(row, j) = a(row, j) * (1.0 / total - 1.0 / interference) / kLn2;
      }
    }
  }
  return g;
}

constexpr char kNcMagic[4] = {'N', 'F', 'N', 'C'};
constexpr std::uint16_t kNcVersion = 1;

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

}  // namespace

Beamformer zf_beamformer(const MultiUserChannel& ch) {
  validate_channel(ch);
  if (ch.n_users() > ch.n_antennas())
    throw InvalidArgument("zf_beamformer: requires K <= N");
  ZfParts parts = zf_parts(ch.h);
  double fro2 = parts.w0.squaredNorm();
  return {std::sqrt(ch.power_budget / fro2) * parts.w0};
}

Beamformer mrt_beamformer(const MultiUserChannel& ch) {
  validate_channel(ch);
  const int k = ch.n_users();
  const double per_user = std::sqrt(ch.power_budget / k);
  Beamformer bf;
  bf.w.resize(ch.n_antennas(), k);
  for (int j = 0; j < k; ++j) {
    double norm = ch.h.row(j).norm();
    if (norm == 0.0) throw InvalidArgument("mrt_beamformer: zero channel row");
    bf.w.col(j) = ch.h.row(j).adjoint() * (per_user / norm);
  }
  return bf;
}

double sum_rate(const MultiUserChannel& ch, const Beamformer& bf) {
  validate_channel(ch);
  if (bf.w.rows() != ch.n_antennas() || bf.w.cols() != ch.n_users())
    throw InvalidArgument("sum_rate: beamformer shape mismatch");
  CMat a = ch.h * bf.w;
  double rate = 0.0;
  for (int k = 0; k < ch.n_users(); ++k) {
    double signal = std::norm(a(k, k));
    double interference = ch.noise_power;
    for (int j = 0; j < ch.n_users(); ++j)
      if (j != k) interference += std::norm(a(k, j));
    rate += std::log2(1.0 + signal / interference);
  }
  return rate;
}

WmmseResult wmmse(const MultiUserChannel& ch, int iters, double bisect_tol) {
  validate_channel(ch);
  if (iters < 1) throw InvalidArgument("wmmse: iters must be >= 1");
  const int k = ch.n_users();
  const int n = ch.n_antennas();
  const double p = ch.power_budget;

  CMat w;
  if (k <= n) {
    try {
      w = zf_beamformer(ch).w;
    } catch (const IllConditioned&) {
      w = mrt_beamformer(ch).w;
    }
  } else {
    w = mrt_beamformer(ch).w;
  }

  WmmseResult result;
  for (int it = 0; it < iters; ++it) {
    CMat a = ch.h * w;  // a(k, j) = h_k w_j

    // Receiver scalars and MSE weights at the current transmit filter.
    CVec u(k);
    Vec weight(k);
    for (int row = 0; row < k; ++row) {
      double denom = ch.noise_power;
      for (int j = 0; j < k; ++j) denom += std::norm(a(row, j));
      u[row] = a(row, row) / denom;
      double mse = 1.0 - std::norm(a(row, row)) / denom;
      weight[row] = 1.0 / std::max(mse, 1e-300);
    }

    // Transmit update: w_j(mu) = lambda_j u_j (B + mu I)^{-1} h_j^H with B
    // eigendecomposed once; the power curve is then cheap in mu.
    CMat b = CMat::Zero(n, n);
    for (int row = 0; row < k; ++row)
      b += (weight[row] * std::norm(u[row])) * (ch.h.row(row).adjoint() *
                                                ch.h.row(row));
    Eigen::SelfAdjointEigenSolver<CMat> eig(b);
    const Vec& lam = eig.eigenvalues();
    const CMat& v = eig.eigenvectors();
    double lam_max = std::max(lam(lam.size() - 1), 0.0);
    double lam_floor = lam_max * 1e-14;

    CMat targets(n, k);  // hat c_j = V^H (lambda_j u_j h_j^H)
    for (int j = 0; j < k; ++j)
      targets.col(j) =
          v.adjoint() * (weight[j] * u[j] * ch.h.row(j).adjoint());

    auto power_at = [&](double mu) {
      double total = 0.0;
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) {
          double denom = lam(i) + mu;
          if (lam(i) <= lam_floor && mu == 0.0) continue;  // null space
          total += std::norm(targets(i, j)) / (denom * denom);
        }
      return total;
    };

    double mu = 0.0;
    if (power_at(0.0) > p) {
      double hi = 1.0;
      while (power_at(hi) > p) {
        hi *= 2.0;
        if (hi > 1e30) throw NumericError("wmmse: power bracket failed");
      }
      double lo = 0.0;
      for (int step = 0; step < 200; ++step) {
        mu = 0.5 * (lo + hi);
        double pw = power_at(mu);
        if (std::abs(pw - p) <= bisect_tol * p) break;
        (pw > p ? lo : hi) = mu;
      }
    }

    for (int j = 0; j < k; ++j) {
      CVec scaled(n);
      for (int i = 0; i < n; ++i) {
        double denom = lam(i) + mu;
        scaled[i] = (lam(i) <= lam_floor && mu == 0.0)
                        ? Complex{0.0, 0.0}
                        : targets(i, j) / denom;
      }
      w.col(j) = v * scaled;
    }
    result.rates.push_back(sum_rate(ch, {w}));
  }
  result.beamformer.w = std::move(w);
  return result;
}

NcModel make_nc_model(int n_antennas, const NcTrainConfig& cfg, NcBasis basis) {
  if (n_antennas < 1) throw InvalidArgument("make_nc_model: N must be >= 1");
  std::vector<int> dims;
  dims.push_back(2 * n_antennas);
  for (int mult : cfg.hidden_mult) dims.push_back(mult * 2 * n_antennas);
  dims.push_back(2 * n_antennas);
  NcModel model;
  model.calib = make_mlp(dims, cfg.leaky_slope, cfg.residual_damping,
                         /*lip_budget=*/0.0, cfg.seed, cfg.init_scale);
  model.basis = basis;
  model.n_antennas = n_antennas;
  return model;
}

MultiUserChannel nc_calibrate(const NcModel& model,
                              const MultiUserChannel& ch) {
  if (model.calib.input_dim() != 2 * ch.n_antennas())
    throw InvalidArgument("nc_calibrate: model/channel dimension mismatch");
  MultiUserChannel out = ch;
  for (int k = 0; k < ch.n_users(); ++k) {
    CVec row = ch.h.row(k).transpose();
    out.h.row(k) = unstack_ri(forward(model.calib, stack_ri(row))).transpose();
  }
  return out;
}

Beamformer nc_beamformer(const NcModel& model, const MultiUserChannel& ch) {
  MultiUserChannel calibrated = nc_calibrate(model, ch);
  Beamformer bf = (model.basis == NcBasis::Zf) ? zf_beamformer(calibrated)
                                               : mrt_beamformer(calibrated);
  double fro2 = bf.w.squaredNorm();
  bf.w *= std::sqrt(ch.power_budget / fro2);
  return bf;
}

double nc_rate_and_grad(const NcModel& model, const MultiUserChannel& ch,
                        GradBundle& grads) {
  validate_channel(ch);
  const int k = ch.n_users();
  const int n = ch.n_antennas();
  if (model.calib.input_dim() != 2 * n)
    throw InvalidArgument("nc_rate_and_grad: dimension mismatch");

  // Forward through the shared calibration network, keeping each user's
  // stacked input for the backward pass.
  std::vector<Vec> inputs(static_cast<std::size_t>(k));
  CMat calibrated(k, n);
  for (int row = 0; row < k; ++row) {
    inputs[static_cast<std::size_t>(row)] = stack_ri(ch.h.row(row).transpose());
    calibrated.row(row) =
        unstack_ri(forward(model.calib, inputs[static_cast<std::size_t>(row)]))
            .transpose();
  }

  const double p = ch.power_budget;
  CMat grad_calibrated(k, n);  // d(rate)/d(calibrated row)* per user
  double rate = 0.0;

  if (model.basis == NcBasis::Zf) {
    if (k > n) throw InvalidArgument("nc_rate_and_grad: ZF requires K <= N");
    ZfParts parts = zf_parts(calibrated);
    const CMat& w0 = parts.w0;
    double fro2 = w0.squaredNorm();
    double c = std::sqrt(p / fro2);
    CMat w = c * w0;

    CMat a = ch.h * w;
    rate = 0.0;
    for (int row = 0; row < k; ++row) {
      double total = ch.noise_power;
      for (int j = 0; j < k; ++j) total += std::norm(a(row, j));
      rate += std::log2(total / (total - std::norm(a(row, row))));
    }

    CMat omega = ch.h.adjoint() * rate_grad_wrt_products(a, ch.noise_power);

    // Through the scalar power normalization W = c(W0) W0.
    double inner = (omega.conjugate().cwiseProduct(w0)).sum().real();
    CMat psi = c * omega - (c * inner / fro2) * w0;

    // Through the pseudo-inverse W0 = G^H (G G^H)^{-1}:
    //   dW0 = (I - Pi) dG^H S^{-1} - W0 dG W0,
    // which in gradient form is
    //   grad_G = S^{-1} Psi^H (I - Pi) - W0^H Psi W0^H.
    CMat t1 = parts.gram_inv * psi.adjoint();          // K x N
    t1 -= (t1 * calibrated.adjoint()) * w0.adjoint();  // right-project by I-Pi
    CMat t2 = (w0.adjoint() * psi) * w0.adjoint();     // K x N
    grad_calibrated = t1 - t2;
  } else {
    // MRT basis: w_j = s * g_j^H / ||g_j||, s = sqrt(P/K).
    const double s = std::sqrt(p / k);
    CMat w(n, k);
    Vec norms(k);
    for (int j = 0; j < k; ++j) {
      norms[j] = calibrated.row(j).norm();
      if (norms[j] == 0.0)
        throw InvalidArgument("nc_rate_and_grad: zero calibrated row");
      w.col(j) = calibrated.row(j).adjoint() * (s / norms[j]);
    }
    CMat a = ch.h * w;
    Beamformer bf{w};
    rate = sum_rate(ch, bf);
    CMat omega = ch.h.adjoint() * rate_grad_wrt_products(a, ch.noise_power);
    for (int j = 0; j < k; ++j) {
      Eigen::RowVectorXcd g_row = calibrated.row(j);
      CVec psi_col = omega.col(j);
      double along = (g_row * psi_col)(0, 0).real();
      grad_calibrated.row(j) =
          (s / norms[j]) * psi_col.conjugate().transpose() -
          (s * along / std::pow(norms[j], 3)) * g_row;
    }
  }

  // Real-stacked upstream for each user, accumulated into the shared
  // network: d(rate)/d re = 2 Re(grad), d(rate)/d im = 2 Im(grad).
  grads = zero_grads(model.calib);
  for (int row = 0; row < k; ++row) {
    CVec g_row = grad_calibrated.row(row).transpose();
    Vec upstream(2 * n);
    upstream.head(n) = 2.0 * g_row.real();
    upstream.tail(n) = 2.0 * g_row.imag();
    grads.accumulate(
        backward(model.calib, inputs[static_cast<std::size_t>(row)], upstream));
  }
  return rate;
}

NcTrainResult train_nc(const std::vector<MultiUserChannel>& dataset,
                       const NcTrainConfig& cfg) {
  if (dataset.empty()) throw InvalidArgument("train_nc: empty dataset");
  const int n = dataset.front().n_antennas();
  for (const auto& ch : dataset)
    if (ch.n_antennas() != n)
      throw InvalidArgument("train_nc: all samples must share N");

  NcTrainResult result;
  result.model = make_nc_model(n, cfg);
  AdamState adam = make_adam(result.model.calib, cfg.lr);
  Rng shuffle_rng = Rng(cfg.seed).split(0x5c0fe);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = shuffle_rng.split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = epoch_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_rate = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::size_t batch_end =
          std::min(cursor + static_cast<std::size_t>(cfg.batch), order.size());
      GradBundle batch_grads = zero_grads(result.model.calib);
      int count = 0;
      for (std::size_t i = cursor; i < batch_end; ++i) {
        GradBundle sample_grads;
        double rate =
            nc_rate_and_grad(result.model, dataset[order[i]], sample_grads);
        if (!std::isfinite(rate))
          throw TrainingFailure("train_nc: non-finite objective");
        epoch_rate += rate;
        batch_grads.accumulate(sample_grads);
        ++count;
      }
      // Ascent on the mean rate = descent on its negation.
      batch_grads.scale(-1.0 / count);
      adam_step(result.model.calib, batch_grads, adam);
      cursor = batch_end;
    }
    result.objective_history.push_back(epoch_rate / dataset.size());
  }
  return result;
}

void save_nc_model(std::ostream& os, const NcModel& model) {
  os.write(kNcMagic, 4);
  write_le(os, kNcVersion);
  write_le(os, static_cast<std::uint32_t>(model.n_antennas));
  write_le(os, static_cast<std::uint8_t>(model.basis));
  save_mlp(os, model.calib);
}

NcModel load_nc_model(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kNcMagic, 4) != 0)
    throw DataError("load_nc_model: bad magic");
  if (read_le<std::uint16_t>(is) != kNcVersion)
    throw DataError("load_nc_model: unsupported version");
  NcModel model;
  model.n_antennas = static_cast<int>(read_le<std::uint32_t>(is));
  auto basis = read_le<std::uint8_t>(is);
  if (basis > 1) throw DataError("load_nc_model: bad basis tag");
  model.basis = static_cast<NcBasis>(basis);
  model.calib = load_mlp(is);
  if (model.calib.input_dim() != 2 * model.n_antennas)
    throw DataError("load_nc_model: calib dims inconsistent with header");
  return model;
}

}  // namespace nearfield
