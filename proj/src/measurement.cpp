// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/measurement.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "nearfield/errors.hpp"
#include "nearfield/rng.hpp"

namespace nearfield {

namespace {

double largest_singular_value(const CMat& a) {
  return a.jacobiSvd().singularValues()(0);
}

double sign_nonneg(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

MeasurementSpec build_sensing(const ArrayGeometry& g, int m, SensingKind kind,
                              std::uint64_t seed) {
  const int n = g.size();
  if (m < 1 || m > n)
    throw InvalidArgument("build_sensing: m must satisfy 1 <= m <= N");

  MeasurementSpec spec;
  spec.sensing.resize(m, n);
  Rng rng(seed);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (kind == SensingKind::Gaussian) {
        spec.sensing(i, j) = rng.cnormal(1.0 / n);
      } else {
        double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        spec.sensing(i, j) = std::polar(inv_sqrt_n, phi);
      }
    }
  }
  spec.compression_ratio = static_cast<double>(m) / n;
  spec.sensing_sigma_max = largest_singular_value(spec.sensing);
  return spec;
}

CVec observe(const MeasurementSpec& spec, const CVec& h, std::uint64_t seed) {
  if (h.size() != spec.sensing.cols())
    throw InvalidArgument("observe: channel length does not match sensing");
  CVec z = spec.sensing * h;
  if (spec.noise_var > 0.0) {
    Rng rng(seed);
    for (int i = 0; i < z.size(); ++i) z[i] += rng.cnormal(spec.noise_var);
  }
  if (spec.quantizer == Quantizer::OneBit) {
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < z.size(); ++i)
      z[i] = Complex{s * sign_nonneg(z[i].real()), s * sign_nonneg(z[i].imag())};
  }
  return z;
}

double snr_to_noise_var(double snr_db, double signal_power) {
  if (signal_power <= 0.0)
    throw InvalidArgument("snr_to_noise_var: signal_power must be > 0");
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

double bussgang_gain(const MeasurementSpec& spec, double signal_var) {
  if (spec.quantizer != Quantizer::OneBit)
    throw InvalidState("bussgang_gain: quantizer is not one_bit");
  double total = signal_var + spec.noise_var;
  if (total <= 0.0)
    throw InvalidArgument("bussgang_gain: signal_var + noise_var must be > 0");
  return std::sqrt(2.0 / std::numbers::pi) / std::sqrt(total);
}

MeasurementSpec effective_spec(const MeasurementSpec& spec, double signal_var) {
  if (spec.quantizer != Quantizer::OneBit) return spec;
  double rho = bussgang_gain(spec, signal_var);
  MeasurementSpec out = spec;
  out.sensing *= rho;
  out.sensing_sigma_max = spec.sensing_sigma_max * rho;
  return out;
}

}  // namespace nearfield
