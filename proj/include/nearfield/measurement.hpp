// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_MEASUREMENT_HPP
#define NEARFIELD_MEASUREMENT_HPP

#include <cstdint>

#include "nearfield/geometry.hpp"
#include "nearfield/linalg.hpp"

namespace nearfield {

enum class SensingKind { Gaussian, UnitModulus };
enum class Quantizer { None, OneBit };

/// Pilot observation model y = Q(A h + n). The hybrid analog-digital
/// combiner is modeled as a single effective M x N matrix with pilot
/// symbols absorbed.
struct MeasurementSpec {
  CMat sensing;                        // M x N
  double noise_var = 0.0;              // per complex dimension, >= 0
  Quantizer quantizer = Quantizer::None;
  double compression_ratio = 1.0;      // M / N
  double sensing_sigma_max = 0.0;      // cached largest singular value of A

  int m() const { return static_cast<int>(sensing.rows()); }
  int n() const { return static_cast<int>(sensing.cols()); }
};

/// Random M x N sensing matrix. Gaussian entries are CN(0, 1/N) so that
/// E||A||_F^2 = M; unit-modulus entries are e^{j phi}/sqrt(N) with phi
/// uniform (analog phase shifters). Noise variance and quantizer are left
/// unset. Deterministic per seed.
MeasurementSpec build_sensing(const ArrayGeometry& g, int m, SensingKind kind,
                              std::uint64_t seed);

/// One pilot observation: z = A h + n with circular complex Gaussian noise,
/// then the quantizer. One-bit outputs lie on {+-1 +- j}/sqrt(2).
CVec observe(const MeasurementSpec& spec, const CVec& h, std::uint64_t seed);

/// Noise variance delivering the requested SNR on the given signal power.
double snr_to_noise_var(double snr_db, double signal_power);

/// Bussgang linearization gain of the one-bit quantizer under a Gaussian
/// input of the given per-component variance: Q(z) ~ rho z + d with d
/// uncorrelated with z, rho = sqrt(2/pi) / sqrt(signal_var + noise_var).
double bussgang_gain(const MeasurementSpec& spec, double signal_var);

/// Spec whose sensing matrix is pre-scaled by the Bussgang gain so that
/// linear estimators remain consistent under one-bit quantization.
/// No-op for the unquantized model.
MeasurementSpec effective_spec(const MeasurementSpec& spec,
                               double signal_var = 1.0);

}  // namespace nearfield

#endif  // NEARFIELD_MEASUREMENT_HPP
