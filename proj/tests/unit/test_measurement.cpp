// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nearfield/channel.hpp"
#include "nearfield/errors.hpp"
#include "nearfield/measurement.hpp"
#include "nearfield/rng.hpp"

using namespace nearfield;

namespace {

ArrayGeometry geo(int n) { return build_ula(n, 0.005, 0.01); }

}  // namespace

TEST_CASE("compression ratio bookkeeping") {
  ArrayGeometry g = geo(16);
  CHECK(build_sensing(g, 16, SensingKind::Gaussian, 1).compression_ratio ==
        doctest::Approx(1.0));
  CHECK(build_sensing(g, 8, SensingKind::Gaussian, 1).compression_ratio ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(build_sensing(g, 0, SensingKind::Gaussian, 1),
                  InvalidArgument);
  CHECK_THROWS_AS(build_sensing(g, 17, SensingKind::Gaussian, 1),
                  InvalidArgument);
}

TEST_CASE("unit modulus entries have magnitude 1/sqrt(N) exactly") {
  ArrayGeometry g = geo(16);
  MeasurementSpec spec = build_sensing(g, 8, SensingKind::UnitModulus, 3);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 16; ++j)
      CHECK(std::abs(spec.sensing(i, j)) == doctest::Approx(0.25));
}

TEST_CASE("gaussian frobenius normalization") {
  ArrayGeometry g = geo(32);
  double acc = 0.0;
  for (int s = 0; s < 200; ++s)
    acc += build_sensing(g, 16, SensingKind::Gaussian, 100 + s)
               .sensing.squaredNorm();
  CHECK(acc / 200 == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("noiseless observation is the linear map") {
  ArrayGeometry g = geo(12);
  MeasurementSpec spec = build_sensing(g, 6, SensingKind::UnitModulus, 9);
  Rng rng(4);
  CVec h(12);
  for (int i = 0; i < 12; ++i) h[i] = rng.cnormal(1.0);
  CVec z = observe(spec, h, 1);
  CHECK((z - spec.sensing * h).norm() == 0.0);

  CVec h2(12);
  for (int i = 0; i < 12; ++i) h2[i] = rng.cnormal(1.0);
  CVec sum = observe(spec, h + h2, 1);
  CHECK((sum - observe(spec, h, 1) - observe(spec, h2, 1)).norm() < 1e-12);

  CHECK_THROWS_AS(observe(spec, CVec::Zero(5), 1), InvalidArgument);
}

TEST_CASE("one-bit outputs lie on the qpsk points") {
  ArrayGeometry g = geo(12);
  MeasurementSpec spec = build_sensing(g, 6, SensingKind::UnitModulus, 9);
  spec.noise_var = 0.5;
  spec.quantizer = Quantizer::OneBit;
  Rng rng(8);
  CVec h(12);
  for (int i = 0; i < 12; ++i) h[i] = rng.cnormal(1.0);
  CVec z = observe(spec, h, 77);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(z[i]) == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(z[i].real()) - s) < 1e-15);
    CHECK(std::abs(std::abs(z[i].imag()) - s) < 1e-15);
  }
}

TEST_CASE("noise law monte carlo") {
  ArrayGeometry g = geo(4);
  MeasurementSpec spec = build_sensing(g, 2, SensingKind::UnitModulus, 5);
  const double sigma2 = 0.37;
  spec.noise_var = sigma2;
  CVec h = CVec::Zero(4);
  double acc = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    CVec z = observe(spec, h, 1000 + i);
    acc += z.squaredNorm() / 2.0;
  }
  CHECK(acc / draws == doctest::Approx(sigma2).epsilon(0.05));
}

TEST_CASE("observation is seed deterministic and seeds decorrelate") {
  ArrayGeometry g = geo(4);
  MeasurementSpec spec = build_sensing(g, 2, SensingKind::UnitModulus, 5);
  spec.noise_var = 1.0;
  CVec h = CVec::Zero(4);
  CHECK((observe(spec, h, 42) - observe(spec, h, 42)).norm() == 0.0);

  const int draws = 10000;
  double s_ab = 0.0, s_aa = 0.0, s_bb = 0.0;
  for (int i = 0; i < draws; ++i) {
    double a = observe(spec, h, i)[0].real();
    double b = observe(spec, h, 1000000 + i)[0].real();
    s_ab += a * b;
    s_aa += a * a;
    s_bb += b * b;
  }
  CHECK(std::abs(s_ab / std::sqrt(s_aa * s_bb)) < 0.05);
}

TEST_CASE("snr to noise variance") {
  CHECK(snr_to_noise_var(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(snr_to_noise_var(5.0, 1.0) == doctest::Approx(0.31622776601));
  CHECK(snr_to_noise_var(10.0, 2.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(snr_to_noise_var(0.0, 0.0), InvalidArgument);
}

TEST_CASE("bussgang gain") {
  ArrayGeometry g = geo(4);
  MeasurementSpec spec = build_sensing(g, 2, SensingKind::UnitModulus, 5);
  CHECK_THROWS_AS(bussgang_gain(spec, 1.0), InvalidState);
  spec.quantizer = Quantizer::OneBit;
  spec.noise_var = 0.0;
  CHECK(bussgang_gain(spec, 2.0 / std::numbers::pi) == doctest::Approx(1.0));
  CHECK(bussgang_gain(spec, 1.0) == doctest::Approx(0.7978845608));
  spec.noise_var = 0.5;
  double g1 = bussgang_gain(spec, 1.0);
  spec.noise_var = 1.0;
  double g2 = bussgang_gain(spec, 1.0);
  CHECK(g2 < g1);
}

TEST_CASE("effective spec scales sensing by the bussgang gain") {
  ArrayGeometry g = geo(8);
  MeasurementSpec spec = build_sensing(g, 4, SensingKind::UnitModulus, 5);
  spec.noise_var = 0.3;

  MeasurementSpec same = effective_spec(spec);
  CHECK((same.sensing - spec.sensing).norm() == 0.0);

  spec.quantizer = Quantizer::OneBit;
  MeasurementSpec eff = effective_spec(spec, 1.0);
  double rho = bussgang_gain(spec, 1.0);
  CHECK((eff.sensing - rho * spec.sensing).norm() < 1e-15);
  CHECK(eff.sensing_sigma_max ==
        doctest::Approx(rho * spec.sensing_sigma_max));
}
