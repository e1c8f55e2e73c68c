// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nearfield/errors.hpp"
#include "nearfield/geometry.hpp"
#include "nearfield/rng.hpp"

using namespace nearfield;

TEST_CASE("ula positions and aperture") {
  ArrayGeometry g1 = build_ula(1, 0.005, 0.01);
  CHECK(g1.size() == 1);
  CHECK(g1.element_positions[0].norm() == doctest::Approx(0.0));
  CHECK(g1.aperture == doctest::Approx(0.0));

  ArrayGeometry g2 = build_ula(2, 0.005, 0.01);
  CHECK(g2.element_positions[0].x() == doctest::Approx(-0.0025));
  CHECK(g2.element_positions[1].x() == doctest::Approx(0.0025));
  CHECK(g2.aperture == doctest::Approx(0.005));

  // (n - 1) * spacing evaluated directly
  ArrayGeometry g101 = build_ula(101, 0.005, 0.01);
  CHECK(g101.aperture == doctest::Approx(100 * 0.005));

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : g101.element_positions) centroid += p;
  CHECK(centroid.norm() / g101.size() < 1e-15);
}

TEST_CASE("ula rejects bad arguments") {
  CHECK_THROWS_AS(build_ula(0, 0.1, 0.1), InvalidArgument);
  CHECK_THROWS_AS(build_ula(4, -0.1, 0.1), InvalidArgument);
  CHECK_THROWS_AS(build_ula(4, 0.1, 0.0), InvalidArgument);
}

TEST_CASE("upa degenerate cases match the ula") {
  ArrayGeometry upa1 = build_upa(1, 1, 0.005, 0.01);
  ArrayGeometry ula1 = build_ula(1, 0.005, 0.01);
  CHECK(upa1.size() == 1);
  CHECK((upa1.element_positions[0] - ula1.element_positions[0]).norm() == 0.0);

  ArrayGeometry upa = build_upa(4, 1, 0.005, 0.01);
  ArrayGeometry ula = build_ula(4, 0.005, 0.01);
  REQUIRE(upa.size() == ula.size());
  for (int i = 0; i < 4; ++i)
    CHECK((upa.element_positions[i] - ula.element_positions[i]).norm() == 0.0);
}

TEST_CASE("2x2 upa aperture is the grid diagonal") {
  ArrayGeometry g = build_upa(2, 2, 0.005, 0.01);
  CHECK(g.size() == 4);
  CHECK(g.aperture == doctest::Approx(0.005 * std::sqrt(2.0)));
}

TEST_CASE("rayleigh distance") {
  CHECK(rayleigh_distance(build_ula(1, 0.005, 0.01)) == doctest::Approx(0.0));
  // 2 * 0.5^2 / 0.01
  CHECK(rayleigh_distance(build_ula(101, 0.005, 0.01)) ==
        doctest::Approx(50.0));
  // quadratic scaling in the aperture
  ArrayGeometry a = build_ula(11, 0.01, 0.02);
  ArrayGeometry b = build_ula(21, 0.01, 0.02);  // double aperture
  CHECK(rayleigh_distance(b) == doctest::Approx(4.0 * rayleigh_distance(a)));
}

TEST_CASE("steer_far broadside and phase") {
  ArrayGeometry g = build_ula(8, 0.005, 0.01);
  CVec a = steer_far(g, 0.0);
  for (int i = 0; i < 8; ++i) {
    CHECK(a[i].real() == doctest::Approx(1.0 / std::sqrt(8.0)));
    CHECK(a[i].imag() == doctest::Approx(0.0));
  }

  // n=2, d = lambda/2, sin(az) = 1: entries (1/sqrt(2)) {e^{+j pi/2}, e^{-j pi/2}}
  ArrayGeometry g2 = build_ula(2, 0.005, 0.01);
  CVec a2 = steer_far(g2, std::numbers::pi / 2);
  Complex expected0 = std::polar(1.0 / std::sqrt(2.0), std::numbers::pi / 2);
  Complex expected1 = std::polar(1.0 / std::sqrt(2.0), -std::numbers::pi / 2);
  CHECK(std::abs(a2[0] - expected0) < 1e-12);
  CHECK(std::abs(a2[1] - expected1) < 1e-12);

  // self-coherence
  CVec a3 = steer_far(g, 0.4);
  CHECK(std::abs(a3.dot(a3)) == doctest::Approx(1.0));
}

TEST_CASE("steer_near construction") {
  ArrayGeometry g = build_ula(16, 0.005, 0.01);
  CVec a = steer_near(g, 0.3, 0.0, 2.0);
  CHECK(a.norm() == doctest::Approx(1.0));
  for (int i = 0; i < 16; ++i)
    CHECK(std::abs(a[i]) == doctest::Approx(1.0 / 4.0));

  ArrayGeometry g1 = build_ula(1, 0.005, 0.01);
  CVec single = steer_near(g1, 0.7, 0.0, 3.0);
  CHECK(std::abs(single[0] - Complex{1.0, 0.0}) < 1e-15);

  CHECK_THROWS_AS(steer_near(g, 0.1, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(steer_near(g, 0.1, 0.0, -1.0), InvalidArgument);
}

TEST_CASE("far-field limit of the spherical wavefront") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 4 + static_cast<int>(rng.uniform_index(29));
    double wavelength = rng.uniform(0.005, 0.05);
    double spacing = 0.5 * wavelength;
    ArrayGeometry g = (trial % 2 == 0)
                          ? build_ula(n, spacing, wavelength)
                          : build_upa(n, 2, spacing, wavelength);
    double az = std::asin(rng.uniform(-0.95, 0.95));
    double el =
        g.kind == ArrayKind::Upa ? std::asin(rng.uniform(-0.95, 0.95)) : 0.0;
    double far = 1e6 * rayleigh_distance(g);
    CHECK((steer_near(g, az, el, far) - steer_far(g, az, el)).norm() <= 1e-3);
  }
}

TEST_CASE("spherical curvature is material inside the near field") {
  // at r = 0.05 rayleigh the planar approximation must break down for some
  // nonzero angle
  ArrayGeometry g = build_ula(64, 0.005, 0.01);
  double r = 0.05 * rayleigh_distance(g);
  double worst = 0.0;
  for (double az : {0.2, 0.5, 0.9, 1.2}) {
    double gap = (steer_near(g, az, 0.0, r) - steer_far(g, az, 0.0)).norm();
    worst = std::max(worst, gap);
  }
  CHECK(worst >= 1e-2);
}

TEST_CASE("permuting elements permutes steering entries identically") {
  ArrayGeometry g = build_ula(12, 0.007, 0.014);
  ArrayGeometry permuted = g;
  std::vector<int> perm(12);
  Rng rng(7);
  for (int i = 0; i < 12; ++i) perm[i] = i;
  for (int i = 11; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  for (int i = 0; i < 12; ++i)
    permuted.element_positions[i] = g.element_positions[perm[i]];

  CVec far = steer_far(g, 0.33);
  CVec far_p = steer_far(permuted, 0.33);
  CVec near = steer_near(g, 0.33, 0.0, 3.0);
  CVec near_p = steer_near(permuted, 0.33, 0.0, 3.0);
  for (int i = 0; i < 12; ++i) {
    CHECK(std::abs(far_p[i] - far[perm[i]]) < 1e-15);
    CHECK(std::abs(near_p[i] - near[perm[i]]) < 1e-15);
  }
}
