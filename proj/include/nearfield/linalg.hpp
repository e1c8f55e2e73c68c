// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_LINALG_HPP
#define NEARFIELD_LINALG_HPP

#include <Eigen/Dense>
#include <complex>

namespace nearfield {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Complex -> stacked real [Re; Im], length 2N. Networks operate on this
/// representation.
inline Vec stack_ri(const CVec& z) {
  Vec out(2 * z.size());
  out.head(z.size()) = z.real();
  out.tail(z.size()) = z.imag();
  return out;
}

/// Stacked real [Re; Im] -> complex, length N.
inline CVec unstack_ri(const Vec& x) {
  const Eigen::Index n = x.size() / 2;
  CVec out(n);
  out.real() = x.head(n);
  out.imag() = x.tail(n);
  return out;
}

}  // namespace nearfield

#endif  // NEARFIELD_LINALG_HPP
