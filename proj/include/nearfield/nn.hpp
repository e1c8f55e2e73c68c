// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#ifndef NEARFIELD_NN_HPP
#define NEARFIELD_NN_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nearfield/linalg.hpp"

namespace nearfield {

struct DenseLayer {
  Mat weight;
  Vec bias;
};

/// Damped-residual multilayer perceptron
///   f(x) = beta x + (1 - beta) chain(x)
/// with leaky-ReLU between layers and identity on the last. The damping
/// gives the closed-form Lipschitz bound beta + (1 - beta) prod_i sigma_i,
/// the quantity project_lipschitz controls.
struct Mlp {
  std::vector<DenseLayer> layers;
  double leaky_slope = 0.1;       // in (0, 1]
  double residual_damping = 0.0;  // beta in [0, 1)

  int input_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
  }
  int output_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
  }
};

/// Gradient tensors mirroring an Mlp, plus the gradient w.r.t. the input.
struct GradBundle {
  std::vector<DenseLayer> layers;  // weight/bias gradients per layer
  Vec input_grad;

  void accumulate(const GradBundle& other);
  void scale(double s);
};

GradBundle zero_grads(const Mlp& net);

/// Xavier-uniform weights scaled by init_scale, zero biases, then projected
/// to the Lipschitz budget (skipped when budget <= 0, i.e. unconstrained).
Mlp make_mlp(const std::vector<int>& dims, double leaky_slope,
             double residual_damping, double lip_budget, std::uint64_t seed,
             double init_scale = 1.0);

Vec forward(const Mlp& net, const Vec& x);

/// Exact reverse-mode gradients of <upstream, forward(net, x)> w.r.t. all
/// parameters and x.
GradBundle backward(const Mlp& net, const Vec& x, const Vec& upstream);

/// Power-iteration estimate of the largest singular value. Deterministic
/// per seed.
double spectral_norm(const Mat& w, int iters = 20, std::uint64_t seed = 0x9e37);

/// beta + (1 - beta) prod_i sigma_max(W_i), the certified Lipschitz bound of
/// the forward map (leaky-ReLU is 1-Lipschitz).
double lipschitz_bound(const Mlp& net, int iters = 50);

/// If prod_i sigma_max(W_i) exceeds the budget, rescale every weight matrix
/// by (budget / prod)^{1/L}; otherwise leave the network untouched.
void project_lipschitz(Mlp& net, double budget);

struct AdamState {
  std::vector<DenseLayer> m;  // first moments
  std::vector<DenseLayer> v;  // second moments
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const Mlp& net, double lr = 1e-3);

/// Standard Adam update with bias correction; increments the step counter.
void adam_step(Mlp& net, const GradBundle& grads, AdamState& state);

/// Binary model format: magic "NFNN", version u16, layer count u16, then per
/// layer rows u32, cols u32, f64 weights row-major, f64 biases; finally f64
/// residual damping and f64 leaky slope. Little-endian throughout.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);

}  // namespace nearfield

#endif  // NEARFIELD_NN_HPP
