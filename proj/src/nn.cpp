// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "nearfield/nn.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "nearfield/errors.hpp"
#include "nearfield/rng.hpp"

namespace nearfield {

namespace {

void check_dims(const Mlp& net) {
  if (net.layers.empty()) throw InvalidArgument("Mlp has no layers");
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l)
    if (net.layers[l + 1].weight.cols() != net.layers[l].weight.rows())
      throw InvalidArgument("Mlp layer dimensions do not chain");
  if (net.residual_damping > 0.0 &&
      net.layers.front().weight.cols() != net.layers.back().weight.rows())
    throw InvalidArgument(
        "Mlp with residual damping requires input_dim == output_dim");
}

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
double leaky_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

struct ForwardTrace {
  std::vector<Vec> pre;   // pre-activations a_l per layer
  std::vector<Vec> post;  // post-activations z_l, post[0] = input
};

ForwardTrace run_forward(const Mlp& net, const Vec& x) {
  const std::size_t depth = net.layers.size();
  ForwardTrace t;
  t.pre.resize(depth);
  t.post.resize(depth + 1);
  t.post[0] = x;
  for (std::size_t l = 0; l < depth; ++l) {
    t.pre[l] = net.layers[l].weight * t.post[l] + net.layers[l].bias;
    if (l + 1 < depth) {
      t.post[l + 1] = t.pre[l].unaryExpr(
          [s = net.leaky_slope](double v) { return leaky(v, s); });
    } else {
      t.post[l + 1] = t.pre[l];  // identity on the last layer
    }
  }
  return t;
}

template <typename Writer>
void write_le(std::ostream& os, Writer value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!is) throw DataError("model stream truncated");
  return value;
}

constexpr char kMagic[4] = {'N', 'F', 'N', 'N'};
constexpr std::uint16_t kFormatVersion = 1;

}  // namespace

void GradBundle::accumulate(const GradBundle& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  if (input_grad.size() == other.input_grad.size())
    input_grad += other.input_grad;
}

void GradBundle::scale(double s) {
  for (auto& layer : layers) {
    layer.weight *= s;
    layer.bias *= s;
  }
  input_grad *= s;
}

GradBundle zero_grads(const Mlp& net) {
  GradBundle g;
  g.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers)
    g.layers.push_back({Mat::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vec::Zero(layer.bias.size())});
  g.input_grad = Vec::Zero(net.input_dim());
  return g;
}

Mlp make_mlp(const std::vector<int>& dims, double leaky_slope,
             double residual_damping, double lip_budget, std::uint64_t seed,
             double init_scale) {
  if (dims.size() < 2) throw InvalidArgument("make_mlp: need >= 2 dims");
  if (leaky_slope <= 0.0 || leaky_slope > 1.0)
    throw InvalidArgument("make_mlp: leaky_slope must be in (0, 1]");
  if (residual_damping < 0.0 || residual_damping >= 1.0)
    throw InvalidArgument("make_mlp: residual_damping must be in [0, 1)");

  Mlp net;
  net.leaky_slope = leaky_slope;
  net.residual_damping = residual_damping;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int fan_in = dims[l];
    int fan_out = dims[l + 1];
    double bound = std::sqrt(6.0 / (fan_in + fan_out)) * init_scale;
    DenseLayer layer;
    layer.weight.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vec::Zero(fan_out);
    net.layers.push_back(std::move(layer));
  }
  check_dims(net);
  if (lip_budget > 0.0) project_lipschitz(net, lip_budget);
  return net;
}

Vec forward(const Mlp& net, const Vec& x) {
  check_dims(net);
  if (x.size() != net.input_dim())
    throw InvalidArgument("forward: input length mismatch");
  ForwardTrace t = run_forward(net, x);
  Vec y = t.post.back();
  double beta = net.residual_damping;
  if (beta > 0.0) return beta * x + (1.0 - beta) * y;
  return y;
}

GradBundle backward(const Mlp& net, const Vec& x, const Vec& upstream) {
  check_dims(net);
  if (x.size() != net.input_dim())
    throw InvalidArgument("backward: input length mismatch");
  if (upstream.size() != net.output_dim())
    throw InvalidArgument("backward: upstream length mismatch");

  const std::size_t depth = net.layers.size();
  const double beta = net.residual_damping;
  ForwardTrace t = run_forward(net, x);

  GradBundle g = zero_grads(net);
  Vec dz = (1.0 - beta) * upstream;
  for (std::size_t l = depth; l-- > 0;) {
    Vec da = dz;
    if (l + 1 < depth) {
      for (int i = 0; i < da.size(); ++i)
        da[i] *= leaky_grad(t.pre[l][i], net.leaky_slope);
    }
    g.layers[l].weight = da * t.post[l].transpose();
    g.layers[l].bias = da;
    dz = net.layers[l].weight.transpose() * da;
  }
  g.input_grad = dz;
  if (beta > 0.0) g.input_grad += beta * upstream;
  return g;
}

double spectral_norm(const Mat& w, int iters, std::uint64_t seed) {
  if (w.size() == 0) throw InvalidArgument("spectral_norm: empty matrix");
  if (iters < 1) throw InvalidArgument("spectral_norm: iters must be >= 1");
  Rng rng(seed);
  Vec v(w.cols());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
  double vnorm = v.norm();
  if (vnorm == 0.0) return 0.0;
  v /= vnorm;
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec u = w * v;
    double unorm = u.norm();
    if (unorm < 1e-300) return 0.0;
    u /= unorm;
    v = w.transpose() * u;
    sigma = v.norm();
    if (sigma < 1e-300) return 0.0;
    v /= sigma;
  }
  return sigma;
}

double lipschitz_bound(const Mlp& net, int iters) {
  double prod = 1.0;
  for (const auto& layer : net.layers)
    prod *= spectral_norm(layer.weight, iters);
  double beta = net.residual_damping;
  return beta + (1.0 - beta) * prod;
}

void project_lipschitz(Mlp& net, double budget) {
  if (budget <= 0.0)
    throw InvalidArgument("project_lipschitz: budget must be > 0");
  double prod = 1.0;
  for (const auto& layer : net.layers)
    prod *= spectral_norm(layer.weight, 50);
  if (prod <= budget) return;
  double factor =
      std::pow(budget / prod, 1.0 / static_cast<double>(net.layers.size()));
  for (auto& layer : net.layers) layer.weight *= factor;
}

AdamState make_adam(const Mlp& net, double lr) {
  AdamState st;
  st.lr = lr;
  for (const auto& layer : net.layers) {
    st.m.push_back({Mat::Zero(layer.weight.rows(), layer.weight.cols()),
                    Vec::Zero(layer.bias.size())});
    st.v.push_back({Mat::Zero(layer.weight.rows(), layer.weight.cols()),
                    Vec::Zero(layer.bias.size())});
  }
  return st;
}

void adam_step(Mlp& net, const GradBundle& grads, AdamState& state) {
  if (grads.layers.size() != net.layers.size() ||
      state.m.size() != net.layers.size())
    throw InvalidArgument("adam_step: shape mismatch");
  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (g.rows() != param.rows() || g.cols() != param.cols())
      throw InvalidArgument("adam_step: gradient shape mismatch");
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -=
        state.lr * (m.array() / corr1) /
        ((v.array() / corr2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].weight, state.m[l].weight, state.v[l].weight,
           grads.layers[l].weight);
    update(net.layers[l].bias, state.m[l].bias, state.v[l].bias,
           grads.layers[l].bias);
  }
}

void save_mlp(std::ostream& os, const Mlp& net) {
  os.write(kMagic, 4);
  write_le(os, kFormatVersion);
  write_le(os, static_cast<std::uint16_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    write_le(os, static_cast<std::uint32_t>(layer.weight.rows()));
    write_le(os, static_cast<std::uint32_t>(layer.weight.cols()));
    for (int r = 0; r < layer.weight.rows(); ++r)
      for (int c = 0; c < layer.weight.cols(); ++c)
        write_le(os, layer.weight(r, c));
    for (int i = 0; i < layer.bias.size(); ++i) write_le(os, layer.bias[i]);
  }
  write_le(os, net.residual_damping);
  write_le(os, net.leaky_slope);
  if (!os) throw IoError("save_mlp: write failed");
}

Mlp load_mlp(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("load_mlp: bad magic");
  auto version = read_le<std::uint16_t>(is);
  if (version != kFormatVersion)
    throw DataError("load_mlp: unsupported format version");
  auto n_layers = read_le<std::uint16_t>(is);
  Mlp net;
  net.layers.resize(n_layers);
  for (auto& layer : net.layers) {
    auto rows = read_le<std::uint32_t>(is);
    auto cols = read_le<std::uint32_t>(is);
    layer.weight.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c)
        layer.weight(r, c) = read_le<double>(is);
    layer.bias.resize(rows);
    for (std::uint32_t i = 0; i < rows; ++i)
      layer.bias[i] = read_le<double>(is);
  }
  net.residual_damping = read_le<double>(is);
  net.leaky_slope = read_le<double>(is);
  check_dims(net);
  return net;
}

}  // namespace nearfield
