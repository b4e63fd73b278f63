#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace updrop {

// Fully connected net: input of size D, H hidden layers of U sigmoid units
// each, and an L-way softmax output.
struct NetworkConfig {
  std::size_t input_dim = 0;        // D
  std::size_t hidden_layers = 0;    // H
  std::size_t units_per_layer = 0;  // U
  std::size_t num_labels = 0;       // L

  std::size_t total_hidden_units() const { return hidden_layers * units_per_layer; }

  void validate() const {
    if (input_dim < 1 || hidden_layers < 1 || units_per_layer < 1 || num_labels < 2)
      throw UsageError("network config needs input_dim >= 1, hidden_layers >= 1, "
                       "units_per_layer >= 1, num_labels >= 2");
  }
};

// One dense layer; w is row-major, w[i * fan_out + j] connects input i to output j.
struct LayerWeights {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::vector<double> w;
  std::vector<double> b;

  double at(std::size_t i, std::size_t j) const { return w[i * fan_out + j]; }
  double& at(std::size_t i, std::size_t j) { return w[i * fan_out + j]; }
};

inline LayerWeights zero_layer(std::size_t fan_in, std::size_t fan_out) {
  return LayerWeights{fan_in, fan_out, std::vector<double>(fan_in * fan_out, 0.0),
                      std::vector<double>(fan_out, 0.0)};
}

// All layer parameters of one network: D->U, U->U (H-1 times), U->L.
struct WeightSet {
  NetworkConfig config;
  std::vector<LayerWeights> layers;

  void validate() const {
    config.validate();
    if (layers.size() != config.hidden_layers + 1)
      throw StructureError("weight set has " + std::to_string(layers.size()) +
                           " layers, config needs " + std::to_string(config.hidden_layers + 1));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      std::size_t want_in = l == 0 ? config.input_dim : config.units_per_layer;
      std::size_t want_out = l == config.hidden_layers ? config.num_labels : config.units_per_layer;
      const LayerWeights& lw = layers[l];
      if (lw.fan_in != want_in || lw.fan_out != want_out ||
          lw.w.size() != want_in * want_out || lw.b.size() != want_out)
        throw StructureError("layer " + std::to_string(l) + " has inconsistent shape");
    }
  }
};

// Dropout mask over hidden units, layer-major: bit h * U + u is unit u of
// hidden layer h; 1 keeps the unit, 0 removes it.
using UnitMask = std::vector<std::uint8_t>;

inline UnitMask full_mask(const NetworkConfig& config) {
  return UnitMask(config.total_hidden_units(), 1);
}

inline void check_mask(const NetworkConfig& config, const UnitMask& mask) {
  if (mask.size() != config.total_hidden_units())
    throw StructureError("mask length " + std::to_string(mask.size()) +
                         " does not match hidden unit count " +
                         std::to_string(config.total_hidden_units()));
}

// Everything forward() computed for one instance; post is exactly 0 at masked
// units, so their biases and outgoing weights are inert.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // per hidden layer, before activation
  std::vector<std::vector<double>> post;  // per hidden layer, masked sigmoid
  std::vector<double> yhat;               // softmax output, length L
};

// Gradients mirror the WeightSet layout: w and b hold d(loss)/d(parameter).
using Gradients = std::vector<LayerWeights>;

inline Gradients zero_gradients(const WeightSet& ws) {
  Gradients g;
  g.reserve(ws.layers.size());
  for (const LayerWeights& lw : ws.layers) g.push_back(zero_layer(lw.fan_in, lw.fan_out));
  return g;
}

// Weights i.i.d. normal(0, 0.1), biases zero; deterministic in the seed.
inline WeightSet init_weights(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  WeightSet ws;
  ws.config = config;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.1);
  for (std::size_t l = 0; l <= config.hidden_layers; ++l) {
    std::size_t fan_in = l == 0 ? config.input_dim : config.units_per_layer;
    std::size_t fan_out = l == config.hidden_layers ? config.num_labels : config.units_per_layer;
    LayerWeights lw = zero_layer(fan_in, fan_out);
    for (double& v : lw.w) v = dist(rng);
    ws.layers.push_back(std::move(lw));
  }
  return ws;
}

namespace detail {

// acc := b + a^T w, skipping rows whose activation is exactly 0 (masked units).
inline void affine(std::span<const double> a, const LayerWeights& lw, std::vector<double>& acc) {
  acc = lw.b;
  for (std::size_t i = 0; i < lw.fan_in; ++i) {
    double ai = a[i];
    if (ai == 0.0) continue;
    const double* row = lw.w.data() + i * lw.fan_out;
    for (std::size_t j = 0; j < lw.fan_out; ++j) acc[j] += ai * row[j];
  }
}

inline void check_forward_args(std::span<const double> x, const WeightSet& ws,
                               const UnitMask& mask) {
  ws.validate();
  check_mask(ws.config, mask);
  if (x.size() != ws.config.input_dim)
    throw StructureError("input length " + std::to_string(x.size()) +
                         " does not match input_dim " + std::to_string(ws.config.input_dim));
}

}  // namespace detail

// Output probabilities only; the hot path for scoring and prediction.
inline std::vector<double> forward_probs(std::span<const double> x, const WeightSet& ws,
                                         const UnitMask& mask) {
  detail::check_forward_args(x, ws, mask);
  const NetworkConfig& cfg = ws.config;
  std::vector<double> act(x.begin(), x.end());
  std::vector<double> pre;
  for (std::size_t h = 0; h < cfg.hidden_layers; ++h) {
    detail::affine(act, ws.layers[h], pre);
    act.resize(pre.size());
    const std::uint8_t* bits = mask.data() + h * cfg.units_per_layer;
    for (std::size_t j = 0; j < pre.size(); ++j) act[j] = bits[j] ? sigmoid(pre[j]) : 0.0;
  }
  std::vector<double> logits;
  detail::affine(act, ws.layers[cfg.hidden_layers], logits);
  return softmax(logits);
}

inline ForwardTrace forward(std::span<const double> x, const WeightSet& ws,
                            const UnitMask& mask) {
  detail::check_forward_args(x, ws, mask);
  const NetworkConfig& cfg = ws.config;
  ForwardTrace tr;
  tr.input.assign(x.begin(), x.end());
  tr.pre.resize(cfg.hidden_layers);
  tr.post.resize(cfg.hidden_layers);
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t h = 0; h < cfg.hidden_layers; ++h) {
    detail::affine(act, ws.layers[h], tr.pre[h]);
    const std::vector<double>& pre = tr.pre[h];
    std::vector<double> post(pre.size());
    const std::uint8_t* bits = mask.data() + h * cfg.units_per_layer;
    for (std::size_t j = 0; j < pre.size(); ++j) post[j] = bits[j] ? sigmoid(pre[j]) : 0.0;
    tr.post[h] = post;
    act = std::move(post);
  }
  std::vector<double> logits;
  detail::affine(act, ws.layers[cfg.hidden_layers], logits);
  tr.yhat = softmax(logits);
  return tr;
}

// log of the predicted probability at the true label, floored at log(1e-12).
inline double log_label_likelihood(std::size_t y_index, std::span<const double> yhat) {
  if (y_index >= yhat.size())
    throw StructureError("label index " + std::to_string(y_index) + " out of range");
  return std::log(std::max(yhat[y_index], 1e-12));
}

// Probability form of the same quantity, taking a one-hot target.
inline double label_likelihood(std::span<const double> y_onehot, std::span<const double> yhat) {
  if (y_onehot.size() != yhat.size())
    throw StructureError("one-hot target and prediction lengths differ");
  std::size_t hot = y_onehot.size();
  for (std::size_t i = 0; i < y_onehot.size(); ++i) {
    if (y_onehot[i] == 1.0 && hot == y_onehot.size()) hot = i;
    else if (y_onehot[i] != 0.0)
      throw UsageError("target vector is not one-hot");
  }
  if (hot == y_onehot.size()) throw UsageError("target vector is not one-hot");
  return std::exp(log_label_likelihood(hot, yhat));
}

// Mean negative log-likelihood over a batch under a single shared mask.
// Labels are 0-based class indices here and throughout this header.
inline double batch_loss(const std::vector<std::span<const double>>& xs,
                         const std::vector<std::size_t>& ys, const WeightSet& ws,
                         const UnitMask& mask) {
  if (xs.empty()) throw UsageError("batch_loss of empty batch");
  if (xs.size() != ys.size()) throw StructureError("batch features and labels differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    sum -= log_label_likelihood(ys[i], forward_probs(xs[i], ws, mask));
  return sum / static_cast<double>(xs.size());
}

// Single-instance gradients of the negative log-likelihood. Masked units get
// exactly zero deltas, so every gradient into or out of them is exactly 0.
inline Gradients backward(const ForwardTrace& tr, std::size_t y_index, const WeightSet& ws,
                          const UnitMask& mask) {
  const NetworkConfig& cfg = ws.config;
  check_mask(cfg, mask);
  if (tr.input.size() != cfg.input_dim || tr.post.size() != cfg.hidden_layers ||
      tr.yhat.size() != cfg.num_labels)
    throw StructureError("forward trace does not match the weight set shape");
  if (y_index >= cfg.num_labels)
    throw StructureError("label index " + std::to_string(y_index) + " out of range");

  Gradients g = zero_gradients(ws);
  std::vector<double> delta = tr.yhat;  // softmax + cross-entropy: yhat - onehot
  delta[y_index] -= 1.0;

  for (std::size_t l = cfg.hidden_layers + 1; l-- > 0;) {
    const LayerWeights& lw = ws.layers[l];
    std::span<const double> a_prev = l == 0 ? std::span<const double>(tr.input)
                                            : std::span<const double>(tr.post[l - 1]);
    LayerWeights& gl = g[l];
    for (std::size_t j = 0; j < lw.fan_out; ++j) gl.b[j] = delta[j];
    for (std::size_t i = 0; i < lw.fan_in; ++i) {
      double ai = a_prev[i];
      if (ai == 0.0) continue;
      double* row = gl.w.data() + i * lw.fan_out;
      for (std::size_t j = 0; j < lw.fan_out; ++j) row[j] = ai * delta[j];
    }
    if (l == 0) break;
    const std::vector<double>& post = tr.post[l - 1];
    const std::uint8_t* bits = mask.data() + (l - 1) * cfg.units_per_layer;
    std::vector<double> delta_prev(lw.fan_in, 0.0);
    for (std::size_t i = 0; i < lw.fan_in; ++i) {
      if (!bits[i]) continue;  // masked unit: delta stays exactly 0
      double dot = 0.0;
      const double* row = lw.w.data() + i * lw.fan_out;
      for (std::size_t j = 0; j < lw.fan_out; ++j) dot += row[j] * delta[j];
      delta_prev[i] = dot * post[i] * (1.0 - post[i]);
    }
    delta = std::move(delta_prev);
  }
  return g;
}

// Mean gradients over a batch under one shared mask; also returns the loss.
inline std::pair<Gradients, double> batch_gradients(const std::vector<std::span<const double>>& xs,
                                                    const std::vector<std::size_t>& ys,
                                                    const WeightSet& ws, const UnitMask& mask) {
  if (xs.empty()) throw UsageError("batch_gradients of empty batch");
  if (xs.size() != ys.size()) throw StructureError("batch features and labels differ in length");
  Gradients acc = zero_gradients(ws);
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ForwardTrace tr = forward(xs[i], ws, mask);
    loss -= log_label_likelihood(ys[i], tr.yhat);
    Gradients g = backward(tr, ys[i], ws, mask);
    for (std::size_t l = 0; l < acc.size(); ++l) {
      for (std::size_t t = 0; t < acc[l].w.size(); ++t) acc[l].w[t] += g[l].w[t];
      for (std::size_t t = 0; t < acc[l].b.size(); ++t) acc[l].b[t] += g[l].b[t];
    }
  }
  double inv = 1.0 / static_cast<double>(xs.size());
  for (LayerWeights& lw : acc) {
    for (double& v : lw.w) v *= inv;
    for (double& v : lw.b) v *= inv;
  }
  return {std::move(acc), loss * inv};
}

// w' = w - lr * g. lr = 0 is allowed and leaves the weights unchanged.
inline WeightSet sgd_step(WeightSet ws, const Gradients& g, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("learning rate must be finite and >= 0");
  if (g.size() != ws.layers.size()) throw StructureError("gradient layer count mismatch");
  for (std::size_t l = 0; l < g.size(); ++l) {
    LayerWeights& lw = ws.layers[l];
    const LayerWeights& gl = g[l];
    if (gl.w.size() != lw.w.size() || gl.b.size() != lw.b.size())
      throw StructureError("gradient shape mismatch at layer " + std::to_string(l));
    for (double v : gl.w)
      if (!std::isfinite(v)) throw NumericError("non-finite weight gradient in layer " + std::to_string(l));
    for (double v : gl.b)
      if (!std::isfinite(v)) throw NumericError("non-finite bias gradient in layer " + std::to_string(l));
    for (std::size_t t = 0; t < lw.w.size(); ++t) lw.w[t] -= lr * gl.w[t];
    for (std::size_t t = 0; t < lw.b.size(); ++t) lw.b[t] -= lr * gl.b[t];
  }
  return ws;
}

}  // namespace updrop
