#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cvi/distributions.hpp"
#include "cvi/math.hpp"
#include "cvi/rng.hpp"
#include "cvi/tape.hpp"
#include "cvi/tensor.hpp"

namespace cvi {

enum class Head { multiclass, binary };

// Fully connected network with swish hidden activations, parameterized by a
// single flat vector: per layer, the (in×out) weight block then the bias.
struct FcnnSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;

  struct LayerSlice {
    std::size_t w_off, in, out, b_off;
  };

  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w;
    w.push_back(input_dim);
    for (auto h : hidden) w.push_back(h);
    w.push_back(output_dim);
    return w;
  }

  std::vector<LayerSlice> registry() const {
    std::vector<LayerSlice> reg;
    auto w = widths();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      LayerSlice s;
      s.in = w[l];
      s.out = w[l + 1];
      s.w_off = off;
      s.b_off = off + s.in * s.out;
      off = s.b_off + s.out;
      reg.push_back(s);
    }
    return reg;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    auto w = widths();
    for (std::size_t l = 0; l + 1 < w.size(); ++l) n += (w[l] + 1) * w[l + 1];
    return n;
  }
};

// Forward pass to pre-activation outputs (logits); x is batch×input_dim.
inline Tensor fcnn_forward(const FcnnSpec& spec, const Tensor& theta,
                           const Tensor& x) {
  if (x.cols() != spec.input_dim)
    throw std::invalid_argument("fcnn_forward: input dim mismatch");
  if (theta.size() != spec.param_count())
    throw std::invalid_argument("fcnn_forward: parameter count mismatch");
  auto reg = spec.registry();
  Tensor h = x;
  for (std::size_t l = 0; l < reg.size(); ++l) {
    const auto& s = reg[l];
    Tensor z({h.rows(), s.out});
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t a = 0; a < s.in; ++a) {
        double hv = h(i, a);
        if (hv == 0.0) continue;
        for (std::size_t b = 0; b < s.out; ++b)
          z(i, b) += hv * theta.data[s.w_off + a * s.out + b];
      }
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t b = 0; b < s.out; ++b)
        z(i, b) += theta.data[s.b_off + b];
    if (l + 1 < reg.size())
      for (auto& v : z.data) v = swish(v);
    h = std::move(z);
  }
  return h;
}

// Tape version of the forward pass.
inline Var fcnn_forward_v(Tape& tape, const FcnnSpec& spec, Var theta,
                          Var x) {
  if (x.val().cols() != spec.input_dim)
    throw std::invalid_argument("fcnn_forward_v: input dim mismatch");
  auto reg = spec.registry();
  Var h = x;
  for (std::size_t l = 0; l < reg.size(); ++l) {
    const auto& s = reg[l];
    Var W = reshape(slice(theta, s.w_off, s.in * s.out), {s.in, s.out});
    Var b = slice(theta, s.b_off, s.out);
    Var z = add_rowvec(matmul(h, W), b);
    h = (l + 1 < reg.size()) ? swish_v(z) : z;
  }
  return h;
}

// d×n parameter Jacobian of the network outputs at a single input.
inline Tensor param_jacobian(const FcnnSpec& spec, const Tensor& theta,
                             const Tensor& x) {
  Tape tape;
  Var th = tape.input(theta);
  Tensor row = Tensor::matrix(1, x.size(), x.data);
  Var out = fcnn_forward_v(tape, spec, th, tape.constant(row));
  return jacobian(reshape(out, {spec.output_dim}), th);
}

// He-style initialization of the mean parameters: weights scaled by fan-in,
// biases zero.
inline Tensor he_init(const FcnnSpec& spec, Rng& rng) {
  Tensor theta({spec.param_count()});
  for (const auto& s : spec.registry()) {
    double sd = std::sqrt(2.0 / static_cast<double>(s.in));
    for (std::size_t i = 0; i < s.in * s.out; ++i)
      theta.data[s.w_off + i] = sd * rng.normal();
  }
  return theta;
}

// Per-draw predictive probabilities from logits.
inline Tensor logits_to_probs(const Tensor& logits, Head head) {
  if (head == Head::binary) {
    if (logits.cols() != 1)
      throw std::invalid_argument("logits_to_probs: binary head wants 1 col");
    Tensor p({logits.rows(), 2});
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      double q = sigmoid(logits(i, 0));
      p(i, 0) = 1.0 - q;
      p(i, 1) = q;
    }
    return p;
  }
  Tensor p = logits;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double lse = logsumexp(logits.data.data() + i * logits.cols(),
                           logits.cols());
    for (std::size_t j = 0; j < logits.cols(); ++j)
      p(i, j) = std::exp(logits(i, j) - lse);
  }
  return p;
}

inline Tensor predict_point(const FcnnSpec& spec, const Tensor& theta,
                            const Tensor& x, Head head) {
  return logits_to_probs(fcnn_forward(spec, theta, x), head);
}

// Bayesian model averaging: mean of per-draw predictive probabilities.
inline Tensor predict_bma(const FcnnSpec& spec, const DiagGaussian& posterior,
                          const Tensor& x, std::size_t n_samples, Head head,
                          Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("predict_bma: n_samples");
  Tensor acc;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Tensor noise = rng.normal_tensor({posterior.dim()});
    Tensor theta = sample_gaussian(posterior, noise);
    Tensor p = predict_point(spec, theta, x, head);
    if (s == 0)
      acc = std::move(p);
    else
      for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += p.data[i];
  }
  for (auto& v : acc.data) v /= static_cast<double>(n_samples);
  return acc;
}

// Mixture posterior: exact categorical draw per sample, then the component
// Gaussian. With k == 1 no categorical draw is consumed, so the noise stream
// matches the DiagGaussian path.
inline Tensor predict_bma(const FcnnSpec& spec, const GaussMixture& posterior,
                          const Tensor& x, std::size_t n_samples, Head head,
                          Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("predict_bma: n_samples");
  std::vector<double> probs = posterior.mixing_probs();
  Tensor acc;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::size_t kappa =
        posterior.k() == 1 ? 0 : rng.categorical(probs);
    Tensor noise = rng.normal_tensor({posterior.dim()});
    Tensor theta = sample_gaussian(posterior.components[kappa], noise);
    Tensor p = predict_point(spec, theta, x, head);
    if (s == 0)
      acc = std::move(p);
    else
      for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += p.data[i];
  }
  for (auto& v : acc.data) v /= static_cast<double>(n_samples);
  return acc;
}

// Class decision from a probability matrix: argmax, lowest index on ties;
// binary probabilities are 2 columns, so the 0.5 threshold is the argmax.
inline std::vector<std::size_t> decide(const Tensor& probs) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
      if (probs(i, j) > probs(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

}  // namespace cvi
