#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cvi/distributions.hpp"
#include "cvi/nn.hpp"
#include "cvi/tape.hpp"
#include "cvi/tensor.hpp"

namespace cvi {

// Floor on computed function-space variances; guards dead-unit Jacobian rows
// since the KL divides by the prior variance.
inline constexpr double kFunctionVarFloor = 1e-12;

struct InducingSet {
  enum class Source { generated_uniform, sampled_from_coreset };
  Tensor points;  // n_ind × input_dim
  Source source = Source::generated_uniform;

  std::size_t count() const { return points.rows(); }
};

// Diagonalized output moments at the inducing points, point-major:
// index (j, c) -> j * d + c.
struct FunctionMoments {
  Tensor mean;
  Tensor var;
};

struct MixtureFunctionMoments {
  std::vector<double> p;
  std::vector<FunctionMoments> per_component;
};

struct FunctionMomentsV {
  Var mean;
  Var var;
};

// Affine-approximation output moments for all inducing points at once,
// differentiable w.r.t. (mu, rho). The variance is accumulated layer by
// layer from the chain-rule recurrence
//   G_l = (G_{l+1} W_{l+1}^T) ⊙ swish'(z_l)
// so var[(j,c)] = sum_i J[(j,c),i]^2 sigma_i^2 without forming J.
inline FunctionMomentsV gaussian_function_moments_v(Tape& tape,
                                                    const FcnnSpec& spec,
                                                    Var mu, Var rho,
                                                    const Tensor& points) {
  if (points.cols() != spec.input_dim)
    throw std::invalid_argument("function_moments: input dim mismatch");
  auto reg = spec.registry();
  std::size_t L = reg.size();
  std::size_t n = points.rows();
  std::size_t d = spec.output_dim;

  // forward, keeping activations and hidden-layer derivative factors
  std::vector<Var> act;      // act[l] = input activation of layer l (n×in_l)
  std::vector<Var> weights;  // weight matrix of layer l
  std::vector<Var> dact;     // swish'(z_l) for hidden layers
  act.push_back(tape.constant(points));
  Var z{nullptr, -1};
  for (std::size_t l = 0; l < L; ++l) {
    const auto& s = reg[l];
    Var W = reshape(slice(mu, s.w_off, s.in * s.out), {s.in, s.out});
    Var b = slice(mu, s.b_off, s.out);
    weights.push_back(W);
    z = add_rowvec(matmul(act[l], W), b);
    if (l + 1 < L) {
      act.push_back(swish_v(z));
      dact.push_back(swish_prime_v(z));
    }
  }
  Var mean = reshape(z, {n * d});

  Var sigma2 = square(softplus_v(rho));

  // identity blocks: row (j*d + c) has a 1 in column c
  Tensor eye({n * d, d});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < d; ++c) eye(j * d + c, c) = 1.0;
  Var G = tape.constant(eye);

  Var var{nullptr, -1};
  for (std::size_t li = L; li-- > 0;) {
    const auto& s = reg[li];
    Var s2w = reshape(slice(sigma2, s.w_off, s.in * s.out), {s.in, s.out});
    Var s2b = slice(sigma2, s.b_off, s.out);
    Var g2 = square(G);
    // sum_{a,b} act[a]^2 s2w[a,b] G[(j,c),b]^2  +  sum_b s2b[b] G[(j,c),b]^2
    Var U = matmul(square(act[li]), s2w);  // n × out
    Var wterm = row_sums(mul(g2, repeat_rows(U, d)));
    Var bterm = matvec(g2, s2b);
    Var term = add(wterm, bterm);
    var = (var.id < 0) ? term : add(var, term);
    if (li > 0)
      G = mul(matmul(G, transpose(weights[li])), repeat_rows(dact[li - 1], d));
  }
  return {mean, clamp_min(var, kFunctionVarFloor)};
}

inline FunctionMoments gaussian_function_moments(const FcnnSpec& spec,
                                                 const DiagGaussian& q,
                                                 const Tensor& points) {
  if (q.dim() != spec.param_count())
    throw std::invalid_argument("function_moments: parameter count mismatch");
  Tape tape;
  Var mu = tape.input(q.mu);
  Var rho = tape.input(q.rho);
  FunctionMomentsV m = gaussian_function_moments_v(tape, spec, mu, rho, points);
  return {m.mean.val(), m.var.val()};
}

inline MixtureFunctionMoments mixture_function_moments(const FcnnSpec& spec,
                                                       const GaussMixture& q,
                                                       const Tensor& points) {
  MixtureFunctionMoments out;
  out.p = q.mixing_probs();
  for (const auto& c : q.components)
    out.per_component.push_back(gaussian_function_moments(spec, c, points));
  return out;
}

// ---- function-space KLs ----

inline double fs_kl_gaussian(const FunctionMoments& cur,
                             const FunctionMoments& prior) {
  if (cur.mean.size() != prior.mean.size())
    throw std::invalid_argument("fs_kl_gaussian: dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < cur.mean.size(); ++i) {
    double vp = prior.var.data[i];
    if (vp <= 0.0) throw std::domain_error("fs_kl_gaussian: prior var <= 0");
    double vc = cur.var.data[i];
    double dm = cur.mean.data[i] - prior.mean.data[i];
    kl += 0.5 * (std::log(vp / vc) - 1.0 + (vc + dm * dm) / vp);
  }
  return kl;
}

inline double fs_kl_mixture(const MixtureFunctionMoments& cur,
                            const MixtureFunctionMoments& prior) {
  if (cur.per_component.size() != prior.per_component.size())
    throw std::invalid_argument("fs_kl_mixture: component count mismatch");
  double kl = kl_categorical(cur.p, prior.p);
  for (std::size_t i = 0; i < cur.per_component.size(); ++i)
    kl += cur.p[i] * fs_kl_gaussian(cur.per_component[i],
                                    prior.per_component[i]);
  return kl;
}

inline Var fs_kl_gaussian_v(Tape& tape, const FunctionMomentsV& cur,
                            const FunctionMoments& prior) {
  std::size_t nd = prior.mean.size();
  Tensor vp = prior.var;
  Tensor log_vp({nd});
  for (std::size_t i = 0; i < nd; ++i) {
    if (vp.data[i] <= 0.0)
      throw std::domain_error("fs_kl_gaussian_v: prior var <= 0");
    log_vp.data[i] = std::log(vp.data[i]);
  }
  Var dm = sub(cur.mean, tape.constant(prior.mean));
  Var ratio = div(add(cur.var, square(dm)), tape.constant(vp));
  Var terms =
      add(sub(tape.constant(log_vp), logv(cur.var)), cadd(ratio, -1.0));
  return cmul(sum(terms), 0.5);
}

}  // namespace cvi
