#pragma once

#include <optional>
#include <vector>

#include "cvi/distributions.hpp"
#include "cvi/linearize.hpp"
#include "cvi/methods/common.hpp"
#include "cvi/nn.hpp"
#include "cvi/tape.hpp"

namespace cvi {

// Objective builders for one optimization step, with all noise passed in
// explicitly so gradients can be checked against finite differences of the
// same fixed-noise objective.

struct ObjectiveTerms {
  Var total, nll, kl;
};

// MAP objective: mean NLL plus an optional diagonal quadratic penalty
// strength/2 * sum w_i (theta_i - anchor_i)^2 (EWC) or strength * sum (SI).
struct QuadraticPenalty {
  Tensor anchor;
  Tensor weights;
  double strength = 0.0;
  double half_factor = 0.5;  // 0.5 for EWC, 1.0 for SI
};

inline Var map_objective(Tape& tape, const FcnnSpec& spec, Var theta,
                         const Batch& batch, Head head,
                         const std::optional<QuadraticPenalty>& penalty) {
  Var logits = fcnn_forward_v(tape, spec, theta, tape.constant(batch.X));
  Var loss = nll_v(tape, logits, batch.y, head);
  if (penalty && penalty->strength != 0.0) {
    Var d = sub(theta, tape.constant(penalty->anchor));
    Var q = sum(mul(tape.constant(penalty->weights), square(d)));
    loss = add(loss, cmul(q, penalty->strength * penalty->half_factor));
  }
  return loss;
}

// Expected batch NLL estimated by averaging over one or more reparameterized
// samples of theta, one standard-normal vector per sample.
inline Var gaussian_nll_term(Tape& tape, const FcnnSpec& spec, Var mu, Var rho,
                             const Batch& batch, Head head,
                             const std::vector<Tensor>& noises) {
  if (noises.empty())
    throw std::invalid_argument("objective: at least one noise sample");
  Var acc{nullptr, -1};
  for (const Tensor& z : noises) {
    Var theta = sample_gaussian_v(tape, mu, rho, z);
    Var logits = fcnn_forward_v(tape, spec, theta, tape.constant(batch.X));
    Var nll = nll_sum_v(tape, logits, batch.y, head);
    acc = acc.id < 0 ? nll : add(acc, nll);
  }
  return noises.size() == 1 ? acc : cmul(acc, 1.0 / noises.size());
}

// Mixture counterpart. `noises[s]` holds one standard-normal vector per
// component for sample s; `gumbels[s]` is consumed only when k > 1 so the
// k = 1 case runs the same float sequence as the Gaussian path.
inline Var mixture_nll_term(Tape& tape, const FcnnSpec& spec, Var lambda,
                            const std::vector<Var>& mus,
                            const std::vector<Var>& rhos, const Batch& batch,
                            Head head, double temperature,
                            const std::vector<std::vector<Tensor>>& noises,
                            const std::vector<Tensor>& gumbels) {
  if (noises.empty())
    throw std::invalid_argument("objective: at least one noise sample");
  std::size_t k = mus.size();
  Var acc{nullptr, -1};
  for (std::size_t s = 0; s < noises.size(); ++s) {
    Var theta{nullptr, -1};
    if (k == 1) {
      theta = sample_gaussian_v(tape, mus[0], rhos[0], noises[s][0]);
    } else {
      Var w = gumbel_softmax_v(tape, lambda, temperature, gumbels[s]);
      for (std::size_t i = 0; i < k; ++i) {
        Var wi = reshape(slice(w, i, 1), {});
        Var ti =
            scale(wi, sample_gaussian_v(tape, mus[i], rhos[i], noises[s][i]));
        theta = theta.id < 0 ? ti : add(theta, ti);
      }
    }
    Var logits = fcnn_forward_v(tape, spec, theta, tape.constant(batch.X));
    Var nll = nll_sum_v(tape, logits, batch.y, head);
    acc = acc.id < 0 ? nll : add(acc, nll);
  }
  return noises.size() == 1 ? acc : cmul(acc, 1.0 / noises.size());
}

// Gaussian VCL VFE: E_q[nll] + kl_weight * KL(q || prior). Prior-focused
// passes the previous posterior as `prior`; likelihood-focused passes the
// initial prior and a batch that already includes the coreset minibatch.
inline ObjectiveTerms gaussian_vcl_objective(
    Tape& tape, const FcnnSpec& spec, Var mu, Var rho,
    const DiagGaussian& prior, const Batch& batch, Head head,
    const std::vector<Tensor>& noises, double kl_weight) {
  Var nll = gaussian_nll_term(tape, spec, mu, rho, batch, head, noises);
  Var kl = kl_diag_gaussian_v(tape, mu, rho, prior);
  return {add(nll, cmul(kl, kl_weight)), nll, kl};
}

// Gaussian-mixture VCL VFE. With mc_kl the KL term is a single-sample
// reparameterized estimate of E_q[ln q - ln q_prev] using mc_noise/mc_gumbel;
// otherwise the closed-form upper bound is used.
inline ObjectiveTerms mixture_vcl_objective(
    Tape& tape, const FcnnSpec& spec, Var lambda, const std::vector<Var>& mus,
    const std::vector<Var>& rhos, const GaussMixture& prior,
    const Batch& batch, Head head, double temperature,
    const std::vector<std::vector<Tensor>>& noises,
    const std::vector<Tensor>& gumbels, double kl_weight, bool mc_kl = false,
    const std::vector<Tensor>* mc_noise = nullptr,
    const Tensor* mc_gumbel = nullptr) {
  std::size_t k = mus.size();
  auto draw_theta = [&](const std::vector<Tensor>& z, const Tensor& g) {
    if (k == 1) return sample_gaussian_v(tape, mus[0], rhos[0], z[0]);
    Var w = gumbel_softmax_v(tape, lambda, temperature, g);
    Var theta{nullptr, -1};
    for (std::size_t i = 0; i < k; ++i) {
      Var wi = reshape(slice(w, i, 1), {});
      Var ti = scale(wi, sample_gaussian_v(tape, mus[i], rhos[i], z[i]));
      theta = theta.id < 0 ? ti : add(theta, ti);
    }
    return theta;
  };
  Var nll = mixture_nll_term(tape, spec, lambda, mus, rhos, batch, head,
                             temperature, noises, gumbels);
  Var kl{nullptr, -1};
  if (mc_kl) {
    Var sample = draw_theta(mc_noise ? *mc_noise : noises[0],
                            mc_gumbel ? *mc_gumbel
                                      : (k > 1 ? gumbels[0] : Tensor{}));
    Var cur = mixture_log_density_v(tape, lambda, mus, rhos, sample);
    std::vector<Var> pmu, prho;
    for (std::size_t i = 0; i < k; ++i) {
      pmu.push_back(tape.constant(prior.components[i].mu));
      prho.push_back(tape.constant(prior.components[i].rho));
    }
    Var prev = mixture_log_density_v(tape, tape.constant(prior.lambda), pmu,
                                     prho, sample);
    kl = sub(cur, prev);
  } else {
    kl = kl_mixture_upper_bound_v(tape, lambda, mus, rhos, prior);
  }
  return {add(nll, cmul(kl, kl_weight)), nll, kl};
}

// Gaussian SFSVI VFE: the KL is between diagonalized output distributions at
// the inducing points; the prior side is a frozen snapshot pushed through its
// own linearization.
inline ObjectiveTerms gaussian_sfsvi_objective(
    Tape& tape, const FcnnSpec& spec, Var mu, Var rho,
    const DiagGaussian& prior, const Tensor& inducing_points,
    const Batch& batch, Head head, const std::vector<Tensor>& noises,
    double kl_scale) {
  Var nll = gaussian_nll_term(tape, spec, mu, rho, batch, head, noises);
  FunctionMoments prior_m =
      gaussian_function_moments(spec, prior, inducing_points);
  FunctionMomentsV cur_m =
      gaussian_function_moments_v(tape, spec, mu, rho, inducing_points);
  Var kl = fs_kl_gaussian_v(tape, cur_m, prior_m);
  return {add(nll, cmul(kl, kl_scale)), nll, kl};
}

// Gaussian-mixture SFSVI VFE: categorical KL plus mixing-probability-weighted
// per-component function-space KLs from the conditional affine approximation.
inline ObjectiveTerms mixture_sfsvi_objective(
    Tape& tape, const FcnnSpec& spec, Var lambda, const std::vector<Var>& mus,
    const std::vector<Var>& rhos, const GaussMixture& prior,
    const Tensor& inducing_points, const Batch& batch, Head head,
    double temperature, const std::vector<std::vector<Tensor>>& noises,
    const std::vector<Tensor>& gumbels, double kl_scale) {
  std::size_t k = mus.size();
  Var nll = mixture_nll_term(tape, spec, lambda, mus, rhos, batch, head,
                             temperature, noises, gumbels);

  MixtureFunctionMoments prior_m =
      mixture_function_moments(spec, prior, inducing_points);
  Var kl = kl_categorical_v(tape, lambda, prior_m.p);
  Var p = softmax(lambda);
  for (std::size_t i = 0; i < k; ++i) {
    FunctionMomentsV cur_i =
        gaussian_function_moments_v(tape, spec, mus[i], rhos[i],
                                    inducing_points);
    Var ckl = fs_kl_gaussian_v(tape, cur_i, prior_m.per_component[i]);
    kl = add(kl, mul(reshape(slice(p, i, 1), {}), ckl));
  }
  return {add(nll, cmul(kl, kl_scale)), nll, kl};
}

}  // namespace cvi
