#include <cmath>

#include "cvi/distributions.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvi;

namespace {

DiagGaussian random_diag(Rng& rng, std::size_t n) {
  Tensor mu = rng.normal_tensor({n});
  Tensor rho = rng.normal_tensor({n});
  for (auto& v : rho.data) v = 0.5 * v - 0.5;
  return DiagGaussian(std::move(mu), std::move(rho));
}

GaussMixture random_mixture(Rng& rng, std::size_t k, std::size_t n) {
  Tensor lambda = rng.normal_tensor({k});
  std::vector<DiagGaussian> comps;
  for (std::size_t i = 0; i < k; ++i) comps.push_back(random_diag(rng, n));
  return GaussMixture(std::move(lambda), std::move(comps));
}

// MC estimate of KL between two diagonal Gaussians by sampling q.
double kl_diag_mc(const DiagGaussian& q, const DiagGaussian& p,
                  std::size_t n_samples, Rng& rng, double* se) {
  Tensor sq = q.sigma();
  Tensor sp = p.sigma();
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    double v = 0.0;
    for (std::size_t i = 0; i < q.dim(); ++i) {
      double z = rng.normal();
      double x = q.mu.data[i] + sq.data[i] * z;
      double dq = z;
      double dp = (x - p.mu.data[i]) / sp.data[i];
      v += -std::log(sq.data[i]) - 0.5 * dq * dq + std::log(sp.data[i]) +
           0.5 * dp * dp;
    }
    s1 += v;
    s2 += v * v;
  }
  double n = static_cast<double>(n_samples);
  double mean = s1 / n;
  double var = std::max(0.0, s2 / n - mean * mean);
  *se = std::sqrt(var / n);
  return mean;
}

}  // namespace

TEST_CASE("diag gaussian basics") {
  DiagGaussian d = DiagGaussian::standard(3);
  Tensor s = d.sigma();
  for (double v : s.data) CHECK(v == doctest::Approx(1.0));
  CHECK(kl_diag_gaussian(d, d) == doctest::Approx(0.0).epsilon(1e-12));

  DiagGaussian w = DiagGaussian::with_sigma(Tensor({4}), 0.05);
  for (double v : w.sigma().data) CHECK(v == doctest::Approx(0.05));

  CHECK_THROWS_AS(DiagGaussian(Tensor({2}), Tensor({3})),
                  std::invalid_argument);
}

TEST_CASE("closed-form diag KL matches known values") {
  // KL(N(m,1) || N(0,1)) = m^2/2
  DiagGaussian q(Tensor::vector({2.0}), Tensor({1}, softplus_inv(1.0)));
  DiagGaussian p = DiagGaussian::standard(1);
  CHECK(kl_diag_gaussian(q, p) == doctest::Approx(2.0).epsilon(1e-12));
  // KL(N(0,s^2) || N(0,1)) = -ln s + (s^2-1)/2
  double s = 0.5;
  DiagGaussian q2(Tensor({1}), Tensor({1}, softplus_inv(s)));
  CHECK(kl_diag_gaussian(q2, p) ==
        doctest::Approx(-std::log(s) + 0.5 * (s * s - 1.0)).epsilon(1e-12));
}

TEST_CASE("closed-form diag KL within MC error") {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 1 + rng.integer(5);
    DiagGaussian q = random_diag(rng, n);
    DiagGaussian p = random_diag(rng, n);
    double se = 0.0;
    double mc = kl_diag_mc(q, p, 200000, rng, &se);
    CHECK(std::abs(kl_diag_gaussian(q, p) - mc) < 4.0 * se + 1e-10);
  }
}

TEST_CASE("categorical KL") {
  std::vector<double> p = {0.2, 0.3, 0.5};
  std::vector<double> q = {0.5, 0.25, 0.25};
  double hand = 0.2 * std::log(0.2 / 0.5) + 0.3 * std::log(0.3 / 0.25) +
                0.5 * std::log(0.5 / 0.25);
  CHECK(kl_categorical(p, q) == doctest::Approx(hand).epsilon(1e-12));
  CHECK(kl_categorical(p, p) == doctest::Approx(0.0).epsilon(1e-12));
  // zero mass in p_t contributes nothing even with zero prev mass there
  CHECK(kl_categorical({0.0, 1.0}, {0.0, 1.0}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)kl_categorical({0.5, 0.5}, {1.0, 0.0}),
                  std::domain_error);
  CHECK_THROWS_AS((void)kl_categorical({0.5, 0.5}, {1.0}),
                  std::invalid_argument);
}

TEST_CASE("gumbel softmax") {
  Rng rng(9);
  Tensor lambda = rng.normal_tensor({4});
  Tensor g = rng.gumbel_tensor({4});
  GumbelSoftmaxSample s = sample_gumbel_softmax(lambda, 0.1, g);
  double sum = 0.0;
  for (double v : s.weights.data) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)sample_gumbel_softmax(lambda, 0.0, g),
                  std::domain_error);
  CHECK_THROWS_AS((void)sample_gumbel_softmax(lambda, -1.0, g),
                  std::domain_error);

  // T -> 0 concentrates on the argmax of lambda + g
  GumbelSoftmaxSample hard = sample_gumbel_softmax(lambda, 1e-4, g);
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (lambda.data[i] + g.data[i] > lambda.data[best] + g.data[best])
      best = i;
  CHECK(hard.weights.data[best] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mixture sampling: k=1 reduces bitwise to gaussian") {
  Rng rng(21);
  DiagGaussian d = random_diag(rng, 6);
  GaussMixture m(Tensor({1}), {d});
  Tensor noise = rng.normal_tensor({6});
  Tensor gumbel = rng.gumbel_tensor({1});
  Tensor a = sample_gaussian(d, noise);
  Tensor b = sample_mixture(m, 0.1, {noise}, gumbel);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("mixture upper bound vs MC") {
  Rng rng(33);
  SUBCASE("equal arguments give zero bound and zero MC") {
    GaussMixture m = random_mixture(rng, 3, 4);
    CHECK(kl_mixture_upper_bound(m, m) == doctest::Approx(0.0).epsilon(1e-10));
    McEstimate e = kl_mixture_mc(m, m, 20000, rng);
    CHECK(std::abs(e.mean) < 3.0 * e.std_error + 1e-9);
  }
  SUBCASE("bound dominates MC estimate") {
    for (int trial = 0; trial < 5; ++trial) {
      std::size_t k = 2 + rng.integer(2);
      GaussMixture a = random_mixture(rng, k, 3);
      GaussMixture b = random_mixture(rng, k, 3);
      double ub = kl_mixture_upper_bound(a, b);
      McEstimate e = kl_mixture_mc(a, b, 50000, rng);
      CHECK(ub >= e.mean - 3.0 * e.std_error);
    }
  }
}

TEST_CASE("mixture log density matches single gaussian for k=1") {
  Rng rng(17);
  DiagGaussian d = random_diag(rng, 3);
  GaussMixture m(Tensor({1}), {d});
  Tensor x = rng.normal_tensor({3});
  double expected = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    double s = softplus(d.rho.data[j]);
    double z = (x.data[j] - d.mu.data[j]) / s;
    expected += -0.5 * std::log(2.0 * 3.14159265358979323846) - std::log(s) -
                0.5 * z * z;
  }
  CHECK(mixture_log_density(m, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("tape KL versions match plain versions and FD") {
  Rng rng(55);
  std::size_t n = 5;
  DiagGaussian q = random_diag(rng, n);
  DiagGaussian p = random_diag(rng, n);

  SUBCASE("kl_diag_gaussian_v value and gradient") {
    Tape tape;
    Var mu = tape.input(q.mu);
    Var rho = tape.input(q.rho);
    Var kl = kl_diag_gaussian_v(tape, mu, rho, p);
    CHECK(kl.val().data[0] ==
          doctest::Approx(kl_diag_gaussian(q, p)).epsilon(1e-12));
    kl.tape->backward(kl);
    Tensor fg = testutil::fd_gradient(
        [&](const Tensor& x) {
          return kl_diag_gaussian(DiagGaussian(x, q.rho), p);
        },
        q.mu);
    CHECK(testutil::max_rel_err(tape.grad(mu.id), fg) < 1e-6);
    Tensor fgr = testutil::fd_gradient(
        [&](const Tensor& x) {
          return kl_diag_gaussian(DiagGaussian(q.mu, x), p);
        },
        q.rho);
    CHECK(testutil::max_rel_err(tape.grad(rho.id), fgr) < 1e-6);
  }

  SUBCASE("kl_categorical_v value and gradient") {
    Tensor lambda = rng.normal_tensor({4});
    std::vector<double> prev = {0.1, 0.2, 0.3, 0.4};
    Tape tape;
    Var vl = tape.input(lambda);
    Var kl = kl_categorical_v(tape, vl, prev);
    CHECK(kl.val().data[0] ==
          doctest::Approx(kl_categorical(softmax_vec(lambda.data), prev))
              .epsilon(1e-10));
    kl.tape->backward(kl);
    Tensor fg = testutil::fd_gradient(
        [&](const Tensor& x) {
          return kl_categorical(softmax_vec(x.data), prev);
        },
        lambda);
    CHECK(testutil::max_rel_err(tape.grad(vl.id), fg) < 1e-6);
  }

  SUBCASE("kl_mixture_upper_bound_v matches plain") {
    GaussMixture a = random_mixture(rng, 3, 4);
    GaussMixture b = random_mixture(rng, 3, 4);
    Tape tape;
    Var lambda = tape.input(a.lambda);
    std::vector<Var> mus, rhos;
    for (std::size_t i = 0; i < 3; ++i) {
      mus.push_back(tape.input(a.components[i].mu));
      rhos.push_back(tape.input(a.components[i].rho));
    }
    Var kl = kl_mixture_upper_bound_v(tape, lambda, mus, rhos, b);
    CHECK(kl.val().data[0] ==
          doctest::Approx(kl_mixture_upper_bound(a, b)).epsilon(1e-10));
    kl.tape->backward(kl);
    Tensor fg = testutil::fd_gradient(
        [&](const Tensor& x) {
          GaussMixture a2 = a;
          a2.lambda = x;
          return kl_mixture_upper_bound(a2, b);
        },
        a.lambda);
    CHECK(testutil::max_rel_err(tape.grad(lambda.id), fg) < 1e-6);
    Tensor fgm = testutil::fd_gradient(
        [&](const Tensor& x) {
          GaussMixture a2 = a;
          a2.components[1].mu = x;
          return kl_mixture_upper_bound(a2, b);
        },
        a.components[1].mu);
    CHECK(testutil::max_rel_err(tape.grad(mus[1].id), fgm) < 1e-6);
  }

  SUBCASE("mixture_log_density_v matches plain") {
    GaussMixture m = random_mixture(rng, 3, 4);
    Tensor x = rng.normal_tensor({4});
    Tape tape;
    Var lambda = tape.input(m.lambda);
    std::vector<Var> mus, rhos;
    for (std::size_t i = 0; i < 3; ++i) {
      mus.push_back(tape.input(m.components[i].mu));
      rhos.push_back(tape.input(m.components[i].rho));
    }
    Var ld = mixture_log_density_v(tape, lambda, mus, rhos, tape.constant(x));
    CHECK(ld.val().data[0] ==
          doctest::Approx(mixture_log_density(m, x)).epsilon(1e-10));
    ld.tape->backward(ld);
    Tensor fg = testutil::fd_gradient(
        [&](const Tensor& y) {
          GaussMixture m2 = m;
          m2.components[0].mu = y;
          return mixture_log_density(m2, x);
        },
        m.components[0].mu);
    CHECK(testutil::max_rel_err(tape.grad(mus[0].id), fg) < 1e-6);
  }

  SUBCASE("sample_gaussian_v matches plain sampler") {
    Tensor noise = rng.normal_tensor({n});
    Tape tape;
    Var mu = tape.input(q.mu);
    Var rho = tape.input(q.rho);
    Var s = sample_gaussian_v(tape, mu, rho, noise);
    Tensor plain = sample_gaussian(q, noise);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(s.val().data[i] == plain.data[i]);
  }

  SUBCASE("gumbel_softmax_v matches plain sampler") {
    Tensor lambda = rng.normal_tensor({3});
    Tensor g = rng.gumbel_tensor({3});
    Tape tape;
    Var w = gumbel_softmax_v(tape, tape.input(lambda), 0.1, g);
    GumbelSoftmaxSample plain = sample_gumbel_softmax(lambda, 0.1, g);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(w.val().data[i] ==
            doctest::Approx(plain.weights.data[i]).epsilon(1e-12));
    CHECK_THROWS_AS(
        (void)gumbel_softmax_v(tape, tape.input(lambda), -0.5, g),
        std::domain_error);
  }
}
