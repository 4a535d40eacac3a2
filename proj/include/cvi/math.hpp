#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace cvi {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Stable softplus; branches at |x| > 30 where ln(1+e^x) is x or e^x to
// double precision.
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Inverse of softplus, used to set rho from a target sigma.
inline double softplus_inv(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

inline double swish(double x) { return x * sigmoid(x); }

inline double swish_prime(double x) {
  double s = sigmoid(x);
  return s + x * s * (1.0 - s);
}

inline double swish_second(double x) {
  double s = sigmoid(x);
  double u = s * (1.0 - s);
  return 2.0 * u + x * u * (1.0 - 2.0 * s);
}

inline double logsumexp(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

inline std::vector<double> softmax_vec(const std::vector<double>& x) {
  double lse = logsumexp(x.data(), x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i] - lse);
  return out;
}

}  // namespace cvi
