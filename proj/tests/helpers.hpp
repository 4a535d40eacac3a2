#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cvi/tensor.hpp"

namespace testutil {

// Central finite difference of a scalar function of a flat tensor.
inline cvi::Tensor fd_gradient(
    const std::function<double(const cvi::Tensor&)>& f, cvi::Tensor x,
    double h = 1e-5) {
  cvi::Tensor g(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = x.data[i];
    x.data[i] = orig + h;
    double fp = f(x);
    x.data[i] = orig - h;
    double fm = f(x);
    x.data[i] = orig;
    g.data[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Max |a-b| / max(1, |a|, |b|) over all entries.
inline double max_rel_err(const cvi::Tensor& a, const cvi::Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a.data[i] - b.data[i]);
    double s = std::max({1.0, std::abs(a.data[i]), std::abs(b.data[i])});
    worst = std::max(worst, d / s);
  }
  return worst;
}

inline double max_abs_err(const cvi::Tensor& a, const cvi::Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

}  // namespace testutil
