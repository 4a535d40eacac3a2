#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cvi {

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 and 2 are the only
// ranks the rest of the library uses.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)) {
    data.assign(count(shape), fill);
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor scalar(double v) {
    Tensor t{{}};
    t.data = {v};
    return t;
  }

  static Tensor vector(std::vector<double> v) {
    Tensor t;
    t.shape = {v.size()};
    t.data = std::move(v);
    return t;
  }

  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v) {
    if (v.size() != r * c) throw std::invalid_argument("matrix: size mismatch");
    Tensor t;
    t.shape = {r, c};
    t.data = std::move(v);
    return t;
  }

  static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const {
    if (rank() != 2) throw std::invalid_argument("rows: not a matrix");
    return shape[0];
  }
  std::size_t cols() const {
    if (rank() != 2) throw std::invalid_argument("cols: not a matrix");
    return shape[1];
  }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& operator()(std::size_t i, std::size_t j) {
    return data[i * shape[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * shape[1] + j];
  }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace cvi
