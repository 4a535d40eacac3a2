#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "cvi/tensor.hpp"

namespace cvi {

// Seeded random stream. All randomness in a run flows from one root seed;
// named substreams let any stage be held fixed while others vary.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  Rng substream(std::string_view name) const {
    // FNV-1a over the name, mixed with the original seed via splitmix64.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    std::uint64_t z = seed_ + h + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }

  double normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(engine_);
  }

  double gumbel() {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    double u = d(engine_);
    // u in (0,1); guard the open end.
    if (u <= 0.0) u = std::numeric_limits<double>::min();
    return -std::log(-std::log(u));
  }

  std::size_t integer(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
  }

  // Categorical draw from probabilities summing to ~1.
  std::size_t categorical(const std::vector<double>& p) {
    double u = uniform(0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return p.size() - 1;
  }

  Tensor normal_tensor(std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = normal();
    return t;
  }

  Tensor gumbel_tensor(std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = gumbel();
    return t;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = integer(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Sample m indices from [0,n) without replacement.
  std::vector<std::size_t> choose(std::size_t n, std::size_t m) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(m);
    return idx;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
};

}  // namespace cvi
