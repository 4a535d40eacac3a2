#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cvi/tensor.hpp"

namespace cvi {

// One-cycle schedule: linear warmup from base/start_div to base over the
// first warmup_frac of the steps, then cosine decay to base/final_div.
struct OneCycleSchedule {
  double base_lr = 0.1;
  std::size_t total_steps = 1;
  double warmup_frac = 0.3;
  double start_div = 25.0;
  double final_div = 100.0;

  double lr(std::size_t step) const {
    if (total_steps <= 1) return base_lr;
    double t = static_cast<double>(step) /
               static_cast<double>(total_steps - 1);
    if (t <= warmup_frac) {
      double u = warmup_frac == 0.0 ? 1.0 : t / warmup_frac;
      double lo = base_lr / start_div;
      return lo + (base_lr - lo) * u;
    }
    double u = (t - warmup_frac) / (1.0 - warmup_frac);
    double lo = base_lr / final_div;
    return lo + 0.5 * (base_lr - lo) * (1.0 + std::cos(std::numbers::pi * u));
  }
};

// Adam over a group of tensors, stepped with an externally supplied rate.
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(std::vector<Tensor*> params, std::vector<const Tensor*> grads,
            double lr) {
    if (params.size() != grads.size())
      throw std::invalid_argument("Adam: params/grads count");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->shape);
        v_.emplace_back(p->shape);
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t g = 0; g < params.size(); ++g) {
      Tensor& p = *params[g];
      const Tensor& gr = *grads[g];
      for (std::size_t i = 0; i < p.size(); ++i) {
        double gi = gr.data[i];
        m_[g].data[i] = beta1 * m_[g].data[i] + (1.0 - beta1) * gi;
        v_[g].data[i] = beta2 * v_[g].data[i] + (1.0 - beta2) * gi * gi;
        double mhat = m_[g].data[i] / bc1;
        double vhat = v_[g].data[i] / bc2;
        p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  void reset() {
    m_.clear();
    v_.clear();
    t_ = 0;
  }

 private:
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace cvi
