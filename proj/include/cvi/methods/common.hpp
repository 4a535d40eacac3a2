#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvi/data.hpp"
#include "cvi/linearize.hpp"
#include "cvi/nn.hpp"
#include "cvi/rng.hpp"
#include "cvi/tape.hpp"
#include "cvi/tensor.hpp"

namespace cvi {

enum class Method {
  joint_map,
  fine_tune,
  ewc,
  si,
  er,
  p_g_vcl,
  l_g_vcl,
  p_gm_vcl,
  l_gm_vcl,
  p_g_sfsvi,
  l_g_sfsvi,
  p_gm_sfsvi,
  l_gm_sfsvi,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::joint_map: return "joint-map";
    case Method::fine_tune: return "fine-tune";
    case Method::ewc: return "ewc";
    case Method::si: return "si";
    case Method::er: return "er";
    case Method::p_g_vcl: return "p-g-vcl";
    case Method::l_g_vcl: return "l-g-vcl";
    case Method::p_gm_vcl: return "p-gm-vcl";
    case Method::l_gm_vcl: return "l-gm-vcl";
    case Method::p_g_sfsvi: return "p-g-sfsvi";
    case Method::l_g_sfsvi: return "l-g-sfsvi";
    case Method::p_gm_sfsvi: return "p-gm-sfsvi";
    case Method::l_gm_sfsvi: return "l-gm-sfsvi";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Method::l_gm_sfsvi); ++i)
    if (s == method_name(static_cast<Method>(i)))
      return static_cast<Method>(i);
  throw std::invalid_argument("unknown method: " + s);
}

inline bool is_vi_method(Method m) {
  return static_cast<int>(m) >= static_cast<int>(Method::p_g_vcl);
}

inline bool is_mixture_method(Method m) {
  return m == Method::p_gm_vcl || m == Method::l_gm_vcl ||
         m == Method::p_gm_sfsvi || m == Method::l_gm_sfsvi;
}

inline bool is_likelihood_focused(Method m) {
  return m == Method::l_g_vcl || m == Method::l_gm_vcl ||
         m == Method::l_g_sfsvi || m == Method::l_gm_sfsvi;
}

inline bool is_sfsvi_method(Method m) {
  return m == Method::p_g_sfsvi || m == Method::l_g_sfsvi ||
         m == Method::p_gm_sfsvi || m == Method::l_gm_sfsvi;
}

struct TrainerConfig {
  Method method = Method::fine_tune;
  std::size_t k = 1;            // mixture components
  double base_lr = 0.1;
  std::size_t batch_size = 16;
  std::size_t epochs = 100;
  std::size_t coreset_per_task = 16;
  std::size_t n_inducing = 8;
  double temperature = 0.1;
  std::uint64_t seed = 0;
  double lambda_reg = 1.0;      // EWC/SI penalty strength
  double xi = 1.0;              // SI damping
  std::vector<std::size_t> hidden = {16, 16};
  double init_sigma = 0.1;
  std::size_t mc_samples = 1;   // variational samples per step for E[nll]
  bool mc_kl = false;           // GM-VCL: MC KL instead of the upper bound
  double kl_scale_mult = 1.0;
  bool resample_inducing_per_step = true;

  void validate() const {
    if (k < 1) throw std::invalid_argument("config: k >= 1 required");
    if (batch_size < 1 || base_lr <= 0.0)
      throw std::invalid_argument("config: positive batch size and lr");
    if (temperature <= 0.0)
      throw std::invalid_argument("config: temperature > 0 required");
    if (mc_samples < 1)
      throw std::invalid_argument("config: mc_samples >= 1 required");
  }
};

// ---- coreset ----

struct CoresetEntry {
  Tensor input;
  std::size_t label = 0;
  std::size_t task_id = 0;
};

struct Coreset {
  std::vector<CoresetEntry> entries;
  std::size_t size() const { return entries.size(); }
};

inline Coreset update_coreset(Coreset coreset, const LabeledDataset& task,
                              std::size_t per_task, std::size_t task_id,
                              Rng& rng) {
  if (per_task > task.size())
    throw std::domain_error("update_coreset: per_task exceeds task size");
  if (per_task == 0) return coreset;
  for (std::size_t i : rng.choose(task.size(), per_task)) {
    CoresetEntry e;
    e.input = task.row(i);
    e.label = task.labels[i];
    e.task_id = task_id;
    coreset.entries.push_back(std::move(e));
  }
  return coreset;
}

// ---- batches ----

struct Batch {
  Tensor X;
  std::vector<std::size_t> y;
  std::size_t size() const { return y.size(); }
};

inline Batch gather(const LabeledDataset& ds,
                    const std::vector<std::size_t>& idx) {
  Batch b;
  b.X = Tensor({idx.size(), ds.inputs.cols()});
  b.y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < ds.inputs.cols(); ++j)
      b.X(i, j) = ds.inputs(idx[i], j);
    b.y[i] = ds.labels[idx[i]];
  }
  return b;
}

inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t m,
                                                           std::size_t batch,
                                                           Rng& rng) {
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  rng.shuffle(idx);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < m; b += batch) {
    std::size_t e = std::min(m, b + batch);
    out.emplace_back(idx.begin() + b, idx.begin() + e);
  }
  return out;
}

// Uniform without replacement when the coreset is large enough, with
// replacement otherwise.
inline Batch sample_coreset_batch(const Coreset& coreset, std::size_t bsz,
                                  std::size_t input_dim, Rng& rng) {
  if (coreset.size() == 0)
    throw std::domain_error("sample_coreset_batch: empty coreset");
  std::vector<std::size_t> idx;
  if (coreset.size() >= bsz) {
    idx = rng.choose(coreset.size(), bsz);
  } else {
    idx.resize(bsz);
    for (auto& i : idx) i = rng.integer(coreset.size());
  }
  Batch b;
  b.X = Tensor({idx.size(), input_dim});
  b.y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const CoresetEntry& e = coreset.entries[idx[i]];
    for (std::size_t j = 0; j < input_dim; ++j) b.X(i, j) = e.input.data[j];
    b.y[i] = e.label;
  }
  return b;
}

inline Batch concat(const Batch& a, const Batch& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  Batch out;
  out.X = Tensor({a.size() + b.size(), a.X.cols()});
  out.y = a.y;
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.X.cols(); ++j) out.X(i, j) = a.X(i, j);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.X.cols(); ++j)
      out.X(a.size() + i, j) = b.X(i, j);
  return out;
}

// ---- inducing points ----

enum class InducingMode { uniform, from_coreset };

inline InducingSet make_inducing(std::size_t n, const Tensor& lo,
                                 const Tensor& hi, const Coreset& coreset,
                                 InducingMode mode, Rng& rng) {
  InducingSet ind;
  if (mode == InducingMode::uniform) {
    ind.source = InducingSet::Source::generated_uniform;
    ind.points = Tensor({n, lo.size()});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < lo.size(); ++j)
        ind.points(i, j) = lo.data[j] == hi.data[j]
                               ? lo.data[j]
                               : rng.uniform(lo.data[j], hi.data[j]);
    return ind;
  }
  if (coreset.size() == 0)
    throw std::domain_error("make_inducing: empty coreset");
  ind.source = InducingSet::Source::sampled_from_coreset;
  std::size_t dim = coreset.entries[0].input.size();
  std::vector<std::size_t> idx;
  if (coreset.size() >= n) {
    idx = rng.choose(coreset.size(), n);
  } else {
    idx.resize(n);
    for (auto& i : idx) i = rng.integer(coreset.size());
  }
  ind.points = Tensor({n, dim});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      ind.points(i, j) = coreset.entries[idx[i]].input.data[j];
  return ind;
}

// ---- loss ----

inline double loss_value(const Tensor& logits,
                         const std::vector<std::size_t>& labels, Head head) {
  if (logits.rows() != labels.size())
    throw std::invalid_argument("loss: batch size mismatch");
  double s = 0.0;
  if (head == Head::binary) {
    if (logits.cols() != 1)
      throw std::invalid_argument("loss: binary head wants 1 column");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      double z = logits(i, 0);
      s += softplus(z) - static_cast<double>(labels[i]) * z;
    }
  } else {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      double lse =
          logsumexp(logits.data.data() + i * logits.cols(), logits.cols());
      s += lse - logits(i, labels[i]);
    }
  }
  return s / static_cast<double>(labels.size());
}

// Summed negative log likelihood over the batch as a tape node. The VI
// objectives pair this with an unscaled or reweighted KL term; MAP methods
// divide by the batch size.
inline Var nll_sum_v(Tape& tape, Var logits,
                     const std::vector<std::size_t>& labels, Head head) {
  if (logits.val().rows() != labels.size())
    throw std::invalid_argument("nll_v: batch size mismatch");
  if (head == Head::binary) {
    Var z = reshape(logits, {labels.size()});
    Tensor y({labels.size()});
    for (std::size_t i = 0; i < labels.size(); ++i)
      y.data[i] = static_cast<double>(labels[i]);
    return sum(sub(softplus_v(z), mul(tape.constant(y), z)));
  }
  return neg(sum(pick(log_softmax(logits), labels)));
}

inline Var nll_v(Tape& tape, Var logits, const std::vector<std::size_t>& labels,
                 Head head) {
  return cmul(nll_sum_v(tape, logits, labels, head),
              1.0 / static_cast<double>(labels.size()));
}

// Thrown when a training step produces a non-finite loss.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cvi
