#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "cvi/checkpoint.hpp"
#include "cvi/data.hpp"
#include "cvi/methods/common.hpp"
#include "cvi/methods/objectives.hpp"
#include "cvi/nn.hpp"
#include "cvi/optimizer.hpp"
#include "cvi/rng.hpp"

namespace cvi {

// A trainer owns the per-method state carried across tasks: variational or
// point parameters, the prior snapshot, the coreset and any penalty
// accumulators. One trainer per run; training is sequential over tasks.
class Trainer {
 public:
  Trainer(TrainerConfig cfg, const TaskSequence& seq)
      : cfg_(std::move(cfg)), seq_(&seq), root_(cfg_.seed) {
    cfg_.validate();
    head_ = seq.setting == Setting::domain_incremental ? Head::binary
                                                       : Head::multiclass;
    spec_.input_dim = seq.input_dim;
    spec_.hidden = cfg_.hidden;
    spec_.output_dim = head_ == Head::binary ? 1 : seq.n_classes;
    auto [lo, hi] = input_bounds(seq);
    lo_ = std::move(lo);
    hi_ = std::move(hi);
  }
  virtual ~Trainer() = default;

  // Three stages: minimize the objective, update prior/penalty state, update
  // the coreset. With epochs == 0 the parameters are left untouched but the
  // coreset is still updated.
  void train_task(const TaskData& task) {
    if (task.train.size() == 0)
      throw std::invalid_argument("train_task: empty task");
    trace_.clear();
    if (cfg_.epochs > 0) {
      Rng data_rng = root_.substream("data-" + std::to_string(t_));
      Rng noise_rng = root_.substream("noise-" + std::to_string(t_));
      Rng ind_rng = root_.substream("inducing-" + std::to_string(t_));
      fit(task.train, data_rng, noise_rng, ind_rng);
    }
    after_fit(task.train);
    Rng cs_rng = root_.substream("coreset-" + std::to_string(t_));
    std::size_t per = std::min(cfg_.coreset_per_task, task.train.size());
    coreset_ = update_coreset(std::move(coreset_), task.train, per, t_,
                              cs_rng);
    ++t_;
  }

  virtual Tensor predict(const Tensor& X, std::size_t n_samples,
                         Rng& rng) const = 0;
  virtual Checkpoint checkpoint() const = 0;

  const std::vector<double>& loss_trace() const { return trace_; }
  const Coreset& coreset() const { return coreset_; }
  std::size_t task_index() const { return t_; }
  const FcnnSpec& spec() const { return spec_; }
  Head head() const { return head_; }

 protected:
  virtual void fit(const LabeledDataset& train, Rng& data_rng, Rng& noise_rng,
                   Rng& ind_rng) = 0;
  virtual void after_fit(const LabeledDataset& train) {}

  void record_step(std::size_t step, double total, double nll, double kl) {
    if (!std::isfinite(total))
      throw TrainingDiverged(
          std::string(method_name(cfg_.method)) + ": non-finite loss at step " +
          std::to_string(step) + " (nll=" + std::to_string(nll) +
          ", kl=" + std::to_string(kl) + ")");
    trace_.push_back(total);
  }

  TrainerConfig cfg_;
  const TaskSequence* seq_;
  FcnnSpec spec_;
  Head head_;
  Tensor lo_, hi_;
  Coreset coreset_;
  std::size_t t_ = 0;
  std::vector<double> trace_;
  Rng root_;
};

// ---- SMI methods: joint MAP, fine-tuning, ER, EWC, SI ----

class MapTrainer : public Trainer {
 public:
  MapTrainer(TrainerConfig cfg, const TaskSequence& seq)
      : Trainer(std::move(cfg), seq) {
    Rng init_rng = root_.substream("init");
    theta_ = he_init(spec_, init_rng);
  }

  Tensor predict(const Tensor& X, std::size_t, Rng&) const override {
    return predict_point(spec_, theta_, X, head_);
  }

  Checkpoint checkpoint() const override { return to_checkpoint(theta_); }

  const Tensor& theta() const { return theta_; }
  const Tensor& penalty_weights() const { return penalty_weights_; }

 protected:
  void fit(const LabeledDataset& train, Rng& data_rng, Rng& noise_rng,
           Rng&) override {
    const LabeledDataset* data = &train;
    LabeledDataset joined;
    if (cfg_.method == Method::joint_map) {
      // reference method: one fit over every task in the sequence
      if (t_ > 0) return;
      joined = union_of_tasks();
      data = &joined;
    }
    std::size_t m = data->size();
    std::size_t bsz = std::min(cfg_.batch_size, m);
    std::size_t nbatches = (m + bsz - 1) / bsz;
    OneCycleSchedule sched{cfg_.base_lr, cfg_.epochs * nbatches};
    Adam adam;
    bool si = cfg_.method == Method::si;
    Tensor theta_start = theta_;
    Tensor omega({theta_.size()});
    std::size_t step = 0;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      for (const auto& idx : epoch_batches(m, bsz, data_rng)) {
        Batch b = gather(*data, idx);
        if (cfg_.method == Method::er && coreset_.size() > 0)
          b = concat(b, sample_coreset_batch(coreset_, cfg_.batch_size,
                                             spec_.input_dim, data_rng));
        Tape tape;
        Var th = tape.input(theta_);
        std::optional<QuadraticPenalty> pen;
        if (has_penalty_)
          pen = QuadraticPenalty{anchor_, penalty_weights_, cfg_.lambda_reg,
                                 cfg_.method == Method::ewc ? 0.5 : 1.0};
        Var loss = map_objective(tape, spec_, th, b, head_, pen);
        record_step(step, loss.val().data[0], loss.val().data[0], 0.0);
        tape.backward(loss);
        Tensor grad = tape.grad(th.id);
        Tensor before = theta_;
        adam.step({&theta_}, {&grad}, sched.lr(step));
        if (si)
          for (std::size_t i = 0; i < theta_.size(); ++i)
            omega.data[i] -= grad.data[i] * (theta_.data[i] - before.data[i]);
        ++step;
      }
    }
    (void)noise_rng;
    if (si) {
      si_omega_ = std::move(omega);
      si_start_ = std::move(theta_start);
    }
  }

  void after_fit(const LabeledDataset& train) override {
    if (cfg_.epochs == 0) return;
    if (cfg_.method == Method::ewc) {
      Tensor fim = efim_diagonal(train);
      if (penalty_weights_.size() == 0) penalty_weights_ = Tensor(fim.shape);
      for (std::size_t i = 0; i < fim.size(); ++i)
        penalty_weights_.data[i] += fim.data[i];
      anchor_ = theta_;
      has_penalty_ = true;
    } else if (cfg_.method == Method::si) {
      if (penalty_weights_.size() == 0)
        penalty_weights_ = Tensor({theta_.size()});
      for (std::size_t i = 0; i < theta_.size(); ++i) {
        double delta = theta_.data[i] - si_start_.data[i];
        double w = std::max(si_omega_.data[i], 0.0) /
                   (delta * delta + cfg_.xi);
        penalty_weights_.data[i] += w;
      }
      anchor_ = theta_;
      has_penalty_ = true;
    }
  }

  // Diagonal empirical Fisher: mean over examples of the squared gradient of
  // the per-example NLL at the task optimum.
  Tensor efim_diagonal(const LabeledDataset& train) const {
    Tensor fim({theta_.size()});
    for (std::size_t i = 0; i < train.size(); ++i) {
      Tape tape;
      Var th = tape.input(theta_);
      Batch b = gather(train, {i});
      Var loss = map_objective(tape, spec_, th, b, head_, std::nullopt);
      tape.backward(loss);
      const Tensor& g = tape.grad(th.id);
      for (std::size_t j = 0; j < fim.size(); ++j)
        fim.data[j] += g.data[j] * g.data[j];
    }
    for (auto& v : fim.data) v /= static_cast<double>(train.size());
    return fim;
  }

  LabeledDataset union_of_tasks() const {
    LabeledDataset all;
    std::size_t m = 0;
    for (const auto& t : seq_->tasks) m += t.train.size();
    all.inputs = Tensor({m, spec_.input_dim});
    all.labels.reserve(m);
    std::size_t r = 0;
    for (const auto& t : seq_->tasks)
      for (std::size_t i = 0; i < t.train.size(); ++i, ++r) {
        for (std::size_t j = 0; j < spec_.input_dim; ++j)
          all.inputs(r, j) = t.train.inputs(i, j);
        all.labels.push_back(t.train.labels[i]);
      }
    return all;
  }

  Tensor theta_;
  Tensor anchor_, penalty_weights_;
  bool has_penalty_ = false;
  Tensor si_omega_, si_start_;
};

// ---- VCL (parameter-space) ----

class GaussianVclTrainer : public Trainer {
 public:
  GaussianVclTrainer(TrainerConfig cfg, const TaskSequence& seq)
      : Trainer(std::move(cfg), seq) {
    Rng init_rng = root_.substream("init");
    std::size_t n = spec_.param_count();
    q_ = DiagGaussian::with_sigma(he_init(spec_, init_rng), cfg_.init_sigma);
    prior_ = DiagGaussian::standard(n);
    prior_focused_ = !is_likelihood_focused(cfg_.method);
  }

  Tensor predict(const Tensor& X, std::size_t n_samples,
                 Rng& rng) const override {
    return predict_bma(spec_, q_, X, n_samples, head_, rng);
  }

  Checkpoint checkpoint() const override { return to_checkpoint(q_); }

  const DiagGaussian& posterior() const { return q_; }
  const DiagGaussian& prior() const { return prior_; }

 protected:
  void fit(const LabeledDataset& train, Rng& data_rng, Rng& noise_rng,
           Rng&) override {
    std::size_t m = train.size();
    std::size_t bsz = prior_focused_ ? cfg_.batch_size
                                     : std::max<std::size_t>(1, cfg_.batch_size / 2);
    bsz = std::min(bsz, m);
    std::size_t nbatches = (m + bsz - 1) / bsz;
    double kl_weight = cfg_.kl_scale_mult / static_cast<double>(nbatches);
    OneCycleSchedule sched{cfg_.base_lr, cfg_.epochs * nbatches};
    Adam adam;
    std::size_t n = spec_.param_count();
    std::size_t step = 0;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      for (const auto& idx : epoch_batches(m, bsz, data_rng)) {
        Batch b = gather(train, idx);
        if (!prior_focused_ && coreset_.size() > 0)
          b = concat(b, sample_coreset_batch(coreset_, cfg_.batch_size, spec_.input_dim,
                                             data_rng));
        std::vector<Tensor> noises;
        for (std::size_t sm = 0; sm < cfg_.mc_samples; ++sm)
          noises.push_back(noise_rng.normal_tensor({n}));
        Tape tape;
        Var mu = tape.input(q_.mu);
        Var rho = tape.input(q_.rho);
        ObjectiveTerms obj = gaussian_vcl_objective(
            tape, spec_, mu, rho, prior_, b, head_, noises, kl_weight);
        record_step(step, obj.total.val().data[0], obj.nll.val().data[0],
                    obj.kl.val().data[0]);
        tape.backward(obj.total);
        Tensor gmu = tape.grad(mu.id);
        Tensor grho = tape.grad(rho.id);
        adam.step({&q_.mu, &q_.rho}, {&gmu, &grho}, sched.lr(step));
        ++step;
      }
    }
  }

  void after_fit(const LabeledDataset&) override {
    if (prior_focused_ && cfg_.epochs > 0) prior_ = q_;
  }

  DiagGaussian q_, prior_;
  bool prior_focused_ = true;
};

class MixtureVclTrainer : public Trainer {
 public:
  MixtureVclTrainer(TrainerConfig cfg, const TaskSequence& seq)
      : Trainer(std::move(cfg), seq) {
    Rng init_rng = root_.substream("init");
    std::size_t n = spec_.param_count();
    std::vector<DiagGaussian> comps;
    for (std::size_t i = 0; i < cfg_.k; ++i)
      comps.push_back(DiagGaussian::with_sigma(he_init(spec_, init_rng),
                                               cfg_.init_sigma));
    q_ = GaussMixture(Tensor({cfg_.k}), std::move(comps));
    prior_ = GaussMixture::standard(cfg_.k, n);
    prior_focused_ = !is_likelihood_focused(cfg_.method);
  }

  Tensor predict(const Tensor& X, std::size_t n_samples,
                 Rng& rng) const override {
    return predict_bma(spec_, q_, X, n_samples, head_, rng);
  }

  Checkpoint checkpoint() const override { return to_checkpoint(q_); }

  const GaussMixture& posterior() const { return q_; }
  const GaussMixture& prior() const { return prior_; }

 protected:
  void fit(const LabeledDataset& train, Rng& data_rng, Rng& noise_rng,
           Rng&) override {
    std::size_t m = train.size();
    std::size_t bsz = prior_focused_ ? cfg_.batch_size
                                     : std::max<std::size_t>(1, cfg_.batch_size / 2);
    bsz = std::min(bsz, m);
    std::size_t nbatches = (m + bsz - 1) / bsz;
    double kl_weight = cfg_.kl_scale_mult / static_cast<double>(nbatches);
    OneCycleSchedule sched{cfg_.base_lr, cfg_.epochs * nbatches};
    Adam adam;
    std::size_t n = spec_.param_count();
    std::size_t k = cfg_.k;
    std::size_t step = 0;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      for (const auto& idx : epoch_batches(m, bsz, data_rng)) {
        Batch b = gather(train, idx);
        if (!prior_focused_ && coreset_.size() > 0)
          b = concat(b, sample_coreset_batch(coreset_, cfg_.batch_size, spec_.input_dim,
                                             data_rng));
        std::vector<std::vector<Tensor>> noises(cfg_.mc_samples);
        std::vector<Tensor> gumbels;
        for (std::size_t sm = 0; sm < cfg_.mc_samples; ++sm) {
          for (std::size_t i = 0; i < k; ++i)
            noises[sm].push_back(noise_rng.normal_tensor({n}));
          if (k > 1) gumbels.push_back(noise_rng.gumbel_tensor({k}));
        }
        std::vector<Tensor> mc_noise;
        Tensor mc_gumbel({k});
        if (cfg_.mc_kl) {
          for (std::size_t i = 0; i < k; ++i)
            mc_noise.push_back(noise_rng.normal_tensor({n}));
          if (k > 1) mc_gumbel = noise_rng.gumbel_tensor({k});
        }
        Tape tape;
        Var lambda = tape.input(q_.lambda);
        std::vector<Var> mus, rhos;
        for (std::size_t i = 0; i < k; ++i) {
          mus.push_back(tape.input(q_.components[i].mu));
          rhos.push_back(tape.input(q_.components[i].rho));
        }
        ObjectiveTerms obj = mixture_vcl_objective(
            tape, spec_, lambda, mus, rhos, prior_, b, head_,
            cfg_.temperature, noises, gumbels, kl_weight, cfg_.mc_kl,
            cfg_.mc_kl ? &mc_noise : nullptr,
            cfg_.mc_kl ? &mc_gumbel : nullptr);
        record_step(step, obj.total.val().data[0], obj.nll.val().data[0],
                    obj.kl.val().data[0]);
        tape.backward(obj.total);
        std::vector<Tensor> grads;
        grads.push_back(tape.grad(lambda.id));
        for (std::size_t i = 0; i < k; ++i) {
          grads.push_back(tape.grad(mus[i].id));
          grads.push_back(tape.grad(rhos[i].id));
        }
        std::vector<Tensor*> params{&q_.lambda};
        std::vector<const Tensor*> gptrs{&grads[0]};
        for (std::size_t i = 0; i < k; ++i) {
          params.push_back(&q_.components[i].mu);
          params.push_back(&q_.components[i].rho);
          gptrs.push_back(&grads[1 + 2 * i]);
          gptrs.push_back(&grads[2 + 2 * i]);
        }
        adam.step(params, gptrs, sched.lr(step));
        ++step;
      }
    }
  }

  void after_fit(const LabeledDataset&) override {
    if (prior_focused_ && cfg_.epochs > 0) prior_ = q_;
  }

  GaussMixture q_, prior_;
  bool prior_focused_ = true;
};

// ---- SFSVI (function-space) ----

class GaussianSfsviTrainer : public Trainer {
 public:
  GaussianSfsviTrainer(TrainerConfig cfg, const TaskSequence& seq)
      : Trainer(std::move(cfg), seq) {
    Rng init_rng = root_.substream("init");
    std::size_t n = spec_.param_count();
    q_ = DiagGaussian::with_sigma(he_init(spec_, init_rng), cfg_.init_sigma);
    prior_ = DiagGaussian::standard(n);
    prior_focused_ = !is_likelihood_focused(cfg_.method);
  }

  Tensor predict(const Tensor& X, std::size_t n_samples,
                 Rng& rng) const override {
    return predict_bma(spec_, q_, X, n_samples, head_, rng);
  }

  Checkpoint checkpoint() const override { return to_checkpoint(q_); }

  const DiagGaussian& posterior() const { return q_; }
  const DiagGaussian& prior() const { return prior_; }

 protected:
  void fit(const LabeledDataset& train, Rng& data_rng, Rng& noise_rng,
           Rng& ind_rng) override {
    std::size_t m = train.size();
    std::size_t bsz = prior_focused_ ? cfg_.batch_size
                                     : std::max<std::size_t>(1, cfg_.batch_size / 2);
    bsz = std::min(bsz, m);
    std::size_t nbatches = (m + bsz - 1) / bsz;
    // KL is scaled by the ratio of the current data batch size to the
    // coreset batch size; prior-focused runs and the first task (no coreset
    // mini-batch) use ratio 1
    double kl_scale = cfg_.kl_scale_mult;
    if (!prior_focused_ && coreset_.size() > 0)
      kl_scale *= static_cast<double>(bsz) /
                  static_cast<double>(cfg_.batch_size);
    OneCycleSchedule sched{0.1 * cfg_.base_lr, cfg_.epochs * nbatches};
    Adam adam;
    std::size_t n = spec_.param_count();
    InducingMode mode = prior_focused_ && t_ > 0 ? InducingMode::from_coreset
                                                 : InducingMode::uniform;
    InducingSet ind = make_inducing(cfg_.n_inducing, lo_, hi_, coreset_, mode,
                                    ind_rng);
    std::size_t step = 0;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      for (const auto& idx : epoch_batches(m, bsz, data_rng)) {
        Batch b = gather(train, idx);
        if (!prior_focused_ && coreset_.size() > 0)
          b = concat(b, sample_coreset_batch(coreset_, cfg_.batch_size, spec_.input_dim,
                                             data_rng));
        if (cfg_.resample_inducing_per_step && step > 0)
          ind = make_inducing(cfg_.n_inducing, lo_, hi_, coreset_, mode,
                              ind_rng);
        std::vector<Tensor> noises;
        for (std::size_t sm = 0; sm < cfg_.mc_samples; ++sm)
          noises.push_back(noise_rng.normal_tensor({n}));
        Tape tape;
        Var mu = tape.input(q_.mu);
        Var rho = tape.input(q_.rho);
        ObjectiveTerms obj = gaussian_sfsvi_objective(
            tape, spec_, mu, rho, prior_, ind.points, b, head_, noises,
            kl_scale);
        record_step(step, obj.total.val().data[0], obj.nll.val().data[0],
                    obj.kl.val().data[0]);
        tape.backward(obj.total);
        Tensor gmu = tape.grad(mu.id);
        Tensor grho = tape.grad(rho.id);
        adam.step({&q_.mu, &q_.rho}, {&gmu, &grho}, sched.lr(step));
        ++step;
      }
    }
  }

  void after_fit(const LabeledDataset&) override {
    if (prior_focused_ && cfg_.epochs > 0) prior_ = q_;
  }

  DiagGaussian q_, prior_;
  bool prior_focused_ = true;
};

class MixtureSfsviTrainer : public Trainer {
 public:
  MixtureSfsviTrainer(TrainerConfig cfg, const TaskSequence& seq)
      : Trainer(std::move(cfg), seq) {
    Rng init_rng = root_.substream("init");
    std::size_t n = spec_.param_count();
    std::vector<DiagGaussian> comps;
    for (std::size_t i = 0; i < cfg_.k; ++i)
      comps.push_back(DiagGaussian::with_sigma(he_init(spec_, init_rng),
                                               cfg_.init_sigma));
    q_ = GaussMixture(Tensor({cfg_.k}), std::move(comps));
    prior_ = GaussMixture::standard(cfg_.k, n);
    prior_focused_ = !is_likelihood_focused(cfg_.method);
  }

  Tensor predict(const Tensor& X, std::size_t n_samples,
                 Rng& rng) const override {
    return predict_bma(spec_, q_, X, n_samples, head_, rng);
  }

  Checkpoint checkpoint() const override { return to_checkpoint(q_); }

  const GaussMixture& posterior() const { return q_; }
  const GaussMixture& prior() const { return prior_; }

 protected:
  void fit(const LabeledDataset& train, Rng& data_rng, Rng& noise_rng,
           Rng& ind_rng) override {
    std::size_t m = train.size();
    std::size_t bsz = prior_focused_ ? cfg_.batch_size
                                     : std::max<std::size_t>(1, cfg_.batch_size / 2);
    bsz = std::min(bsz, m);
    std::size_t nbatches = (m + bsz - 1) / bsz;
    // KL is scaled by the ratio of the current data batch size to the
    // coreset batch size; prior-focused runs and the first task (no coreset
    // mini-batch) use ratio 1
    double kl_scale = cfg_.kl_scale_mult;
    if (!prior_focused_ && coreset_.size() > 0)
      kl_scale *= static_cast<double>(bsz) /
                  static_cast<double>(cfg_.batch_size);
    OneCycleSchedule sched{0.1 * cfg_.base_lr, cfg_.epochs * nbatches};
    Adam adam;
    std::size_t n = spec_.param_count();
    std::size_t k = cfg_.k;
    InducingMode mode = prior_focused_ && t_ > 0 ? InducingMode::from_coreset
                                                 : InducingMode::uniform;
    InducingSet ind = make_inducing(cfg_.n_inducing, lo_, hi_, coreset_, mode,
                                    ind_rng);
    std::size_t step = 0;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      for (const auto& idx : epoch_batches(m, bsz, data_rng)) {
        Batch b = gather(train, idx);
        if (!prior_focused_ && coreset_.size() > 0)
          b = concat(b, sample_coreset_batch(coreset_, cfg_.batch_size, spec_.input_dim,
                                             data_rng));
        if (cfg_.resample_inducing_per_step && step > 0)
          ind = make_inducing(cfg_.n_inducing, lo_, hi_, coreset_, mode,
                              ind_rng);
        std::vector<std::vector<Tensor>> noises(cfg_.mc_samples);
        std::vector<Tensor> gumbels;
        for (std::size_t sm = 0; sm < cfg_.mc_samples; ++sm) {
          for (std::size_t i = 0; i < k; ++i)
            noises[sm].push_back(noise_rng.normal_tensor({n}));
          if (k > 1) gumbels.push_back(noise_rng.gumbel_tensor({k}));
        }
        Tape tape;
        Var lambda = tape.input(q_.lambda);
        std::vector<Var> mus, rhos;
        for (std::size_t i = 0; i < k; ++i) {
          mus.push_back(tape.input(q_.components[i].mu));
          rhos.push_back(tape.input(q_.components[i].rho));
        }
        ObjectiveTerms obj = mixture_sfsvi_objective(
            tape, spec_, lambda, mus, rhos, prior_, ind.points, b, head_,
            cfg_.temperature, noises, gumbels, kl_scale);
        record_step(step, obj.total.val().data[0], obj.nll.val().data[0],
                    obj.kl.val().data[0]);
        tape.backward(obj.total);
        std::vector<Tensor> grads;
        grads.push_back(tape.grad(lambda.id));
        for (std::size_t i = 0; i < k; ++i) {
          grads.push_back(tape.grad(mus[i].id));
          grads.push_back(tape.grad(rhos[i].id));
        }
        std::vector<Tensor*> params{&q_.lambda};
        std::vector<const Tensor*> gptrs{&grads[0]};
        for (std::size_t i = 0; i < k; ++i) {
          params.push_back(&q_.components[i].mu);
          params.push_back(&q_.components[i].rho);
          gptrs.push_back(&grads[1 + 2 * i]);
          gptrs.push_back(&grads[2 + 2 * i]);
        }
        adam.step(params, gptrs, sched.lr(step));
        ++step;
      }
    }
  }

  void after_fit(const LabeledDataset&) override {
    if (prior_focused_ && cfg_.epochs > 0) prior_ = q_;
  }

  GaussMixture q_, prior_;
  bool prior_focused_ = true;
};

inline std::unique_ptr<Trainer> make_trainer(const TrainerConfig& cfg,
                                             const TaskSequence& seq) {
  switch (cfg.method) {
    case Method::joint_map:
    case Method::fine_tune:
    case Method::ewc:
    case Method::si:
    case Method::er:
      return std::make_unique<MapTrainer>(cfg, seq);
    case Method::p_g_vcl:
    case Method::l_g_vcl:
      return std::make_unique<GaussianVclTrainer>(cfg, seq);
    case Method::p_gm_vcl:
    case Method::l_gm_vcl:
      return std::make_unique<MixtureVclTrainer>(cfg, seq);
    case Method::p_g_sfsvi:
    case Method::l_g_sfsvi:
      return std::make_unique<GaussianSfsviTrainer>(cfg, seq);
    case Method::p_gm_sfsvi:
    case Method::l_gm_sfsvi:
      return std::make_unique<MixtureSfsviTrainer>(cfg, seq);
  }
  throw std::invalid_argument("make_trainer: unknown method");
}

}  // namespace cvi
