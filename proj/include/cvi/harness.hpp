#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvi/checkpoint.hpp"
#include "cvi/data.hpp"
#include "cvi/methods/trainers.hpp"

namespace cvi {

struct EvalConfig {
  std::size_t n_samples = 64;     // posterior draws for BMA prediction
  std::size_t grid_resolution = 50;
};

struct RunConfig {
  std::string sequence = "di-sinusoid";
  std::uint64_t seed = 0;
  std::string iris_path = "data/iris.csv";
  TrainerConfig trainer;
  EvalConfig eval;
  std::string out_dir = "out";
};

// ---- config file: [section] + `key = value` lines ----

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = s.substr(1, s.size() - 2);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config parse error at line " +
                               std::to_string(lineno) + ": " + s);
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    std::string k = section.empty() ? key : section + "." + key;
    try {
      if (k == "sequence.name") cfg.sequence = val;
      else if (k == "sequence.seed") cfg.seed = std::stoull(val);
      else if (k == "sequence.iris_path") cfg.iris_path = val;
      else if (k == "trainer.method") cfg.trainer.method = parse_method(val);
      else if (k == "trainer.k") cfg.trainer.k = std::stoul(val);
      else if (k == "trainer.base_lr") cfg.trainer.base_lr = std::stod(val);
      else if (k == "trainer.batch_size") cfg.trainer.batch_size = std::stoul(val);
      else if (k == "trainer.epochs") cfg.trainer.epochs = std::stoul(val);
      else if (k == "trainer.coreset_per_task")
        cfg.trainer.coreset_per_task = std::stoul(val);
      else if (k == "trainer.n_inducing") cfg.trainer.n_inducing = std::stoul(val);
      else if (k == "trainer.temperature") cfg.trainer.temperature = std::stod(val);
      else if (k == "trainer.lambda_reg") cfg.trainer.lambda_reg = std::stod(val);
      else if (k == "trainer.xi") cfg.trainer.xi = std::stod(val);
      else if (k == "trainer.init_sigma") cfg.trainer.init_sigma = std::stod(val);
      else if (k == "trainer.mc_samples")
        cfg.trainer.mc_samples = std::stoul(val);
      else if (k == "trainer.mc_kl")
        cfg.trainer.mc_kl = detail::parse_bool(val, k);
      else if (k == "trainer.kl_scale_mult")
        cfg.trainer.kl_scale_mult = std::stod(val);
      else if (k == "trainer.resample_inducing_per_step")
        cfg.trainer.resample_inducing_per_step = detail::parse_bool(val, k);
      else if (k == "trainer.hidden") {
        cfg.trainer.hidden.clear();
        std::stringstream ss(val);
        std::size_t h;
        while (ss >> h) cfg.trainer.hidden.push_back(h);
      } else if (k == "eval.n_samples") cfg.eval.n_samples = std::stoul(val);
      else if (k == "eval.grid_resolution")
        cfg.eval.grid_resolution = std::stoul(val);
      else if (k == "output.dir") cfg.out_dir = val;
      else throw std::runtime_error("config: unknown key " + k);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("config parse error at line " +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.trainer.seed = cfg.seed;
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_run_config(in);
}

// CVI_OUT_ROOT, when set, re-roots all run output directories.
inline std::string resolve_out_dir(const std::string& dir) {
  const char* root = std::getenv("CVI_OUT_ROOT");
  if (!root || !*root) return dir;
  return (std::filesystem::path(root) / dir).string();
}

inline TaskSequence build_sequence(const RunConfig& cfg) {
  if (cfg.sequence == "di-sinusoid") return generate_sinusoid(cfg.seed);
  if (cfg.sequence == "ci-split-2d-iris")
    return load_iris_2d(cfg.iris_path, cfg.seed);
  throw std::runtime_error("unknown sequence: " + cfg.sequence);
}

// ---- metrics ----

struct MetricsRow {
  std::string method;
  std::size_t task = 0;  // 1-based
  std::vector<double> accuracies;
  double average = 0.0;
};

inline double accuracy(const Tensor& probs,
                       const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> pred = decide(probs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (pred[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

inline double final_average_accuracy(const std::vector<MetricsRow>& rows,
                                     std::size_t n_tasks) {
  for (const auto& r : rows)
    if (r.task == n_tasks) return r.average;
  throw std::logic_error("final_average_accuracy: final task row missing");
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows,
                              std::size_t n_tasks, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,task";
  for (std::size_t t = 1; t <= n_tasks; ++t) out << ",acc_" << t;
  out << ",avg\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.method << ',' << r.task;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      out << ',';
      if (t < r.accuracies.size()) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.accuracies[t]);
        out << buf;
      }
    }
    std::snprintf(buf, sizeof(buf), "%.17g", r.average);
    out << ',' << buf << '\n';
  }
}

// ---- prediction grid ----

inline Tensor grid_lattice(const Tensor& lo, const Tensor& hi,
                           std::size_t resolution) {
  if (lo.size() != 2)
    throw std::invalid_argument("grid: 2-D input space required");
  Tensor X({resolution * resolution, 2});
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      std::size_t r = i * resolution + j;
      for (std::size_t d = 0; d < 2; ++d) {
        std::size_t idx = d == 0 ? i : j;
        double t = resolution == 1
                       ? 0.0
                       : static_cast<double>(idx) /
                             static_cast<double>(resolution - 1);
        X(r, d) = lo.data[d] + (hi.data[d] - lo.data[d]) * t;
      }
    }
  return X;
}

inline void write_grid_csv(const Tensor& X, const Tensor& probs,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x1,x2";
  for (std::size_t c = 0; c < probs.cols(); ++c) out << ",p_" << (c + 1);
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < X.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", X(i, 0));
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", X(i, 1));
    out << ',' << buf;
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", probs(i, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline void export_grid(const Trainer& trainer, const Tensor& lo,
                        const Tensor& hi, std::size_t resolution,
                        std::size_t n_samples, Rng& rng,
                        const std::string& path) {
  Tensor X = grid_lattice(lo, hi, resolution);
  write_grid_csv(X, trainer.predict(X, n_samples, rng), path);
}

// Prediction straight from a saved checkpoint (the `grid` CLI verb).
inline Tensor predict_checkpoint(const FcnnSpec& spec, const Checkpoint& ck,
                                 const Tensor& X, Head head,
                                 std::size_t n_samples, Rng& rng) {
  if (ck.kind == "point")
    return predict_point(spec, theta_from_checkpoint(ck), X, head);
  if (ck.kind == "diag")
    return predict_bma(spec, diag_from_checkpoint(ck), X, n_samples, head, rng);
  if (ck.kind == "mixture")
    return predict_bma(spec, mixture_from_checkpoint(ck), X, n_samples, head,
                       rng);
  throw std::runtime_error("checkpoint: unknown kind " + ck.kind);
}

// ---- run ----

struct RunResult {
  std::vector<MetricsRow> rows;
  int status = 0;
  std::string error;
};

inline void write_manifest(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sequence = " << cfg.sequence << '\n'
      << "seed = " << cfg.seed << '\n'
      << "method = " << method_name(cfg.trainer.method) << '\n'
      << "k = " << cfg.trainer.k << '\n'
      << "base_lr = " << cfg.trainer.base_lr << '\n'
      << "batch_size = " << cfg.trainer.batch_size << '\n'
      << "epochs = " << cfg.trainer.epochs << '\n'
      << "coreset_per_task = " << cfg.trainer.coreset_per_task << '\n'
      << "n_inducing = " << cfg.trainer.n_inducing << '\n'
      << "temperature = " << cfg.trainer.temperature << '\n'
      << "init_sigma = " << cfg.trainer.init_sigma << '\n'
      << "mc_samples = " << cfg.trainer.mc_samples << '\n'
      << "n_samples = " << cfg.eval.n_samples << '\n'
      << "grid_resolution = " << cfg.eval.grid_resolution << '\n';
}

// Train through the sequence; after each task evaluate on every test set
// seen so far and write the metrics, checkpoint and (after the final task)
// prediction-grid files. Divergence leaves partial results and a nonzero
// status.
inline RunResult run(const RunConfig& cfg) {
  RunResult res;
  TaskSequence seq = build_sequence(cfg);
  std::string dir = resolve_out_dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_manifest(cfg, dir + "/manifest.txt");
  auto trainer = make_trainer(cfg.trainer, seq);
  Rng root(cfg.seed);
  std::string method = method_name(cfg.trainer.method);
  std::size_t n_tasks = seq.tasks.size();
  try {
    for (std::size_t t = 0; t < n_tasks; ++t) {
      trainer->train_task(seq.tasks[t]);
      MetricsRow row;
      row.method = method;
      row.task = t + 1;
      for (std::size_t s = 0; s <= t; ++s) {
        Rng eval_rng = root.substream("eval-" + std::to_string(t) + "-" +
                                      std::to_string(s));
        Tensor probs = trainer->predict(seq.tasks[s].test.inputs,
                                        cfg.eval.n_samples, eval_rng);
        row.accuracies.push_back(accuracy(probs, seq.tasks[s].test.labels));
      }
      double sum = 0.0;
      for (double a : row.accuracies) sum += a;
      row.average = sum / static_cast<double>(row.accuracies.size());
      res.rows.push_back(row);
      trainer->checkpoint().save(dir + "/checkpoint_task" +
                                 std::to_string(t + 1) + ".txt");
    }
    auto [lo, hi] = input_bounds(seq);
    Rng grid_rng = root.substream("grid");
    export_grid(*trainer, lo, hi, cfg.eval.grid_resolution,
                cfg.eval.n_samples, grid_rng, dir + "/grid.csv");
  } catch (const TrainingDiverged& e) {
    res.status = 1;
    res.error = e.what();
  }
  write_metrics_csv(res.rows, n_tasks, dir + "/metrics.csv");
  return res;
}

// Run every config file in a directory (method comparison sweep).
inline int sweep(const std::string& config_dir) {
  std::vector<std::string> paths;
  for (const auto& e : std::filesystem::directory_iterator(config_dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    if (ext == ".ini" || ext == ".cfg" || ext == ".conf")
      paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw std::runtime_error("sweep: no config files in " + config_dir);
  int status = 0;
  for (const auto& p : paths) {
    RunConfig cfg = load_run_config(p);
    RunResult r = run(cfg);
    if (r.status != 0) status = r.status;
  }
  return status;
}

}  // namespace cvi
