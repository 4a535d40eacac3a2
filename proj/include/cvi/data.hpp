#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvi/rng.hpp"
#include "cvi/tensor.hpp"

namespace cvi {

enum class Setting { class_incremental, domain_incremental };

struct LabeledDataset {
  Tensor inputs;  // m × input_dim
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }

  Tensor row(std::size_t i) const {
    Tensor r({inputs.cols()});
    for (std::size_t j = 0; j < inputs.cols(); ++j) r.data[j] = inputs(i, j);
    return r;
  }
};

struct TaskData {
  LabeledDataset train, val, test;
};

struct TaskSequence {
  std::string name;
  Setting setting = Setting::class_incremental;
  std::size_t n_classes = 0;
  std::size_t input_dim = 0;
  std::vector<TaskData> tasks;
};

// ---- DI Sinusoid ----

// Generator constants for the synthetic domain-incremental sequence: per
// task t the two class means sit at (x_t, sin x_t ∓ offset) with x_t spread
// across [0, 2π], isotropic Gaussian noise around each mean.
struct SinusoidConfig {
  std::size_t n_tasks = 5;
  std::size_t points_per_class = 100;
  double sigma = 0.1;
  double offset = 0.5;
  double x_lo = 0.0;
  double x_hi = 2.0 * std::numbers::pi;
};

inline TaskSequence generate_sinusoid(std::uint64_t seed,
                                      const SinusoidConfig& cfg = {}) {
  TaskSequence seq;
  seq.name = "di-sinusoid";
  seq.setting = Setting::domain_incremental;
  seq.n_classes = 2;
  seq.input_dim = 2;
  Rng root(seed);
  Rng rng = root.substream("sinusoid");
  const char* split_names[3] = {"train", "val", "test"};
  for (std::size_t t = 0; t < cfg.n_tasks; ++t) {
    double xc = cfg.n_tasks == 1
                    ? cfg.x_lo
                    : cfg.x_lo + (cfg.x_hi - cfg.x_lo) *
                                     static_cast<double>(t) /
                                     static_cast<double>(cfg.n_tasks - 1);
    double yc = std::sin(xc);
    TaskData task;
    for (int s = 0; s < 3; ++s) {
      Rng srng = rng.substream(split_names[s] + std::to_string(t));
      std::size_t m = 2 * cfg.points_per_class;
      LabeledDataset ds;
      ds.inputs = Tensor({m, 2});
      ds.labels.resize(m);
      for (std::size_t c = 0; c < 2; ++c) {
        double my = c == 0 ? yc - cfg.offset : yc + cfg.offset;
        for (std::size_t i = 0; i < cfg.points_per_class; ++i) {
          std::size_t r = c * cfg.points_per_class + i;
          ds.inputs(r, 0) = xc + cfg.sigma * srng.normal();
          ds.inputs(r, 1) = my + cfg.sigma * srng.normal();
          ds.labels[r] = c;
        }
      }
      (s == 0 ? task.train : s == 1 ? task.val : task.test) = std::move(ds);
    }
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

// ---- CI Split 2D Iris ----

struct IrisRow {
  double features[4];
  std::size_t label;
};

inline std::vector<IrisRow> parse_iris_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open iris file: " + path);
  std::vector<IrisRow> rows;
  std::string line;
  std::size_t lineno = 0;
  const std::vector<std::string> classes = {"setosa", "versicolor",
                                            "virginica"};
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    IrisRow row;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error("iris parse error at row " +
                                 std::to_string(lineno));
      try {
        row.features[i] = std::stod(field);
      } catch (const std::exception&) {
        throw std::runtime_error("iris parse error at row " +
                                 std::to_string(lineno));
      }
    }
    if (!std::getline(ss, field))
      throw std::runtime_error("iris parse error at row " +
                               std::to_string(lineno));
    bool found = false;
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (field.find(classes[c]) != std::string::npos) {
        row.label = c;
        found = true;
        break;
      }
    if (!found)
      throw std::runtime_error("iris parse error at row " +
                               std::to_string(lineno) + ": unknown class");
    rows.push_back(row);
  }
  if (rows.size() != 150)
    throw std::runtime_error("iris file has " + std::to_string(rows.size()) +
                             " rows, expected 150");
  return rows;
}

// Stratified 64/16/20 split of 2-feature iris (petal length, petal width),
// then one task per class.
inline TaskSequence load_iris_2d(const std::string& path,
                                 std::uint64_t seed) {
  auto rows = parse_iris_csv(path);
  TaskSequence seq;
  seq.name = "ci-split-2d-iris";
  seq.setting = Setting::class_incremental;
  seq.n_classes = 3;
  seq.input_dim = 2;
  Rng rng = Rng(seed).substream("iris-split");
  seq.tasks.resize(3);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].label == c) idx.push_back(i);
    rng.shuffle(idx);
    std::size_t n = idx.size();
    std::size_t n_test = n / 5;                  // 20%
    std::size_t n_val = (n - n_test) / 5;        // 20% of the rest
    std::size_t n_train = n - n_test - n_val;
    auto fill = [&](LabeledDataset& ds, std::size_t begin, std::size_t count) {
      ds.inputs = Tensor({count, 2});
      ds.labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const IrisRow& r = rows[idx[begin + i]];
        ds.inputs(i, 0) = r.features[2];  // petal length
        ds.inputs(i, 1) = r.features[3];  // petal width
        ds.labels[i] = r.label;
      }
    };
    fill(seq.tasks[c].train, 0, n_train);
    fill(seq.tasks[c].val, n_train, n_val);
    fill(seq.tasks[c].test, n_train + n_val, n_test);
  }
  return seq;
}

// ---- helpers ----

// Elementwise min/max over all tasks' training inputs.
inline std::pair<Tensor, Tensor> input_bounds(const TaskSequence& seq) {
  Tensor lo({seq.input_dim}, std::numeric_limits<double>::infinity());
  Tensor hi({seq.input_dim}, -std::numeric_limits<double>::infinity());
  std::size_t total = 0;
  for (const auto& task : seq.tasks) {
    const Tensor& x = task.train.inputs;
    total += x.rows();
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < seq.input_dim; ++j) {
        lo.data[j] = std::min(lo.data[j], x(i, j));
        hi.data[j] = std::max(hi.data[j], x(i, j));
      }
  }
  if (total == 0) throw std::invalid_argument("input_bounds: no training data");
  return {lo, hi};
}

inline void export_dataset_csv(const LabeledDataset& ds,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.inputs.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs(i, j));
      out << buf << ',';
    }
    out << ds.labels[i] << '\n';
  }
}

inline void export_sequence_csv(const TaskSequence& seq,
                                const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    std::string base = dir + "/task" + std::to_string(t + 1);
    export_dataset_csv(seq.tasks[t].train, base + "_train.csv");
    export_dataset_csv(seq.tasks[t].val, base + "_val.csv");
    export_dataset_csv(seq.tasks[t].test, base + "_test.csv");
  }
}

}  // namespace cvi
