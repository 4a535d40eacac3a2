#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvi/distributions.hpp"
#include "cvi/tensor.hpp"

namespace cvi {

// Flat key-value checkpoint: one `key = v1 v2 ...` line per array.
// Keys: `kind`, `lambda`, `mu.<k>`, `rho.<k>` for distributions, `theta`
// for point estimates.
struct Checkpoint {
  std::map<std::string, std::vector<double>> arrays;
  std::string kind;  // "diag", "mixture" or "point"

  void set(const std::string& key, const std::vector<double>& v) {
    arrays[key] = v;
  }

  const std::vector<double>& get(const std::string& key) const {
    auto it = arrays.find(key);
    if (it == arrays.end())
      throw std::runtime_error("checkpoint: missing key " + key);
    return it->second;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "kind = " << kind << '\n';
    char buf[64];
    for (const auto& [key, vals] : arrays) {
      out << key << " =";
      for (double v : vals) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ' ' << buf;
      }
      out << '\n';
    }
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Checkpoint ck;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("checkpoint parse error: " + line);
      std::string key = line.substr(0, eq);
      while (!key.empty() && key.back() == ' ') key.pop_back();
      std::stringstream ss(line.substr(eq + 1));
      if (key == "kind") {
        ss >> ck.kind;
        continue;
      }
      std::vector<double> vals;
      double v;
      while (ss >> v) vals.push_back(v);
      ck.arrays[key] = std::move(vals);
    }
    return ck;
  }
};

inline Checkpoint to_checkpoint(const DiagGaussian& d) {
  Checkpoint ck;
  ck.kind = "diag";
  ck.set("mu.0", d.mu.data);
  ck.set("rho.0", d.rho.data);
  return ck;
}

inline Checkpoint to_checkpoint(const GaussMixture& m) {
  Checkpoint ck;
  ck.kind = "mixture";
  ck.set("lambda", m.lambda.data);
  for (std::size_t i = 0; i < m.k(); ++i) {
    ck.set("mu." + std::to_string(i), m.components[i].mu.data);
    ck.set("rho." + std::to_string(i), m.components[i].rho.data);
  }
  return ck;
}

inline Checkpoint to_checkpoint(const Tensor& theta) {
  Checkpoint ck;
  ck.kind = "point";
  ck.set("theta", theta.data);
  return ck;
}

inline DiagGaussian diag_from_checkpoint(const Checkpoint& ck) {
  return DiagGaussian(Tensor::vector(ck.get("mu.0")),
                      Tensor::vector(ck.get("rho.0")));
}

inline GaussMixture mixture_from_checkpoint(const Checkpoint& ck) {
  Tensor lambda = Tensor::vector(ck.get("lambda"));
  std::vector<DiagGaussian> comps;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    comps.emplace_back(Tensor::vector(ck.get("mu." + std::to_string(i))),
                       Tensor::vector(ck.get("rho." + std::to_string(i))));
  return GaussMixture(std::move(lambda), std::move(comps));
}

inline Tensor theta_from_checkpoint(const Checkpoint& ck) {
  return Tensor::vector(ck.get("theta"));
}

}  // namespace cvi
