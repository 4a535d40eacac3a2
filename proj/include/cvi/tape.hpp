#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvi/math.hpp"
#include "cvi/tensor.hpp"

namespace cvi {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  const Tensor& val() const;
};

// Reverse-mode autodiff tape. Nodes are recorded in topological order during
// the forward pass; backward() walks them in reverse. Single-threaded per
// tape; independent tapes are independent.
class Tape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;
    // Accumulates this node's grad into its parents' grads.
    std::function<void(Tape&, int)> back;
  };

  Var push(Tensor value, std::function<void(Tape&, int)> back = nullptr) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  Var input(Tensor value) { return push(std::move(value)); }
  Var constant(Tensor value) { return push(std::move(value)); }

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  Tensor& grad_mut(int id) { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

  // Reverse pass seeded with d(out) = seed. Grads of all nodes are reset
  // first, so repeated calls (e.g. one per Jacobian row) are independent.
  void backward(Var out, const Tensor& seed) {
    if (!seed.same_shape(nodes_[out.id].value))
      throw std::invalid_argument("backward: seed shape mismatch");
    for (auto& n : nodes_) n.grad = Tensor(n.value.shape);
    nodes_[out.id].grad = seed;
    for (int i = out.id; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this, i);
  }

  void backward(Var out) {
    if (nodes_[out.id].value.size() != 1)
      throw std::invalid_argument("backward: output is not scalar");
    Tensor seed(nodes_[out.id].value.shape);
    seed.data[0] = 1.0;
    backward(out, seed);
  }

 private:
  std::vector<Node> nodes_;
};

inline const Tensor& Var::val() const { return tape->value(id); }

namespace detail {

inline void check_binary(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw std::invalid_argument("vars on different tapes");
  if (!a.val().same_shape(b.val()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace detail

// ---- elementwise binary ----

inline Var add(Var a, Var b) {
  detail::check_binary(a, b, "add");
  Tensor out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.val().data[i];
  return a.tape->push(std::move(out), [pa = a.id, pb = b.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gb = t.grad_mut(pb);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
}

inline Var sub(Var a, Var b) {
  detail::check_binary(a, b, "sub");
  Tensor out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.val().data[i];
  return a.tape->push(std::move(out), [pa = a.id, pb = b.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gb = t.grad_mut(pb);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] -= g.data[i];
    }
  });
}

inline Var mul(Var a, Var b) {
  detail::check_binary(a, b, "mul");
  Tensor out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.val().data[i];
  return a.tape->push(std::move(out), [pa = a.id, pb = b.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& va = t.value(pa);
    const Tensor& vb = t.value(pb);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gb = t.grad_mut(pb);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i] * vb.data[i];
      gb.data[i] += g.data[i] * va.data[i];
    }
  });
}

inline Var div(Var a, Var b) {
  detail::check_binary(a, b, "div");
  Tensor out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] /= b.val().data[i];
  return a.tape->push(std::move(out), [pa = a.id, pb = b.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& va = t.value(pa);
    const Tensor& vb = t.value(pb);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gb = t.grad_mut(pb);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i] / vb.data[i];
      gb.data[i] -= g.data[i] * va.data[i] / (vb.data[i] * vb.data[i]);
    }
  });
}

// ---- scalar-constant and unary ----

inline Var cmul(Var a, double c) {
  Tensor out = a.val();
  for (auto& v : out.data) v *= c;
  return a.tape->push(std::move(out), [pa = a.id, c](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += c * g.data[i];
  });
}

inline Var cadd(Var a, double c) {
  Tensor out = a.val();
  for (auto& v : out.data) v += c;
  return a.tape->push(std::move(out), [pa = a.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  });
}

inline Var neg(Var a) { return cmul(a, -1.0); }

namespace detail {

template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tensor out = a.val();
  for (auto& v : out.data) v = f(v);
  return a.tape->push(std::move(out), [pa = a.id, df](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& x = t.value(pa);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.data[i] += g.data[i] * df(x.data[i]);
  });
}

}  // namespace detail

inline Var square(Var a) {
  return detail::unary(
      a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

inline Var logv(Var a) {
  return detail::unary(
      a, [](double x) { return std::log(x); },
      [](double x) { return 1.0 / x; });
}

inline Var expv(Var a) {
  return detail::unary(
      a, [](double x) { return std::exp(x); },
      [](double x) { return std::exp(x); });
}

inline Var sigmoid_v(Var a) {
  return detail::unary(a, [](double x) { return sigmoid(x); },
                       [](double x) {
                         double s = sigmoid(x);
                         return s * (1.0 - s);
                       });
}

inline Var softplus_v(Var a) {
  return detail::unary(a, [](double x) { return softplus(x); },
                       [](double x) { return sigmoid(x); });
}

inline Var swish_v(Var a) {
  return detail::unary(a, [](double x) { return swish(x); },
                       [](double x) { return swish_prime(x); });
}

inline Var swish_prime_v(Var a) {
  return detail::unary(a, [](double x) { return swish_prime(x); },
                       [](double x) { return swish_second(x); });
}

// max(a, c) elementwise; subgradient 0 on the clamped side.
inline Var clamp_min(Var a, double c) {
  Tensor out = a.val();
  for (auto& v : out.data)
    if (v < c) v = c;
  return a.tape->push(std::move(out), [pa = a.id, c](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& x = t.value(pa);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x.data[i] >= c) ga.data[i] += g.data[i];
  });
}

// ---- shape ----

inline Var reshape(Var a, std::vector<std::size_t> shape) {
  if (Tensor::count(shape) != a.val().size())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out;
  out.shape = std::move(shape);
  out.data = a.val().data;
  return a.tape->push(std::move(out), [pa = a.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  });
}

// Contiguous slice of the flattened tensor, returned as a 1-D vector.
inline Var slice(Var a, std::size_t offset, std::size_t len) {
  if (offset + len > a.val().size())
    throw std::invalid_argument("slice: out of range");
  Tensor out({len});
  for (std::size_t i = 0; i < len; ++i) out.data[i] = a.val().data[offset + i];
  return a.tape->push(std::move(out), [pa = a.id, offset](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.data[offset + i] += g.data[i];
  });
}

inline Var transpose(Var a) {
  const Tensor& x = a.val();
  Tensor out({x.cols(), x.rows()});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  return a.tape->push(std::move(out), [pa = a.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
  });
}

// Each row of a repeated `times` times consecutively: out row i*times+t = row i.
inline Var repeat_rows(Var a, std::size_t times) {
  const Tensor& x = a.val();
  Tensor out({x.rows() * times, x.cols()});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t r = 0; r < times; ++r)
      for (std::size_t j = 0; j < x.cols(); ++j)
        out(i * times + r, j) = x(i, j);
  return a.tape->push(std::move(out), [pa = a.id, times](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t r = 0; r < times; ++r)
        for (std::size_t j = 0; j < g.cols(); ++j)
          ga(i, j) += g(i * times + r, j);
  });
}

// ---- linear algebra ----

inline Var matmul(Var a, Var b) {
  const Tensor& A = a.val();
  const Tensor& B = b.val();
  if (A.cols() != B.rows()) throw std::invalid_argument("matmul: inner dims");
  Tensor out({A.rows(), B.cols()});
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t k = 0; k < A.cols(); ++k) {
      double aik = A(i, k);
      for (std::size_t j = 0; j < B.cols(); ++j)
        out(i, j) += aik * B(k, j);
    }
  return a.tape->push(std::move(out), [pa = a.id, pb = b.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& A = t.value(pa);
    const Tensor& B = t.value(pb);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gb = t.grad_mut(pb);
    // dA += g B^T ; dB += A^T g
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < B.cols(); ++j) {
        double gij = g(i, j);
        if (gij == 0.0) continue;
        for (std::size_t k = 0; k < A.cols(); ++k) {
          ga(i, k) += gij * B(k, j);
          gb(k, j) += A(i, k) * gij;
        }
      }
  });
}

// Matrix (r×c) times vector (c) -> vector (r).
inline Var matvec(Var a, Var x) {
  const Tensor& A = a.val();
  const Tensor& v = x.val();
  if (v.rank() != 1 || A.cols() != v.size())
    throw std::invalid_argument("matvec: dims");
  Tensor out({A.rows()});
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < A.cols(); ++k) s += A(i, k) * v.data[k];
    out.data[i] = s;
  }
  return a.tape->push(std::move(out), [pa = a.id, px = x.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& A = t.value(pa);
    const Tensor& v = t.value(px);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gx = t.grad_mut(px);
    for (std::size_t i = 0; i < A.rows(); ++i) {
      double gi = g.data[i];
      if (gi == 0.0) continue;
      for (std::size_t k = 0; k < A.cols(); ++k) {
        ga(i, k) += gi * v.data[k];
        gx.data[k] += gi * A(i, k);
      }
    }
  });
}

// Matrix (B×d) plus a row vector (d) broadcast over rows.
inline Var add_rowvec(Var a, Var b) {
  const Tensor& A = a.val();
  const Tensor& v = b.val();
  if (v.rank() != 1 || A.cols() != v.size())
    throw std::invalid_argument("add_rowvec: dims");
  Tensor out = A;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) += v.data[j];
  return a.tape->push(std::move(out), [pa = a.id, pb = b.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    Tensor& gb = t.grad_mut(pb);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        ga(i, j) += g(i, j);
        gb.data[j] += g(i, j);
      }
  });
}

// ---- reductions ----

inline Var sum(Var a) {
  double s = 0.0;
  for (double v : a.val().data) s += v;
  return a.tape->push(Tensor::scalar(s), [pa = a.id](Tape& t, int id) {
    double g = t.grad(id).data[0];
    Tensor& ga = t.grad_mut(pa);
    for (auto& v : ga.data) v += g;
  });
}

inline Var mean(Var a) {
  return cmul(sum(a), 1.0 / static_cast<double>(a.val().size()));
}

inline Var row_sums(Var a) {
  const Tensor& A = a.val();
  Tensor out({A.rows()});
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) out.data[i] += A(i, j);
  return a.tape->push(std::move(out), [pa = a.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g.data[i];
  });
}

// Multiply by a 1-element scalar node, broadcast over all of v.
inline Var scale(Var s, Var v) {
  if (s.val().size() != 1) throw std::invalid_argument("scale: not scalar");
  Tensor out = v.val();
  double sv = s.val().data[0];
  for (auto& x : out.data) x *= sv;
  return s.tape->push(std::move(out), [ps = s.id, pv = v.id](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& vv = t.value(pv);
    double sv = t.value(ps).data[0];
    Tensor& gs = t.grad_mut(ps);
    Tensor& gv = t.grad_mut(pv);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gs.data[0] += g.data[i] * vv.data[i];
      gv.data[i] += sv * g.data[i];
    }
  });
}

inline Var dot(Var a, Var b) { return sum(mul(a, b)); }

// ---- softmax family ----

// Row-wise log-softmax; a 1-D input is treated as a single row.
inline Var log_softmax(Var a) {
  const Tensor& x = a.val();
  std::size_t r = x.rank() == 1 ? 1 : x.rows();
  std::size_t c = x.rank() == 1 ? x.size() : x.cols();
  Tensor out = x;
  for (std::size_t i = 0; i < r; ++i) {
    double lse = logsumexp(x.data.data() + i * c, c);
    for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] -= lse;
  }
  return a.tape->push(std::move(out), [pa = a.id, r, c](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    const Tensor& y = t.value(id);  // log-probabilities
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < r; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += g.data[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        ga.data[i * c + j] +=
            g.data[i * c + j] - std::exp(y.data[i * c + j]) * gs;
    }
  });
}

inline Var softmax(Var a) { return expv(log_softmax(a)); }

// out[i] = mat(i, idx[i]); used for picking label log-probabilities.
inline Var pick(Var a, const std::vector<std::size_t>& idx) {
  const Tensor& A = a.val();
  if (idx.size() != A.rows()) throw std::invalid_argument("pick: row count");
  Tensor out({A.rows()});
  for (std::size_t i = 0; i < A.rows(); ++i) out.data[i] = A(i, idx[i]);
  return a.tape->push(std::move(out), [pa = a.id, idx](Tape& t, int id) {
    const Tensor& g = t.grad(id);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < g.size(); ++i) ga(i, idx[i]) += g.data[i];
  });
}

inline Var logsumexp_v(Var a) {
  const Tensor& x = a.val();
  double lse = logsumexp(x.data.data(), x.size());
  return a.tape->push(Tensor::scalar(lse), [pa = a.id, lse](Tape& t, int id) {
    double g = t.grad(id).data[0];
    const Tensor& x = t.value(pa);
    Tensor& ga = t.grad_mut(pa);
    for (std::size_t i = 0; i < x.size(); ++i)
      ga.data[i] += g * std::exp(x.data[i] - lse);
  });
}

// ---- entry points ----

// d(out)/d(wrt) for a scalar-valued out.
inline Tensor gradient(Var out, Var wrt) {
  if (out.val().size() != 1)
    throw std::invalid_argument("gradient: output is not scalar");
  out.tape->backward(out);
  return out.tape->grad(wrt.id);
}

// Jacobian of a vector-valued node w.r.t. a node, as a d×n matrix computed by
// d reverse passes.
inline Tensor jacobian(Var out, Var wrt) {
  std::size_t d = out.val().size();
  std::size_t n = wrt.val().size();
  Tensor J({d, n});
  for (std::size_t i = 0; i < d; ++i) {
    Tensor seed(out.val().shape);
    seed.data[i] = 1.0;
    out.tape->backward(out, seed);
    const Tensor& g = out.tape->grad(wrt.id);
    for (std::size_t j = 0; j < n; ++j) J(i, j) = g.data[j];
  }
  return J;
}

}  // namespace cvi
