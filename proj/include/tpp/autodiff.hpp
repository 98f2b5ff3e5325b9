#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tpp/random.hpp"

// Micro reverse-mode automatic differentiation over dense vector values.
// Operations are registered on a per-call tape; parameters live in a
// ParamStore and receive accumulated gradients when a backward pass ends.

namespace tpp::nn {

enum class Init { fan_in_uniform, zeros };

class ParamStore {
 public:
  struct Entry {
    std::string name;
    std::size_t rows, cols;
    std::vector<double> value;  // row-major
    std::vector<double> grad;
  };

  explicit ParamStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  // Registers a parameter exactly once; shapes are immutable afterwards.
  // fan_in_uniform draws from [-k, k] with k = 1/sqrt(cols).
  int add(const std::string& name, std::size_t rows, std::size_t cols,
          Init init = Init::fan_in_uniform) {
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    if (rows == 0 || cols == 0) throw std::invalid_argument("ParamStore: empty shape for " + name);
    Entry e{name, rows, cols, std::vector<double>(rows * cols, 0.0),
            std::vector<double>(rows * cols, 0.0)};
    if (init == Init::fan_in_uniform) {
      const double k = 1.0 / std::sqrt(static_cast<double>(cols));
      for (auto& v : e.value) v = rng_.uniform(-k, k);
    }
    const int id = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));
    index_[name] = id;
    return id;
  }

  Entry& entry(int id) { return entries_.at(static_cast<std::size_t>(id)); }
  const Entry& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  std::size_t count() const { return entries_.size(); }
  std::size_t total_parameters() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }
  void zero_grads() {
    for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
  std::uint64_t seed_;
  Rng rng_;
};

class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  int input(std::vector<double> v) { return make(std::move(v), nullptr); }
  int scalar(double v) { return make({v}, nullptr); }
  int zeros(std::size_t n) { return make(std::vector<double>(n, 0.0), nullptr); }

  // Parameter leaf; memoized so repeated use accumulates one gradient buffer.
  int param(int param_id) {
    auto it = param_nodes_.find(param_id);
    if (it != param_nodes_.end()) return it->second;
    if (!store_) throw std::logic_error("Tape: parameter use without a ParamStore");
    const int id = make(store_->entry(param_id).value, nullptr);
    nodes_[id].param_id = param_id;
    param_nodes_[param_id] = id;
    return id;
  }

  // y = W x + b with W (rows x cols) row-major.
  int affine(int w, int x, int b) {
    const auto& wv = val(w);
    const auto& xv = val(x);
    const auto& bv = val(b);
    const std::size_t cols = xv.size();
    const std::size_t rows = bv.size();
    if (wv.size() != rows * cols) throw std::invalid_argument("affine: shape mismatch");
    std::vector<double> y(bv);
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      const double* wrow = wv.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) acc += wrow[j] * xv[j];
      y[i] += acc;
    }
    return make(std::move(y), [w, x, b](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& wv = t.val(w);
      const auto& xv = t.val(x);
      const std::size_t rows = g.size(), cols = xv.size();
      auto& gw = t.grad(w);
      auto& gx = t.grad(x);
      auto& gb = t.grad(b);
      for (std::size_t i = 0; i < rows; ++i) {
        const double gi = g[i];
        gb[i] += gi;
        double* gwrow = gw.data() + i * cols;
        const double* wrow = wv.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) {
          gwrow[j] += gi * xv[j];
          gx[j] += wrow[j] * gi;
        }
      }
    });
  }

  // y = W x + U h + b; the fused pre-activation of one recurrent step.
  int lincomb2(int w, int x, int u, int h, int b) {
    const auto& wv = val(w);
    const auto& xv = val(x);
    const auto& uv = val(u);
    const auto& hv = val(h);
    const auto& bv = val(b);
    const std::size_t rows = bv.size();
    if (wv.size() != rows * xv.size() || uv.size() != rows * hv.size())
      throw std::invalid_argument("lincomb2: shape mismatch");
    std::vector<double> y(bv);
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      const double* wrow = wv.data() + i * xv.size();
      for (std::size_t j = 0; j < xv.size(); ++j) acc += wrow[j] * xv[j];
      const double* urow = uv.data() + i * hv.size();
      for (std::size_t j = 0; j < hv.size(); ++j) acc += urow[j] * hv[j];
      y[i] += acc;
    }
    return make(std::move(y), [w, x, u, h, b](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& wv = t.val(w);
      const auto& xv = t.val(x);
      const auto& uv = t.val(u);
      const auto& hv = t.val(h);
      const std::size_t rows = g.size(), xc = xv.size(), hc = hv.size();
      auto& gw = t.grad(w);
      auto& gx = t.grad(x);
      auto& gu = t.grad(u);
      auto& gh = t.grad(h);
      auto& gb = t.grad(b);
      for (std::size_t i = 0; i < rows; ++i) {
        const double gi = g[i];
        gb[i] += gi;
        double* gwrow = gw.data() + i * xc;
        const double* wrow = wv.data() + i * xc;
        for (std::size_t j = 0; j < xc; ++j) {
          gwrow[j] += gi * xv[j];
          gx[j] += wrow[j] * gi;
        }
        double* gurow = gu.data() + i * hc;
        const double* urow = uv.data() + i * hc;
        for (std::size_t j = 0; j < hc; ++j) {
          gurow[j] += gi * hv[j];
          gh[j] += urow[j] * gi;
        }
      }
    });
  }

  int slice(int x, std::size_t off, std::size_t len) {
    const auto& xv = val(x);
    if (off + len > xv.size()) throw std::invalid_argument("slice: out of range");
    std::vector<double> y(xv.begin() + off, xv.begin() + off + len);
    return make(std::move(y), [x, off](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      auto& gx = t.grad(x);
      for (std::size_t k = 0; k < g.size(); ++k) gx[off + k] += g[k];
    });
  }

  int sigmoid(int x) {
    std::vector<double> y(val(x));
    for (auto& v : y) v = 1.0 / (1.0 + std::exp(-v));
    return make(std::move(y), [x](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& y = t.val(self);
      auto& gx = t.grad(x);
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * y[k] * (1.0 - y[k]);
    });
  }

  int tanh_(int x) {
    std::vector<double> y(val(x));
    for (auto& v : y) v = std::tanh(v);
    return make(std::move(y), [x](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& y = t.val(self);
      auto& gx = t.grad(x);
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * (1.0 - y[k] * y[k]);
    });
  }

  int relu(int x) {
    std::vector<double> y(val(x));
    for (auto& v : y) v = v > 0.0 ? v : 0.0;
    return make(std::move(y), [x](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& xv = t.val(x);
      auto& gx = t.grad(x);
      for (std::size_t k = 0; k < g.size(); ++k)
        if (xv[k] > 0.0) gx[k] += g[k];
    });
  }

  int add(int a, int b) {
    check_same(a, b, "add");
    std::vector<double> y(val(a));
    const auto& bv = val(b);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += bv[k];
    return make(std::move(y), [a, b](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      auto& ga = t.grad(a);
      auto& gb = t.grad(b);
      for (std::size_t k = 0; k < g.size(); ++k) {
        ga[k] += g[k];
        gb[k] += g[k];
      }
    });
  }

  int sub(int a, int b) {
    check_same(a, b, "sub");
    std::vector<double> y(val(a));
    const auto& bv = val(b);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] -= bv[k];
    return make(std::move(y), [a, b](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      auto& ga = t.grad(a);
      auto& gb = t.grad(b);
      for (std::size_t k = 0; k < g.size(); ++k) {
        ga[k] += g[k];
        gb[k] -= g[k];
      }
    });
  }

  int mul(int a, int b) {  // elementwise
    check_same(a, b, "mul");
    std::vector<double> y(val(a));
    const auto& bv = val(b);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] *= bv[k];
    return make(std::move(y), [a, b](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& av = t.val(a);
      const auto& bv = t.val(b);
      auto& ga = t.grad(a);
      auto& gb = t.grad(b);
      for (std::size_t k = 0; k < g.size(); ++k) {
        ga[k] += g[k] * bv[k];
        gb[k] += g[k] * av[k];
      }
    });
  }

  // Element-wise max over several same-length vectors; gradient flows to the
  // first input attaining each maximum (deterministic tie break).
  int maxpool(const std::vector<int>& xs) {
    if (xs.empty()) throw std::invalid_argument("maxpool: empty input list");
    const std::size_t n = val(xs.front()).size();
    std::vector<double> y(n, -std::numeric_limits<double>::infinity());
    std::vector<int> winner(n, 0);
    for (std::size_t p = 0; p < xs.size(); ++p) {
      const auto& v = val(xs[p]);
      if (v.size() != n) throw std::invalid_argument("maxpool: length mismatch");
      for (std::size_t k = 0; k < n; ++k) {
        if (v[k] > y[k]) {
          y[k] = v[k];
          winner[k] = static_cast<int>(p);
        }
      }
    }
    return make(std::move(y), [xs, winner = std::move(winner)](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      for (std::size_t k = 0; k < g.size(); ++k) t.grad(xs[winner[k]])[k] += g[k];
    });
  }

  int dot(int a, int b) {
    check_same(a, b, "dot");
    const auto& av = val(a);
    const auto& bv = val(b);
    double acc = 0.0;
    for (std::size_t k = 0; k < av.size(); ++k) acc += av[k] * bv[k];
    return make({acc}, [a, b](Tape& t) {
      const int self = t.current_;
      const double g = t.grad(self)[0];
      const auto& av = t.val(a);
      const auto& bv = t.val(b);
      auto& ga = t.grad(a);
      auto& gb = t.grad(b);
      for (std::size_t k = 0; k < av.size(); ++k) {
        ga[k] += g * bv[k];
        gb[k] += g * av[k];
      }
    });
  }

  int log_softmax(int x) {
    const auto& xv = val(x);
    double mx = xv[0];
    for (double v : xv) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : xv) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    std::vector<double> y(xv);
    for (auto& v : y) v -= lse;
    return make(std::move(y), [x](Tape& t) {
      const int self = t.current_;
      const auto& g = t.grad(self);
      const auto& y = t.val(self);
      auto& gx = t.grad(x);
      double gsum = 0.0;
      for (double gi : g) gsum += gi;
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] - std::exp(y[k]) * gsum;
    });
  }

  int pick(int x, std::size_t k) {
    const auto& xv = val(x);
    if (k >= xv.size()) throw std::invalid_argument("pick: index out of range");
    return make({xv[k]}, [x, k](Tape& t) {
      const int self = t.current_;
      t.grad(x)[k] += t.grad(self)[0];
    });
  }

  // --- scalar helpers (length-1 nodes) ---

  int s_exp(int x) {
    const double y = std::exp(scalar_val(x, "s_exp"));
    return make({y}, [x](Tape& t) {
      const int self = t.current_;
      t.grad(x)[0] += t.grad(self)[0] * t.val(self)[0];
    });
  }

  int s_scale(int x, double c) {
    return make({scalar_val(x, "s_scale") * c}, [x, c](Tape& t) {
      const int self = t.current_;
      t.grad(x)[0] += c * t.grad(self)[0];
    });
  }

  // phi(x) = expm1(x)/x, the stabilized form of (e^x - 1)/x with phi(0) = 1.
  int s_phi(int x) {
    const double xv = scalar_val(x, "s_phi");
    return make({phi(xv)}, [x, xv](Tape& t) {
      const int self = t.current_;
      t.grad(x)[0] += t.grad(self)[0] * phi_prime(xv);
    });
  }

  static double phi(double x) {
    if (std::abs(x) < 1e-4) return 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
    return std::expm1(x) / x;
  }
  static double phi_prime(double x) {
    if (std::abs(x) < 1e-4) return 0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0;
    return (x * std::exp(x) - std::expm1(x)) / (x * x);
  }

  // --- access ---

  const std::vector<double>& val(int id) const {
    return nodes_.at(static_cast<std::size_t>(id)).val;
  }
  std::vector<double>& grad(int id) { return nodes_.at(static_cast<std::size_t>(id)).grad; }
  double value0(int id) const { return val(id).at(0); }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss node; accumulates parameter gradients
  // into the store.
  void backward(int loss) {
    auto& ln = nodes_.at(static_cast<std::size_t>(loss));
    if (ln.val.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    ln.grad[0] = 1.0;
    for (int i = loss; i >= 0; --i) {
      current_ = i;
      if (nodes_[static_cast<std::size_t>(i)].back) nodes_[static_cast<std::size_t>(i)].back(*this);
    }
    if (store_) {
      for (const auto& [pid, node] : param_nodes_) {
        auto& g = store_->entry(pid).grad;
        const auto& ng = nodes_[static_cast<std::size_t>(node)].grad;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += ng[k];
      }
    }
  }

 private:
  struct Node {
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void(Tape&)> back;
    int param_id = -1;
  };

  int make(std::vector<double> v, std::function<void(Tape&)> back) {
    Node n;
    n.grad.assign(v.size(), 0.0);
    n.val = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void check_same(int a, int b, const char* op) const {
    if (val(a).size() != val(b).size())
      throw std::invalid_argument(std::string(op) + ": length mismatch");
  }

  double scalar_val(int x, const char* op) const {
    const auto& v = val(x);
    if (v.size() != 1) throw std::invalid_argument(std::string(op) + ": scalar expected");
    return v[0];
  }

  ParamStore* store_;
  std::vector<Node> nodes_;
  std::map<int, int> param_nodes_;
  int current_ = -1;  // node whose backward closure is running
};

}  // namespace tpp::nn
