// Copyright 2026 the incnerf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef INCNERF_AUTODIFF_HPP_
#define INCNERF_AUTODIFF_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "incnerf/errors.hpp"

namespace incnerf::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  int32_t i = -1;
  bool valid() const { return i >= 0; }
};

/// Wengert-list reverse-mode tape over scalars.
///
/// Every operation appends one node holding the indices of its (at most two)
/// parents and the local partial derivatives evaluated at forward time.
/// backward() seeds the root with 1 and sweeps the list once in reverse.
/// Multi-output operations with hand-written pullbacks (the radiance-field
/// evaluation) are attached via custom(); their outputs occupy a contiguous
/// block of parentless nodes and the pullback fires when the sweep reaches
/// the block.
class Tape {
 public:
  Tape() = default;

  Var leaf(double v) { return push(v, -1, 0.0, -1, 0.0); }
  Var constant(double v) { return push(v, -1, 0.0, -1, 0.0); }

  double value(Var x) const { return val_[x.i]; }
  double adjoint(Var x) const { return adj_[x.i]; }
  std::size_t size() const { return val_.size(); }

  Var add(Var a, Var b) { return push(val_[a.i] + val_[b.i], a.i, 1.0, b.i, 1.0); }
  Var sub(Var a, Var b) { return push(val_[a.i] - val_[b.i], a.i, 1.0, b.i, -1.0); }
  Var mul(Var a, Var b) {
    return push(val_[a.i] * val_[b.i], a.i, val_[b.i], b.i, val_[a.i]);
  }
  Var div(Var a, Var b) {
    const double ib = 1.0 / val_[b.i];
    const double r = val_[a.i] * ib;
    return push(r, a.i, ib, b.i, -r * ib);
  }

  Var add_c(Var a, double c) { return push(val_[a.i] + c, a.i, 1.0, -1, 0.0); }
  Var mul_c(Var a, double c) { return push(val_[a.i] * c, a.i, c, -1, 0.0); }
  Var rsub_c(double c, Var a) { return push(c - val_[a.i], a.i, -1.0, -1, 0.0); }
  Var rdiv_c(double c, Var a) {
    const double iv = 1.0 / val_[a.i];
    const double r = c * iv;
    return push(r, a.i, -r * iv, -1, 0.0);
  }

  Var neg(Var a) { return push(-val_[a.i], a.i, -1.0, -1, 0.0); }
  Var sin(Var a) {
    return push(std::sin(val_[a.i]), a.i, std::cos(val_[a.i]), -1, 0.0);
  }
  Var cos(Var a) {
    return push(std::cos(val_[a.i]), a.i, -std::sin(val_[a.i]), -1, 0.0);
  }
  Var exp(Var a) {
    const double e = std::exp(val_[a.i]);
    return push(e, a.i, e, -1, 0.0);
  }
  Var log(Var a) { return push(std::log(val_[a.i]), a.i, 1.0 / val_[a.i], -1, 0.0); }
  Var sqrt(Var a) {
    const double s = std::sqrt(val_[a.i]);
    return push(s, a.i, 0.5 / s, -1, 0.0);
  }
  Var sigmoid(Var a) {
    const double s = 1.0 / (1.0 + std::exp(-val_[a.i]));
    return push(s, a.i, s * (1.0 - s), -1, 0.0);
  }
  Var softplus(Var a) {
    const double x = val_[a.i];
    // log(1+exp(x)) in the overflow-safe form; derivative is the logistic.
    const double v = x > 30.0 ? x : std::log1p(std::exp(x));
    return push(v, a.i, 1.0 / (1.0 + std::exp(-x)), -1, 0.0);
  }

  /// Smooth-L1 of (pred - target) with threshold beta. At |d| == beta the two
  /// one-sided derivatives coincide, so the quadratic branch is used there.
  Var smooth_l1(Var pred, double target, double beta) {
    const double d = val_[pred.i] - target;
    if (std::abs(d) <= beta) {
      return push(0.5 * d * d / beta, pred.i, d / beta, -1, 0.0);
    }
    return push(std::abs(d) - 0.5 * beta, pred.i, d > 0 ? 1.0 : -1.0, -1, 0.0);
  }

  using PullbackFn = void (*)(void* ctx, const double* out_adj, Tape& tape);

  /// Appends n_out parentless nodes holding out_values and registers a
  /// pullback that runs when the reverse sweep reaches the block. The
  /// pullback must route d(loss)/d(out) into input adjoints via
  /// accumulate_adjoint() and into any external gradient buffers it owns.
  Var custom(const double* out_values, int n_out, PullbackFn fn, void* ctx) {
    Var first = constant(out_values[0]);
    for (int k = 1; k < n_out; ++k) constant(out_values[k]);
    customs_.push_back(CustomRec{fn, ctx, first.i});
    return first;
  }

  void accumulate_adjoint(Var x, double da) { adj_[x.i] += da; }

  /// Reverse sweep from `root`. Throws NonFiniteGradientError when the seed
  /// value itself is non-finite (the forward pass already diverged).
  void backward(Var root) {
    if (!std::isfinite(val_[root.i])) {
      throw NonFiniteGradientError("backward: loss value is not finite");
    }
    adj_.assign(val_.size(), 0.0);
    adj_[root.i] = 1.0;
    std::size_t next_custom = customs_.size();
    for (int32_t i = root.i; i >= 0; --i) {
      if (next_custom > 0 && customs_[next_custom - 1].out_begin == i) {
        const CustomRec& c = customs_[next_custom - 1];
        c.fn(c.ctx, adj_.data() + c.out_begin, *this);
        --next_custom;
        continue;
      }
      const double a = adj_[i];
      if (a == 0.0) continue;
      const Node& n = node_[i];
      if (n.p0 >= 0) adj_[n.p0] += n.d0 * a;
      if (n.p1 >= 0) adj_[n.p1] += n.d1 * a;
    }
  }

  /// Drops all nodes but keeps capacity, so one tape can be reused per ray.
  void reset() {
    val_.clear();
    node_.clear();
    adj_.clear();
    customs_.clear();
  }

 private:
  struct Node {
    int32_t p0, p1;
    double d0, d1;
  };
  struct CustomRec {
    PullbackFn fn;
    void* ctx;
    int32_t out_begin;
  };

  Var push(double v, int32_t p0, double d0, int32_t p1, double d1) {
    val_.push_back(v);
    node_.push_back(Node{p0, p1, d0, d1});
    return Var{static_cast<int32_t>(val_.size() - 1)};
  }

  std::vector<double> val_;
  std::vector<Node> node_;
  std::vector<double> adj_;
  std::vector<CustomRec> customs_;
};

/// Value-semantics wrapper so templated numeric code can run on the tape.
struct Rev {
  Tape* tape = nullptr;
  Var v{};

  Rev() = default;
  Rev(Tape& t, Var var) : tape(&t), v(var) {}
  double value() const { return tape->value(v); }
};

inline Rev operator+(Rev a, Rev b) { return {*a.tape, a.tape->add(a.v, b.v)}; }
inline Rev operator-(Rev a, Rev b) { return {*a.tape, a.tape->sub(a.v, b.v)}; }
inline Rev operator*(Rev a, Rev b) { return {*a.tape, a.tape->mul(a.v, b.v)}; }
inline Rev operator/(Rev a, Rev b) { return {*a.tape, a.tape->div(a.v, b.v)}; }
inline Rev operator-(Rev a) { return {*a.tape, a.tape->neg(a.v)}; }

inline Rev operator+(Rev a, double c) { return {*a.tape, a.tape->add_c(a.v, c)}; }
inline Rev operator+(double c, Rev a) { return a + c; }
inline Rev operator-(Rev a, double c) { return {*a.tape, a.tape->add_c(a.v, -c)}; }
inline Rev operator-(double c, Rev a) { return {*a.tape, a.tape->rsub_c(c, a.v)}; }
inline Rev operator*(Rev a, double c) { return {*a.tape, a.tape->mul_c(a.v, c)}; }
inline Rev operator*(double c, Rev a) { return a * c; }
inline Rev operator/(Rev a, double c) { return {*a.tape, a.tape->mul_c(a.v, 1.0 / c)}; }
inline Rev operator/(double c, Rev a) { return {*a.tape, a.tape->rdiv_c(c, a.v)}; }

inline Rev sin(Rev a) { return {*a.tape, a.tape->sin(a.v)}; }
inline Rev cos(Rev a) { return {*a.tape, a.tape->cos(a.v)}; }
inline Rev exp(Rev a) { return {*a.tape, a.tape->exp(a.v)}; }
inline Rev log(Rev a) { return {*a.tape, a.tape->log(a.v)}; }
inline Rev sqrt(Rev a) { return {*a.tape, a.tape->sqrt(a.v)}; }

/// Reads through to the underlying double; lets templated code branch on
/// values (Rodrigues small-angle switch, loss branch) for either scalar type.
inline double scalar_value(double x) { return x; }
inline double scalar_value(Rev x) { return x.value(); }

/// Builds a constant of the same scalar kind as `like`.
inline double constant_like(double /*like*/, double c) { return c; }
inline Rev constant_like(Rev like, double c) {
  return {*like.tape, like.tape->constant(c)};
}

/// Smooth-L1 against a constant target (Eq. form: quadratic inside beta,
/// linear outside). Throws DomainError on beta <= 0.
double smooth_l1(double pred, double target, double beta);

inline Rev smooth_l1(Rev pred, double target, double beta) {
  if (beta <= 0.0) throw DomainError("smooth_l1: beta must be > 0");
  return {*pred.tape, pred.tape->smooth_l1(pred.v, target, beta)};
}

/// Step-decay learning-rate schedule: base * decay^floor(epoch / every).
struct LrSchedule {
  double base = 1e-3;
  double decay = 1.0;
  int every = 1;
};

double lr_at(const LrSchedule& schedule, std::int64_t epoch);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter Adam moments plus the shared step counter.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;

  explicit AdamState(std::size_t n = 0)
      : first_moment(n, 0.0), second_moment(n, 0.0) {}
  std::size_t size() const { return first_moment.size(); }

  /// Zeroes the moments of a slot range (used when a camera is re-registered).
  void reset_slots(std::size_t begin, std::size_t count) {
    for (std::size_t k = begin; k < begin + count; ++k) {
      first_moment[k] = 0.0;
      second_moment[k] = 0.0;
    }
  }
};

/// One bias-corrected Adam step over the full parameter vector.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr,
               const AdamConfig& cfg = {});

/// Adam step restricted to `slots`; untouched slots keep parameters and
/// moments bit-identical. grads[k] pairs with params[slots[k]].
void adam_step_masked(AdamState& state, std::span<double> params,
                      std::span<const double> grads,
                      std::span<const int> slots, double lr,
                      const AdamConfig& cfg = {});

}  // namespace incnerf::ad

#endif  // INCNERF_AUTODIFF_HPP_
