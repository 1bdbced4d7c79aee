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
#include "incnerf/autodiff.hpp"

#include <cmath>
#include <doctest.h>
#include <vector>

using namespace incnerf;
using namespace incnerf::ad;

TEST_CASE("tape differentiates p^2 at p=3") {
  Tape tape;
  Rev p{tape, tape.leaf(3.0)};
  Rev loss = p * p;
  tape.backward(loss.v);
  CHECK(loss.value() == doctest::Approx(9.0));
  CHECK(tape.adjoint(p.v) == doctest::Approx(6.0));
}

TEST_CASE("tape handles shared subexpressions and unary chains") {
  Tape tape;
  Rev x{tape, tape.leaf(0.7)};
  Rev y = sin(x) * cos(x) + exp(x) / (1.0 + x * x);
  tape.backward(y.v);
  // analytic derivative
  const double xv = 0.7;
  const double expected = std::cos(2.0 * xv) +
                          std::exp(xv) * (1.0 + xv * xv - 2.0 * xv) /
                              ((1.0 + xv * xv) * (1.0 + xv * xv));
  CHECK(tape.adjoint(x.v) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("backward throws on a non-finite loss") {
  Tape tape;
  Rev x{tape, tape.leaf(0.0)};
  Rev y = 1.0 / x;  // inf
  CHECK_THROWS_AS(tape.backward(y.v), NonFiniteGradientError);
}

TEST_CASE("custom pullback routes adjoints to inputs and buffers") {
  // fused op computing (a*b, a+b) with a hand-written pullback
  struct Ctx {
    Var a, b;
    double buffer = 0.0;
  };
  auto pullback = [](void* ctx, const double* out_adj, Tape& tape) {
    auto* c = static_cast<Ctx*>(ctx);
    const double av = tape.value(c->a), bv = tape.value(c->b);
    tape.accumulate_adjoint(c->a, out_adj[0] * bv + out_adj[1]);
    tape.accumulate_adjoint(c->b, out_adj[0] * av + out_adj[1]);
    c->buffer += out_adj[0];
  };
  Tape tape;
  Rev a{tape, tape.leaf(2.0)}, b{tape, tape.leaf(5.0)};
  Ctx ctx{a.v, b.v};
  double outs[2] = {2.0 * 5.0, 2.0 + 5.0};
  Var first = tape.custom(outs, 2, pullback, &ctx);
  Rev prod{tape, first}, sum{tape, {first.i + 1}};
  Rev loss = prod * 3.0 + sum;
  tape.backward(loss.v);
  CHECK(tape.adjoint(a.v) == doctest::Approx(3.0 * 5.0 + 1.0));
  CHECK(tape.adjoint(b.v) == doctest::Approx(3.0 * 2.0 + 1.0));
  CHECK(ctx.buffer == doctest::Approx(3.0));
}

TEST_CASE("smooth_l1 closed-form values") {
  CHECK(smooth_l1(0.5, 0.0, 1.0) == doctest::Approx(0.125));
  CHECK(smooth_l1(2.0, 0.0, 1.0) == doctest::Approx(1.5));
  CHECK(smooth_l1(0.37, 0.37, 0.2) == doctest::Approx(0.0));
  CHECK(smooth_l1(-2.0, 0.0, 1.0) == doctest::Approx(1.5));
  CHECK_THROWS_AS(smooth_l1(1.0, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(smooth_l1(1.0, 0.0, -1.0), DomainError);
}

TEST_CASE("smooth_l1 is C1 at the branch point") {
  const double beta = 0.8;
  const double eps = 1e-9;
  // value continuity
  const double below = smooth_l1(beta - eps, 0.0, beta);
  const double above = smooth_l1(beta + eps, 0.0, beta);
  CHECK(std::abs(below - above) < 1e-8);
  // derivative continuity through the tape
  auto grad_at = [&](double pred) {
    Tape tape;
    Rev p{tape, tape.leaf(pred)};
    Rev l = smooth_l1(p, 0.0, beta);
    tape.backward(l.v);
    return tape.adjoint(p.v);
  };
  CHECK(std::abs(grad_at(beta - eps) - grad_at(beta + eps)) < 1e-8);
  CHECK(grad_at(beta) == doctest::Approx(1.0));
}

TEST_CASE("tape smooth_l1 matches the plain version and differentiates") {
  Tape tape;
  Rev p{tape, tape.leaf(0.3)};
  Rev l = smooth_l1(p, 0.55, 1.0);
  CHECK(l.value() == doctest::Approx(smooth_l1(0.3, 0.55, 1.0)));
  tape.backward(l.v);
  CHECK(tape.adjoint(p.v) == doctest::Approx((0.3 - 0.55) / 1.0));
}

TEST_CASE("lr schedule follows base * decay^floor(epoch/every)") {
  LrSchedule theta{0.001, 0.9954, 200};
  CHECK(lr_at(theta, 0) == doctest::Approx(0.001));
  CHECK(lr_at(theta, 199) == doctest::Approx(0.001));
  CHECK(lr_at(theta, 200) == doctest::Approx(0.0009954));
  LrSchedule delta{0.001, 0.9, 2000};
  CHECK(lr_at(delta, 4000) == doctest::Approx(0.00081));
  // monotone non-increasing
  double prev = lr_at(delta, 0);
  for (int e = 1; e < 6000; e += 7) {
    const double cur = lr_at(delta, e);
    CHECK(cur <= prev + 1e-18);
    prev = cur;
  }
}

TEST_CASE("adam first step moves by about -lr * sign(g)") {
  AdamState state(1);
  std::vector<double> p{1.0};
  std::vector<double> g{1.0};
  adam_step(state, p, g, 0.001);
  CHECK(p[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-6));
  CHECK(state.step_count == 1);
}

TEST_CASE("adam leaves parameters alone when gradients are zero") {
  AdamState state(3);
  std::vector<double> p{1.0, -2.0, 0.5};
  std::vector<double> g{0.0, 0.0, 0.0};
  for (int i = 0; i < 50; ++i) adam_step(state, p, g, 0.1);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
  CHECK(p[2] == 0.5);
}

namespace {

// Independent literal transcription of bias-corrected Adam, kept apart from
// the implementation under test.
struct ReferenceAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, double lr, double b1 = 0.9,
              double b2 = 0.999, double eps = 1e-8) {
    t += 1;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    return x - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace

TEST_CASE("adam trajectory on f(x)=x^2 matches a reference implementation") {
  AdamState state(1);
  std::vector<double> p{1.0};
  ReferenceAdam ref;
  double x = 1.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> g{2.0 * p[0]};
    adam_step(state, p, g, 0.1);
    x = ref.step(x, 2.0 * x, 0.1);
    REQUIRE(std::abs(p[0] - x) < 1e-12);
  }
  CHECK(std::abs(p[0]) < 0.05);
}

TEST_CASE("masked adam leaves inactive slots bit-identical") {
  AdamState state(4);
  std::vector<double> p{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> before = p;
  std::vector<int> slots{1, 3};
  std::vector<double> g{0.5, -0.25};
  for (int i = 0; i < 10; ++i) adam_step_masked(state, p, g, slots, 0.01);
  CHECK(p[0] == before[0]);
  CHECK(p[2] == before[2]);
  CHECK(p[1] != before[1]);
  CHECK(p[3] != before[3]);
  CHECK(state.first_moment[0] == 0.0);
  CHECK(state.second_moment[2] == 0.0);
}

TEST_CASE("moment reset zeroes exactly the requested slots") {
  AdamState state(6);
  std::vector<double> p(6, 1.0);
  std::vector<double> g(6, 1.0);
  adam_step(state, p, g, 0.01);
  state.reset_slots(2, 2);
  CHECK(state.first_moment[1] != 0.0);
  CHECK(state.first_moment[2] == 0.0);
  CHECK(state.first_moment[3] == 0.0);
  CHECK(state.first_moment[4] != 0.0);
}
