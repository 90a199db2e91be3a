// tests/test_gradcheck.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sasv/grad_check.hpp"
#include "sasv/rng.hpp"

using namespace sasv;
using namespace sasv::ag;

namespace {

MatXd scalar(double v) {
  MatXd m(1, 1);
  m(0, 0) = v;
  return m;
}

MatXd random_mat(Rng& rng, int r, int c, double s = 1.0) {
  MatXd m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = s * rng.gaussian();
  return m;
}

// Keeps every coordinate at least `margin` away from zero (relu kink).
MatXd away_from_zero(Rng& rng, int r, int c, double margin) {
  MatXd m = random_mat(rng, r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    if (std::abs(m(k)) < margin) m(k) = (m(k) < 0 ? -margin : margin) + m(k);
  }
  return m;
}

}  // namespace

TEST_CASE("grad_check on x^2 at 3") {
  auto f = [](Tape<double>& t, Var<double> x) { return mul(x, x); };
  CHECK(grad_check(f, scalar(3.0), 1e-5) < 1e-8);
}

TEST_CASE("grad_check on 5x is exact up to rounding") {
  auto f = [](Tape<double>& t, Var<double> x) {
    return sum(scale(x, 5.0));
  };
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    CHECK(grad_check(f, random_mat(rng, 1, 3, 2.0), 1e-5) < 1e-10);
  }
}

TEST_CASE("grad_check on softmax cross-entropy at a random 8-dim point") {
  Rng rng(3);
  auto f = [](Tape<double>& t, Var<double> x) {
    return scale(log(pick(softmax(x), 0, 2)), -1.0);
  };
  CHECK(grad_check(f, random_mat(rng, 1, 8, 2.0), 1e-5) < 1e-4);
}

TEST_CASE("grad_check validates eps and scalar output") {
  auto f = [](Tape<double>& t, Var<double> x) { return mul(x, x); };
  CHECK_THROWS_AS(grad_check(f, scalar(1.0), 0.0), ContractError);
  CHECK_THROWS_AS(grad_check(f, scalar(1.0), 1e-2), ContractError);
  auto g = [](Tape<double>& t, Var<double> x) { return relu(x); };
  CHECK_THROWS_AS(grad_check(g, MatXd::Ones(2, 2), 1e-5), ContractError);
}

// Every differentiable primitive, 100 seeded random points, eps = 1e-5,
// max relative error < 1e-4. The gradient-reversal op is deliberately absent:
// its backward pass disagrees with its forward pass by construction, so it is
// checked against its own exact contract in test_autograd instead.
TEST_CASE("every primitive passes 100-point grad_check") {
  constexpr double kEps = 1e-5;
  constexpr double kTol = 1e-4;
  constexpr int kPoints = 100;

  auto check2 = [&](const char* name, auto f, auto gen_a, auto gen_b) {
    Rng rng(1000 + static_cast<uint64_t>(name[0]) * 31 +
            static_cast<uint64_t>(name[1]));
    for (int i = 0; i < kPoints; ++i) {
      std::vector<MatXd> pts{gen_a(rng), gen_b(rng)};
      const double err = grad_check_multi(f, pts, kEps);
      INFO(name << " point " << i);
      CHECK(err < kTol);
    }
  };
  auto check1 = [&](const char* name, auto f, auto gen) {
    Rng rng(2000 + static_cast<uint64_t>(name[0]) * 31 +
            static_cast<uint64_t>(name[1]));
    for (int i = 0; i < kPoints; ++i) {
      std::vector<MatXd> pts{gen(rng)};
      const double err = grad_check_multi(f, pts, kEps);
      INFO(name << " point " << i);
      CHECK(err < kTol);
    }
  };

  auto gen23 = [](Rng& r) { return random_mat(r, 2, 3); };
  auto gen32 = [](Rng& r) { return random_mat(r, 3, 2); };
  using Vars = std::vector<Var<double>>;

  // weighting constant so gradients are non-uniform
  auto weighted_sum = [](Tape<double>& t, Var<double> y) {
    MatXd w(y.value().rows(), y.value().cols());
    for (Eigen::Index k = 0; k < w.size(); ++k)
      w(k) = 0.25 * static_cast<double>(k + 1);
    return sum(mul(y, t.constant(w)));
  };

  check2("add", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, add(v[0], v[1])); }, gen23, gen23);
  check2("sub", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, sub(v[0], v[1])); }, gen23, gen23);
  check2("mul", [&](Tape<double>& t, const Vars& v) {
    return sum(mul(v[0], v[1])); }, gen23, gen23);
  check2("matmul", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, matmul(v[0], v[1])); }, gen23, gen32);
  check1("relu", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, relu(v[0])); },
    [](Rng& r) { return away_from_zero(r, 2, 3, 0.05); });
  check1("exp", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, exp(v[0])); }, gen23);
  check1("log", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, log(v[0])); },
    [](Rng& r) { return MatXd(random_mat(r, 2, 3).cwiseAbs().array() + 0.5); });
  check1("softmax", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, softmax(v[0])); },
    [](Rng& r) { return random_mat(r, 2, 4, 2.0); });
  check2("concat", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, concat(v[0], v[1])); }, gen23, gen23);
  check1("l2_norm", [&](Tape<double>& t, const Vars& v) {
    return l2_norm(v[0]); },
    [](Rng& r) {
      MatXd m = random_mat(r, 1, 6);
      if (m.norm() < 0.5) m(0, 0) += 1.0;
      return m;
    });
  check1("l2_normalize", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, l2_normalize(v[0])); },
    [](Rng& r) {
      MatXd m = random_mat(r, 1, 6);
      if (m.norm() < 0.5) m(0, 0) += 1.0;
      return m;
    });
  check1("mean", [&](Tape<double>& t, const Vars& v) {
    return mean(mul(v[0], v[0])); }, gen23);
  check1("sum", [&](Tape<double>& t, const Vars& v) {
    return sum(mul(v[0], v[0])); }, gen23);
  check1("cos", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, cos(v[0])); }, gen23);
  check1("acos", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, acos(v[0])); },
    [](Rng& r) {
      MatXd m(1, 4);
      for (int k = 0; k < 4; ++k)
        m(0, k) = -0.8 + 1.6 * r.uniform_pos();
      return m;
    });
  check1("pick", [&](Tape<double>& t, const Vars& v) {
    return pick(mul(v[0], v[0]), 1, 2); }, gen23);
  check1("col", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, col(v[0], 1)); }, gen23);
  check1("scale", [&](Tape<double>& t, const Vars& v) {
    return sum(scale(v[0], -1.7)); }, gen23);
  check1("add_scalar", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, add_scalar(v[0], 0.3)); }, gen23);
  check1("clamp", [&](Tape<double>& t, const Vars& v) {
    return weighted_sum(t, clamp(v[0], -0.6, 0.6)); },
    [](Rng& r) {
      MatXd m = random_mat(r, 2, 3);
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        while (std::abs(std::abs(m(k)) - 0.6) < 0.02) m(k) += 0.05;
      }
      return m;
    });
}
