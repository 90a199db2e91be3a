// tests/test_autograd.cpp

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

#include "sasv/autograd.hpp"
#include "sasv/rng.hpp"

using namespace sasv;
using namespace sasv::ag;

namespace {

template <typename A, typename B>
bool bit_equal(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

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

}  // namespace

TEST_CASE("square function: value and gradient") {
  Tape<double> t;
  auto x = t.leaf(scalar(3.0));
  auto y = mul(x, x);
  CHECK(t.backward(y) == 9.0);
  CHECK(x.grad()(0, 0) == 6.0);
}

TEST_CASE("constant function: gradient of unused leaf is zero") {
  Tape<double> t;
  auto x = t.leaf(scalar(4.0));
  auto c = t.leaf(scalar(7.0));
  auto root = sum(c);
  t.backward(root);
  CHECK(x.grad()(0, 0) == 0.0);
}

TEST_CASE("relu piecewise values and gradients") {
  {
    Tape<double> t;
    auto x = t.leaf(scalar(-2.0));
    auto y = sum(relu(x));
    CHECK(t.backward(y) == 0.0);
    CHECK(x.grad()(0, 0) == 0.0);
  }
  {
    Tape<double> t;
    auto x = t.leaf(scalar(2.0));
    auto y = sum(relu(x));
    CHECK(t.backward(y) == 2.0);
    CHECK(x.grad()(0, 0) == 1.0);
  }
  {
    // fixed convention: derivative at exactly 0 is 0
    Tape<double> t;
    auto x = t.leaf(scalar(0.0));
    auto y = sum(relu(x));
    t.backward(y);
    CHECK(x.grad()(0, 0) == 0.0);
  }
}

TEST_CASE("grl forward is the identity, bit-exact") {
  Tape<double> t;
  MatXd v(1, 3);
  v << 1.0, 2.0, 3.0;
  auto x = t.leaf(v);
  auto y = grl(x, GrlConfig{1.0});
  CHECK(bit_equal(y.value(), v));
}

TEST_CASE("grl backward hands back -lambda * upstream, exactly") {
  MatXd c(1, 2);
  c << 2.0, 2.0;
  {
    Tape<double> t;
    auto x = t.leaf(MatXd::Ones(1, 2));
    auto loss = sum(mul(grl(x, GrlConfig{1.0}), t.constant(c)));
    t.backward(loss);
    MatXd expect = (-1.0) * c;
    CHECK(bit_equal(x.grad(), expect));
  }
  {
    // arbitrary lambda, arbitrary upstream
    Rng rng(99);
    MatXd u = random_mat(rng, 2, 3);
    Tape<double> t;
    auto x = t.leaf(random_mat(rng, 2, 3));
    auto loss = sum(mul(grl(x, GrlConfig{1.7}), t.constant(u)));
    t.backward(loss);
    MatXd expect = (-1.7) * u;
    CHECK(bit_equal(x.grad(), expect));
  }
  {
    // lambda = 0 blocks the gradient entirely
    Tape<double> t;
    auto x = t.leaf(MatXd::Ones(1, 2));
    auto loss = sum(mul(grl(x, GrlConfig{0.0}), t.constant(c)));
    t.backward(loss);
    CHECK(bit_equal(x.grad(), MatXd::Zero(1, 2)));
  }
}

TEST_CASE("grl composed twice with lambda=1 restores the identity gradient") {
  Rng rng(7);
  MatXd w = random_mat(rng, 1, 4);
  MatXd p = random_mat(rng, 1, 4);

  Tape<double> plain;
  auto x0 = plain.leaf(p);
  plain.backward(sum(mul(x0, plain.constant(w))));

  Tape<double> twice;
  auto x1 = twice.leaf(p);
  auto y = grl(grl(x1, GrlConfig{1.0}), GrlConfig{1.0});
  twice.backward(sum(mul(y, twice.constant(w))));

  CHECK(bit_equal(x1.grad(), x0.grad()));
}

TEST_CASE("grl rejects negative lambda") {
  Tape<double> t;
  auto x = t.leaf(MatXd::Ones(1, 2));
  CHECK_THROWS_AS(grl(x, GrlConfig{-0.5}), ContractError);
}

TEST_CASE("softmax rows sum to one and stay inside (0,1)") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + static_cast<int>(rng.uniform_index(4));
    const int c = 2 + static_cast<int>(rng.uniform_index(7));
    Tape<double> t;
    auto x = t.leaf(random_mat(rng, r, c, 5.0));
    auto y = softmax(x);
    for (int i = 0; i < r; ++i) {
      CHECK(std::abs(y.value().row(i).sum() - 1.0) <= 1e-12);
      for (int j = 0; j < c; ++j) {
        CHECK(y.value()(i, j) > 0.0);
        CHECK(y.value()(i, j) < 1.0);
      }
    }
  }
}

TEST_CASE("repeated forward/backward on identical graphs is bit-identical") {
  Rng rng(55);
  MatXd a = random_mat(rng, 3, 2);
  MatXd b = random_mat(rng, 2, 3);
  auto run = [&](MatXd* grad_a) {
    Tape<double> t;
    auto va = t.leaf(a);
    auto vb = t.leaf(b);
    auto root = mean(relu(matmul(va, vb)));
    double v = t.backward(root);
    *grad_a = va.grad();
    return v;
  };
  MatXd g1, g2;
  const double v1 = run(&g1);
  const double v2 = run(&g2);
  CHECK(v1 == v2);
  CHECK(bit_equal(g1, g2));
}

TEST_CASE("backward rejects a non-scalar root") {
  Tape<double> t;
  auto x = t.leaf(MatXd::Ones(2, 2));
  auto y = relu(x);
  CHECK_THROWS_AS(t.backward(y), ContractError);
}

TEST_CASE("backward reports the op holding a non-finite value") {
  Tape<double> t;
  MatXd big(1, 2);
  big << 1.0, 1000.0;  // exp overflows to Inf
  auto x = t.leaf(big);
  auto y = sum(exp(x));
  try {
    t.backward(y);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("exp") != std::string::npos);
  }
}

TEST_CASE("shape mismatches are contract errors") {
  Tape<double> t;
  auto a = t.leaf(MatXd::Ones(2, 2));
  auto b = t.leaf(MatXd::Ones(2, 3));
  CHECK_THROWS_AS(add(a, b), ContractError);
  CHECK_THROWS_AS(mul(a, b), ContractError);
  CHECK_THROWS_AS(matmul(b, b), ContractError);
  CHECK_THROWS_AS(pick(a, 5, 0), ContractError);
  CHECK_THROWS_AS(col(a, 2), ContractError);
}

TEST_CASE("pick / col / scale / add_scalar / clamp values") {
  Tape<double> t;
  MatXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  auto x = t.leaf(m);
  CHECK(pick(x, 1, 2).value()(0, 0) == 6.0);
  CHECK(bit_equal(col(x, 1).value(), MatXd(m.col(1))));
  CHECK(bit_equal(scale(x, 2.0).value(), MatXd(2.0 * m)));
  CHECK(add_scalar(x, 0.5).value()(0, 0) == 1.5);
  auto cl = clamp(x, 2.0, 5.0);
  CHECK(cl.value()(0, 0) == 2.0);
  CHECK(cl.value()(1, 2) == 5.0);
  CHECK(cl.value()(0, 2) == 3.0);
}

TEST_CASE("l2_normalize yields unit norm and rejects the zero vector") {
  Rng rng(31);
  Tape<double> t;
  auto x = t.leaf(random_mat(rng, 1, 8));
  auto y = l2_normalize(x);
  CHECK(std::abs(y.value().norm() - 1.0) <= 1e-12);
  auto z = t.leaf(MatXd::Zero(1, 4));
  CHECK_THROWS_AS(l2_normalize(z), NumericError);
}

TEST_CASE("single precision tape instantiates and differentiates") {
  Tape<float> t;
  MatX<float> v(1, 1);
  v(0, 0) = 3.0f;
  auto x = t.leaf(v);
  auto y = mul(x, x);
  CHECK(t.backward(y) == 9.0f);
  CHECK(x.grad()(0, 0) == 6.0f);
}
