// sasv/autograd.hpp

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

#ifndef SASV_AUTOGRAD_HPP_
#define SASV_AUTOGRAD_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sasv/error.hpp"

namespace sasv {
namespace ag {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MatXd = MatX<double>;

// Dense reverse-mode autodiff on a define-by-run tape. Values are computed
// eagerly at node creation; backward() walks the tape in reverse creation
// order, which is a topological order by construction. A tape and its
// tensors are confined to one thread; independent tapes may run in parallel.
enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,       // elementwise
  kMatMul,
  kRelu,
  kExp,
  kLog,
  kSoftmax,   // row-wise
  kConcat,    // along columns
  kL2Norm,    // Frobenius norm -> 1x1
  kNormalize, // x / ||x||
  kMean,      // mean of all entries -> 1x1
  kSum,       // sum of all entries -> 1x1
  kCos,       // elementwise
  kAcos,      // elementwise
  kGrl,       // identity forward, -lambda * g backward
  kPick,      // single entry -> 1x1
  kCol,       // single column
  kScale,     // constant * x
  kAddScalar, // x + constant
  kClamp,     // clamp entries to [lo, hi]
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kMatMul: return "matmul";
    case Op::kRelu: return "relu";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSoftmax: return "softmax";
    case Op::kConcat: return "concat";
    case Op::kL2Norm: return "l2_norm";
    case Op::kNormalize: return "l2_normalize";
    case Op::kMean: return "mean";
    case Op::kSum: return "sum";
    case Op::kCos: return "cos";
    case Op::kAcos: return "acos";
    case Op::kGrl: return "grl";
    case Op::kPick: return "pick";
    case Op::kCol: return "col";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kClamp: return "clamp";
  }
  return "?";
}

// Scale applied to the reversed gradient of a gradient-reversal node.
struct GrlConfig {
  double lambda = 1.0;
};

template <typename Scalar>
class Tape;

// Lightweight handle to a tape node. Copyable; valid until Tape::clear().
template <typename Scalar>
class Var {
 public:
  Var() = default;

  const MatX<Scalar>& value() const;
  // Leaf gradient after backward(). Exact zeros for untouched or frozen nodes.
  MatX<Scalar> grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }
  Tape<Scalar>* tape() const { return tape_; }

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, int index) : tape_(tape), index_(index) {}
  Tape<Scalar>* tape_ = nullptr;
  int index_ = -1;
};

template <typename Scalar>
class Tape {
 public:
  using Mat = MatX<Scalar>;

  Var<Scalar> leaf(Mat value, bool requires_grad = true) {
    return push(Op::kLeaf, -1, -1, std::move(value), requires_grad);
  }
  Var<Scalar> constant(Mat value) { return leaf(std::move(value), false); }
  Var<Scalar> scalar_constant(Scalar v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m), false);
  }

  Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
    check_same_shape("add", a, b);
    return push(Op::kAdd, a.index_, b.index_, val(a) + val(b));
  }
  Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
    check_same_shape("sub", a, b);
    return push(Op::kSub, a.index_, b.index_, val(a) - val(b));
  }
  Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
    check_same_shape("mul", a, b);
    return push(Op::kMul, a.index_, b.index_, val(a).cwiseProduct(val(b)));
  }
  Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
    if (val(a).cols() != val(b).rows())
      throw ContractError(shape_msg("matmul", a, b));
    return push(Op::kMatMul, a.index_, b.index_, val(a) * val(b));
  }
  Var<Scalar> relu(Var<Scalar> a) {
    return push(Op::kRelu, a.index_, -1, val(a).cwiseMax(Scalar(0)));
  }
  Var<Scalar> exp(Var<Scalar> a) {
    return push(Op::kExp, a.index_, -1, val(a).array().exp().matrix());
  }
  Var<Scalar> log(Var<Scalar> a) {
    return push(Op::kLog, a.index_, -1, val(a).array().log().matrix());
  }
  // Row-wise softmax with max subtraction; each output row sums to 1.
  Var<Scalar> softmax(Var<Scalar> a) {
    Mat y = val(a);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      row = (row.array() - row.maxCoeff()).exp();
      row /= row.sum();
    }
    return push(Op::kSoftmax, a.index_, -1, std::move(y));
  }
  // [a, b] side by side; rows must match.
  Var<Scalar> concat(Var<Scalar> a, Var<Scalar> b) {
    if (val(a).rows() != val(b).rows())
      throw ContractError(shape_msg("concat", a, b));
    Mat y(val(a).rows(), val(a).cols() + val(b).cols());
    y << val(a), val(b);
    return push(Op::kConcat, a.index_, b.index_, std::move(y));
  }
  Var<Scalar> l2_norm(Var<Scalar> a) {
    Mat y(1, 1);
    y(0, 0) = val(a).norm();
    return push(Op::kL2Norm, a.index_, -1, std::move(y));
  }
  Var<Scalar> l2_normalize(Var<Scalar> a) {
    const Scalar r = val(a).norm();
    if (!(r > Scalar(0)))
      throw NumericError("l2_normalize: zero-norm input");
    return push(Op::kNormalize, a.index_, -1, val(a) / r);
  }
  Var<Scalar> mean(Var<Scalar> a) {
    Mat y(1, 1);
    y(0, 0) = val(a).sum() / static_cast<Scalar>(val(a).size());
    return push(Op::kMean, a.index_, -1, std::move(y));
  }
  Var<Scalar> sum(Var<Scalar> a) {
    Mat y(1, 1);
    y(0, 0) = val(a).sum();
    return push(Op::kSum, a.index_, -1, std::move(y));
  }
  Var<Scalar> cos(Var<Scalar> a) {
    return push(Op::kCos, a.index_, -1, val(a).array().cos().matrix());
  }
  Var<Scalar> acos(Var<Scalar> a) {
    return push(Op::kAcos, a.index_, -1, val(a).array().acos().matrix());
  }
  // Identity in the forward pass; the adjoint handed to the input is
  // -lambda * (incoming adjoint).
  Var<Scalar> grl(Var<Scalar> a, const GrlConfig& cfg) {
    if (cfg.lambda < 0)
      throw ContractError("grl: lambda must be nonnegative");
    Var<Scalar> v = push(Op::kGrl, a.index_, -1, val(a));
    nodes_[v.index_].c = static_cast<Scalar>(cfg.lambda);
    return v;
  }
  Var<Scalar> pick(Var<Scalar> a, Eigen::Index i, Eigen::Index j) {
    if (i < 0 || i >= val(a).rows() || j < 0 || j >= val(a).cols())
      throw ContractError("pick: index out of range");
    Mat y(1, 1);
    y(0, 0) = val(a)(i, j);
    Var<Scalar> v = push(Op::kPick, a.index_, -1, std::move(y));
    nodes_[v.index_].i = i;
    nodes_[v.index_].j = j;
    return v;
  }
  Var<Scalar> col(Var<Scalar> a, Eigen::Index j) {
    if (j < 0 || j >= val(a).cols())
      throw ContractError("col: index out of range");
    Var<Scalar> v = push(Op::kCol, a.index_, -1, val(a).col(j));
    nodes_[v.index_].j = j;
    return v;
  }
  Var<Scalar> scale(Var<Scalar> a, Scalar c) {
    Var<Scalar> v = push(Op::kScale, a.index_, -1, c * val(a));
    nodes_[v.index_].c = c;
    return v;
  }
  Var<Scalar> add_scalar(Var<Scalar> a, Scalar c) {
    Var<Scalar> v = push(Op::kAddScalar, a.index_, -1,
                         (val(a).array() + c).matrix());
    nodes_[v.index_].c = c;
    return v;
  }
  Var<Scalar> clamp(Var<Scalar> a, Scalar lo, Scalar hi) {
    if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
    Var<Scalar> v = push(Op::kClamp, a.index_, -1,
                         val(a).cwiseMax(lo).cwiseMin(hi));
    nodes_[v.index_].c = lo;
    nodes_[v.index_].c2 = hi;
    return v;
  }

  // Reverse sweep from a scalar root. Returns the root value. Throws
  // NumericError naming the first op whose cached value is not finite, and
  // ContractError if the root is not 1x1. Repeated runs over an identical
  // graph are bit-identical.
  Scalar backward(Var<Scalar> root) {
    if (root.tape_ != this) throw ContractError("backward: foreign var");
    const int r = root.index_;
    if (nodes_[r].value.size() != 1)
      throw ContractError("backward: root must evaluate to a scalar");
    for (int i = 0; i <= r; ++i) {
      if (!nodes_[i].value.allFinite())
        throw NumericError(std::string("non-finite value in op '") +
                           op_name(nodes_[i].op) + "' (node " +
                           std::to_string(i) + ")");
    }
    adjoints_.assign(nodes_.size(), Mat());
    adjoints_[r] = Mat::Ones(1, 1);
    for (int i = r; i >= 0; --i) {
      if (adjoints_[i].size() == 0) continue;  // not an ancestor of root
      propagate(i);
    }
    return nodes_[r].value(0, 0);
  }

  void clear() {
    nodes_.clear();
    adjoints_.clear();
  }
  size_t size() const { return nodes_.size(); }

  // Smallest distance to a non-differentiable point across the whole graph
  // (relu/clamp kinks, acos and log domain edges, norm at zero). Grad-check
  // callers resample when this is small.
  double min_kink_margin() const {
    double m = std::numeric_limits<double>::infinity();
    auto upd = [&m](double d) { m = std::min(m, d); };
    for (const auto& n : nodes_) {
      if (n.a < 0) continue;
      const Mat& x = nodes_[n.a].value;
      switch (n.op) {
        case Op::kRelu:
          upd(static_cast<double>(x.cwiseAbs().minCoeff()));
          break;
        case Op::kClamp:
          for (Eigen::Index k = 0; k < x.size(); ++k) {
            upd(std::abs(static_cast<double>(x(k) - n.c)));
            upd(std::abs(static_cast<double>(n.c2 - x(k))));
          }
          break;
        case Op::kAcos:
          upd(static_cast<double>(
              (Scalar(1) - x.cwiseAbs().maxCoeff())));
          break;
        case Op::kLog:
          upd(static_cast<double>(x.minCoeff()));
          break;
        case Op::kL2Norm:
        case Op::kNormalize:
          upd(static_cast<double>(x.norm()));
          break;
        default:
          break;
      }
    }
    return m;
  }

 private:
  friend class Var<Scalar>;

  struct Node {
    Op op = Op::kLeaf;
    int a = -1, b = -1;
    Mat value;
    Scalar c = Scalar(0), c2 = Scalar(0);  // op constants (lambda, scale, ...)
    Eigen::Index i = 0, j = 0;             // pick/col indices
    bool requires_grad = false;
  };

  const Mat& val(Var<Scalar> v) const {
    if (v.tape_ != this) throw ContractError("op: var belongs to another tape");
    return nodes_[v.index_].value;
  }

  Var<Scalar> push(Op op, int a, int b, Mat value, bool leaf_rg = false) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.value = std::move(value);
    n.requires_grad = (op == Op::kLeaf)
                          ? leaf_rg
                          : ((a >= 0 && nodes_[a].requires_grad) ||
                             (b >= 0 && nodes_[b].requires_grad));
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  static std::string dims(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }
  std::string shape_msg(const char* op, Var<Scalar> a, Var<Scalar> b) const {
    return std::string(op) + ": incompatible shapes " + dims(val(a)) + " and " +
           dims(val(b));
  }
  void check_same_shape(const char* op, Var<Scalar> a, Var<Scalar> b) const {
    if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
      throw ContractError(shape_msg(op, a, b));
  }

  void accum(int idx, const Mat& delta) {
    if (idx < 0 || !nodes_[idx].requires_grad) return;
    if (adjoints_[idx].size() == 0)
      adjoints_[idx] = delta;
    else
      adjoints_[idx] += delta;
  }

  void propagate(int i) {
    const Node& n = nodes_[i];
    const Mat& g = adjoints_[i];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        accum(n.a, g);
        accum(n.b, g);
        break;
      case Op::kSub:
        accum(n.a, g);
        accum(n.b, -g);
        break;
      case Op::kMul:
        accum(n.a, g.cwiseProduct(nodes_[n.b].value));
        accum(n.b, g.cwiseProduct(nodes_[n.a].value));
        break;
      case Op::kMatMul:
        accum(n.a, g * nodes_[n.b].value.transpose());
        accum(n.b, nodes_[n.a].value.transpose() * g);
        break;
      case Op::kRelu: {
        // derivative at exactly 0 is defined as 0
        const Mat& x = nodes_[n.a].value;
        accum(n.a, (x.array() > Scalar(0))
                       .select(g.array(), Scalar(0))
                       .matrix());
        break;
      }
      case Op::kExp:
        accum(n.a, g.cwiseProduct(n.value));
        break;
      case Op::kLog:
        accum(n.a, g.cwiseQuotient(nodes_[n.a].value));
        break;
      case Op::kSoftmax: {
        const Mat& y = n.value;
        Mat d(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          const Scalar dot = g.row(r).cwiseProduct(y.row(r)).sum();
          d.row(r) = y.row(r).cwiseProduct(
              (g.row(r).array() - dot).matrix());
        }
        accum(n.a, d);
        break;
      }
      case Op::kConcat: {
        const Eigen::Index ca = nodes_[n.a].value.cols();
        accum(n.a, g.leftCols(ca));
        accum(n.b, g.rightCols(g.cols() - ca));
        break;
      }
      case Op::kL2Norm: {
        const Scalar r = n.value(0, 0);
        if (r > Scalar(0)) accum(n.a, (g(0, 0) / r) * nodes_[n.a].value);
        // at the origin the norm has a kink; the subgradient 0 is used
        break;
      }
      case Op::kNormalize: {
        const Scalar r = nodes_[n.a].value.norm();
        const Scalar dot = g.cwiseProduct(n.value).sum();
        accum(n.a, (g - dot * n.value) / r);
        break;
      }
      case Op::kMean: {
        const Scalar s = g(0, 0) / static_cast<Scalar>(nodes_[n.a].value.size());
        accum(n.a, Mat::Constant(nodes_[n.a].value.rows(),
                                 nodes_[n.a].value.cols(), s));
        break;
      }
      case Op::kSum:
        accum(n.a, Mat::Constant(nodes_[n.a].value.rows(),
                                 nodes_[n.a].value.cols(), g(0, 0)));
        break;
      case Op::kCos:
        accum(n.a, -g.cwiseProduct(
                       nodes_[n.a].value.array().sin().matrix()));
        break;
      case Op::kAcos:
        accum(n.a, -g.cwiseProduct(
                       (Scalar(1) - nodes_[n.a].value.array().square())
                           .rsqrt()
                           .matrix()));
        break;
      case Op::kGrl:
        if (n.c != Scalar(0)) accum(n.a, (-n.c) * g);
        break;
      case Op::kPick: {
        Mat d = Mat::Zero(nodes_[n.a].value.rows(), nodes_[n.a].value.cols());
        d(n.i, n.j) = g(0, 0);
        accum(n.a, d);
        break;
      }
      case Op::kCol: {
        Mat d = Mat::Zero(nodes_[n.a].value.rows(), nodes_[n.a].value.cols());
        d.col(n.j) = g;
        accum(n.a, d);
        break;
      }
      case Op::kScale:
        accum(n.a, n.c * g);
        break;
      case Op::kAddScalar:
        accum(n.a, g);
        break;
      case Op::kClamp: {
        const Mat& x = nodes_[n.a].value;
        accum(n.a, ((x.array() > n.c) && (x.array() < n.c2))
                       .select(g.array(), Scalar(0))
                       .matrix());
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Mat> adjoints_;
};

template <typename Scalar>
const MatX<Scalar>& Var<Scalar>::value() const {
  return tape_->nodes_[index_].value;
}

template <typename Scalar>
MatX<Scalar> Var<Scalar>::grad() const {
  if (index_ < static_cast<int>(tape_->adjoints_.size()) &&
      tape_->adjoints_[index_].size() != 0)
    return tape_->adjoints_[index_];
  return MatX<Scalar>::Zero(value().rows(), value().cols());
}

// Free functions so model code reads as expressions.
template <typename S> Var<S> add(Var<S> a, Var<S> b) { return a.tape()->add(a, b); }
template <typename S> Var<S> sub(Var<S> a, Var<S> b) { return a.tape()->sub(a, b); }
template <typename S> Var<S> mul(Var<S> a, Var<S> b) { return a.tape()->mul(a, b); }
template <typename S> Var<S> matmul(Var<S> a, Var<S> b) { return a.tape()->matmul(a, b); }
template <typename S> Var<S> relu(Var<S> a) { return a.tape()->relu(a); }
template <typename S> Var<S> exp(Var<S> a) { return a.tape()->exp(a); }
template <typename S> Var<S> log(Var<S> a) { return a.tape()->log(a); }
template <typename S> Var<S> softmax(Var<S> a) { return a.tape()->softmax(a); }
template <typename S> Var<S> concat(Var<S> a, Var<S> b) { return a.tape()->concat(a, b); }
template <typename S> Var<S> l2_norm(Var<S> a) { return a.tape()->l2_norm(a); }
template <typename S> Var<S> l2_normalize(Var<S> a) { return a.tape()->l2_normalize(a); }
template <typename S> Var<S> mean(Var<S> a) { return a.tape()->mean(a); }
template <typename S> Var<S> sum(Var<S> a) { return a.tape()->sum(a); }
template <typename S> Var<S> cos(Var<S> a) { return a.tape()->cos(a); }
template <typename S> Var<S> acos(Var<S> a) { return a.tape()->acos(a); }
template <typename S> Var<S> grl(Var<S> a, const GrlConfig& c) { return a.tape()->grl(a, c); }
template <typename S> Var<S> pick(Var<S> a, Eigen::Index i, Eigen::Index j) { return a.tape()->pick(a, i, j); }
template <typename S> Var<S> col(Var<S> a, Eigen::Index j) { return a.tape()->col(a, j); }
template <typename S> Var<S> scale(Var<S> a, S c) { return a.tape()->scale(a, c); }
template <typename S> Var<S> add_scalar(Var<S> a, S c) { return a.tape()->add_scalar(a, c); }
template <typename S> Var<S> clamp(Var<S> a, S lo, S hi) { return a.tape()->clamp(a, lo, hi); }

template <typename S> Var<S> operator+(Var<S> a, Var<S> b) { return add(a, b); }
template <typename S> Var<S> operator-(Var<S> a, Var<S> b) { return sub(a, b); }
template <typename S> Var<S> operator*(Var<S> a, Var<S> b) { return mul(a, b); }

}  // namespace ag
}  // namespace sasv

#endif  // SASV_AUTOGRAD_HPP_
