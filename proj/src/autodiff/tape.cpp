#include "canonica/autodiff/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "canonica/errors.hpp"

namespace canonica::ad {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Index broadcast_dim(Index a, Index b, const char* what) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw GraphError(std::string("incompatible shapes for ") + what + ": " +
                   std::to_string(a) + " vs " + std::to_string(b));
}

Matrix expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

enum class Elementwise { kAdd, kSub, kMul, kDiv };

template <typename A, typename B>
Matrix apply(Elementwise op, const A& a, const B& b) {
  switch (op) {
    case Elementwise::kAdd: return (a + b).matrix();
    case Elementwise::kSub: return (a - b).matrix();
    case Elementwise::kMul: return (a * b).matrix();
    case Elementwise::kDiv: return (a / b).matrix();
  }
  return {};
}

// a (op) b with size-1 dimensions broadcast to rows x cols. The common
// row-vector, column-vector and scalar cases avoid materializing copies.
Matrix broadcast_op(Elementwise op, const Matrix& a, const Matrix& b, Index rows, Index cols) {
  const bool a_full = a.rows() == rows && a.cols() == cols;
  const bool b_full = b.rows() == rows && b.cols() == cols;
  if (a_full && b_full) return apply(op, a.array(), b.array());
  if (a_full && b.size() == 1) return apply(op, a.array(), b(0, 0));
  if (b_full && a.size() == 1) return apply(op, a(0, 0), b.array());
  if (a_full && b.rows() == 1) {
    const auto rep = b.row(0).array().replicate(rows, 1);
    return apply(op, a.array(), rep);
  }
  if (a_full && b.cols() == 1) {
    const auto rep = b.col(0).array().replicate(1, cols);
    return apply(op, a.array(), rep);
  }
  const Matrix ea = expand(a, rows, cols);
  const Matrix eb = expand(b, rows, cols);
  return apply(op, ea.array(), eb.array());
}

Matrix reduce_to(const Matrix& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  Matrix out = g;
  if (rows == 1 && out.rows() != 1) out = out.colwise().sum().eval();
  if (cols == 1 && out.cols() != 1) out = out.rowwise().sum().eval();
  return out;
}

// Vectorized; exp(-x) overflowing to inf still gives the correct limit 0.
Matrix sigmoid_of(const Matrix& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

// log1p(e) = log(u) * e / (u - 1) with u = 1 + e is accurate to a few ulp
// and, unlike Eigen's log1p, vectorizes.
Matrix softplus_of(const Matrix& x) {
  const Eigen::ArrayXXd e = (-x.array().abs()).exp();
  const Eigen::ArrayXXd u = 1.0 + e;
  const Eigen::ArrayXXd d = u - 1.0;
  // Materialized first: select() has no packet path and would drag log
  // back to scalar code.
  const Eigen::ArrayXXd logu = u.log();
  const Eigen::ArrayXXd ratio = logu * (e / d);
  const Eigen::ArrayXXd l = (d == 0.0).select(e, ratio);
  return (x.array().max(0.0) + l).matrix();
}

Matrix reshape_row_major(const Matrix& in, Index rows, Index cols) {
  RowMajorMatrix rm = in;
  return Eigen::Map<const RowMajorMatrix>(rm.data(), rows, cols);
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw GraphError("operation on an invalid Var");
  return *a.tape();
}

Tape& common_tape(Var a, Var b) {
  Tape& t = tape_of(a);
  if (&tape_of(b) != &t) throw GraphError("operands belong to different tapes");
  return t;
}

Var binary(OpTag op, Var a, Var b, const char* what) {
  Tape& t = common_tape(a, b);
  const Index r = broadcast_dim(a.rows(), b.rows(), what);
  const Index c = broadcast_dim(a.cols(), b.cols(), what);
  return t.record(op, {a.id(), b.id()}, r, c);
}

Var unary(OpTag op, Var a, double scalar = 0.0) {
  Tape& t = tape_of(a);
  Tape::Aux aux;
  aux.scalar = scalar;
  return t.record(op, {a.id()}, a.rows(), a.cols(), std::move(aux));
}

}  // namespace

const char* op_name(OpTag op) {
  switch (op) {
    case OpTag::kLeaf: return "leaf";
    case OpTag::kConstant: return "constant";
    case OpTag::kAdd: return "add";
    case OpTag::kSub: return "sub";
    case OpTag::kMul: return "mul";
    case OpTag::kDiv: return "div";
    case OpTag::kNeg: return "neg";
    case OpTag::kScale: return "scale";
    case OpTag::kShift: return "shift";
    case OpTag::kExp: return "exp";
    case OpTag::kLog: return "log";
    case OpTag::kSin: return "sin";
    case OpTag::kCos: return "cos";
    case OpTag::kSigmoid: return "sigmoid";
    case OpTag::kSoftplus: return "softplus";
    case OpTag::kTanh: return "tanh";
    case OpTag::kPow: return "pow";
    case OpTag::kAbs: return "abs";
    case OpTag::kSum: return "sum";
    case OpTag::kRowSum: return "row_sum";
    case OpTag::kColSum: return "col_sum";
    case OpTag::kMatMul: return "matmul";
    case OpTag::kReshape: return "reshape";
    case OpTag::kSliceCols: return "slice_cols";
    case OpTag::kConcatCols: return "concat_cols";
    case OpTag::kGatherRows: return "gather_rows";
  }
  return "?";
}

Index Var::rows() const { return tape_->node(*this).rows; }
Index Var::cols() const { return tape_->node(*this).cols; }

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = OpTag::kLeaf;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.evaluated = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = OpTag::kConstant;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.evaluated = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(double value) {
  return constant(Matrix::Constant(1, 1, value));
}

Var Tape::record(OpTag op, std::vector<int> parents, Index rows, Index cols,
                 Aux aux) {
  const int self = static_cast<int>(nodes_.size());
  Node n;
  n.op = op;
  for (int p : parents) {
    // A node may only depend on nodes recorded before it; anything else
    // would close a cycle.
    if (p < 0 || p >= self) {
      throw GraphError("cycle detected: node " + std::to_string(self) +
                       " references node " + std::to_string(p));
    }
    n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  }
  n.parents = std::move(parents);
  n.rows = rows;
  n.cols = cols;
  n.aux = std::move(aux);
  nodes_.push_back(std::move(n));
  return Var(this, self);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape_ != this || v.id_ < 0 ||
      v.id_ >= static_cast<int>(nodes_.size())) {
    throw GraphError("Var does not belong to this tape");
  }
  return nodes_[v.id_];
}

bool Tape::evaluated(Var v) const { return node(v).evaluated; }

const Matrix& Tape::value(Var v) const {
  const Node& n = node(v);
  if (!n.evaluated) throw GraphError("value read before forward");
  return n.value;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw GraphError("scalar() on a non-1x1 node");
  return m(0, 0);
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.has_grad) return Matrix::Zero(n.rows, n.cols);
  return n.grad;
}

OpTag Tape::op(Var v) const { return node(v).op; }

std::span<const int> Tape::parents(Var v) const { return node(v).parents; }

void Tape::forward(Var root) {
  node(root);
  for (int id = 0; id <= root.id_; ++id) {
    if (!nodes_[id].evaluated) evaluate(id);
  }
}

double Tape::forward_scalar(Var root) {
  forward(root);
  return scalar(root);
}

void Tape::evaluate(int id) {
  Node& n = nodes_[id];
  auto in = [&](int k) -> const Matrix& { return nodes_[n.parents[k]].value; };
  switch (n.op) {
    case OpTag::kLeaf:
    case OpTag::kConstant:
      break;
    case OpTag::kAdd:
    case OpTag::kSub:
    case OpTag::kMul:
    case OpTag::kDiv: {
      const Elementwise kind = n.op == OpTag::kAdd   ? Elementwise::kAdd
                               : n.op == OpTag::kSub ? Elementwise::kSub
                               : n.op == OpTag::kMul ? Elementwise::kMul
                                                     : Elementwise::kDiv;
      n.value = broadcast_op(kind, in(0), in(1), n.rows, n.cols);
      break;
    }
    case OpTag::kNeg: n.value = -in(0); break;
    case OpTag::kScale: n.value = in(0) * n.aux.scalar; break;
    case OpTag::kShift: n.value = in(0).array() + n.aux.scalar; break;
    case OpTag::kExp: n.value = in(0).array().exp(); break;
    case OpTag::kLog: n.value = in(0).array().log(); break;
    case OpTag::kSin: n.value = in(0).array().sin(); break;
    case OpTag::kCos: n.value = in(0).array().cos(); break;
    case OpTag::kSigmoid: n.value = sigmoid_of(in(0)); break;
    case OpTag::kSoftplus: n.value = softplus_of(in(0)); break;
    case OpTag::kTanh: n.value = in(0).array().tanh(); break;
    case OpTag::kPow: n.value = in(0).array().pow(n.aux.scalar); break;
    case OpTag::kAbs: n.value = in(0).cwiseAbs(); break;
    case OpTag::kSum: n.value = Matrix::Constant(1, 1, in(0).sum()); break;
    case OpTag::kRowSum: n.value = in(0).rowwise().sum(); break;
    case OpTag::kColSum: n.value = in(0).colwise().sum(); break;
    case OpTag::kMatMul: n.value.noalias() = in(0) * in(1).transpose(); break;
    case OpTag::kReshape:
      n.value = reshape_row_major(in(0), n.rows, n.cols);
      break;
    case OpTag::kSliceCols: n.value = in(0).middleCols(n.aux.i0, n.cols); break;
    case OpTag::kConcatCols: {
      n.value.resize(n.rows, n.cols);
      Index offset = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const Matrix& part = in(static_cast<int>(k));
        n.value.middleCols(offset, part.cols()) = part;
        offset += part.cols();
      }
      break;
    }
    case OpTag::kGatherRows: {
      const Matrix& a = in(0);
      n.value.resize(n.rows, n.cols);
      for (Index k = 0; k < n.rows; ++k) {
        n.value.row(k) = a.row(n.aux.indices[static_cast<std::size_t>(k)]);
      }
      break;
    }
  }
  n.evaluated = true;
}

void Tape::accumulate(int id, Matrix g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = std::move(g);
    n.has_grad = true;
  }
}

void Tape::accumulate_reduced(int id, const Matrix& g) {
  const Node& p = nodes_[id];
  if (g.rows() == p.rows && g.cols() == p.cols) {
    accumulate(id, g);
  } else {
    accumulate(id, reduce_to(g, p.rows, p.cols));
  }
}

void Tape::accumulate_reduced(int id, Matrix&& g) {
  const Node& p = nodes_[id];
  if (g.rows() == p.rows && g.cols() == p.cols) {
    accumulate(id, std::move(g));
  } else {
    accumulate(id, reduce_to(g, p.rows, p.cols));
  }
}

void Tape::accumulate_cols(int id, Index offset, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.rows, n.cols);
    n.has_grad = true;
  }
  n.grad.middleCols(offset, g.cols()) += g;
}

void Tape::backward(Var root, double seed) {
  if (!node(root).evaluated) forward(root);
  const Node& r = node(root);
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root.id_, Matrix::Constant(r.rows, r.cols, seed));
  for (int id = root.id_; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (n.has_grad && n.op != OpTag::kLeaf && n.op != OpTag::kConstant) {
      propagate(id);
    }
  }
}

void Tape::propagate(int id) {
  // Parents always precede id, so references into nodes_ stay valid.
  const Node& n = nodes_[id];
  const Matrix& g = n.grad;
  auto pid = [&](int k) { return n.parents[static_cast<std::size_t>(k)]; };
  auto in = [&](int k) -> const Matrix& { return nodes_[pid(k)].value; };
  auto wants = [&](int k) { return nodes_[pid(k)].requires_grad; };

  switch (n.op) {
    case OpTag::kLeaf:
    case OpTag::kConstant:
      break;
    case OpTag::kAdd:
    case OpTag::kSub: {
      const double sign = n.op == OpTag::kAdd ? 1.0 : -1.0;
      if (wants(0)) accumulate_reduced(pid(0), g);
      if (wants(1)) {
        if (sign > 0) {
          accumulate_reduced(pid(1), g);
        } else {
          accumulate_reduced(pid(1), Matrix(-g));
        }
      }
      break;
    }
    case OpTag::kMul: {
      if (wants(0)) accumulate_reduced(pid(0), broadcast_op(Elementwise::kMul, g, in(1), n.rows, n.cols));
      if (wants(1)) accumulate_reduced(pid(1), broadcast_op(Elementwise::kMul, g, in(0), n.rows, n.cols));
      break;
    }
    case OpTag::kDiv: {
      if (wants(0)) accumulate_reduced(pid(0), broadcast_op(Elementwise::kDiv, g, in(1), n.rows, n.cols));
      if (wants(1)) {
        // d(a/b)/db = -(a/b)/b
        const Matrix gv = -g.cwiseProduct(n.value);
        accumulate_reduced(pid(1), broadcast_op(Elementwise::kDiv, gv, in(1), n.rows, n.cols));
      }
      break;
    }
    case OpTag::kNeg: accumulate(pid(0), -g); break;
    case OpTag::kScale: accumulate(pid(0), g * n.aux.scalar); break;
    case OpTag::kShift: accumulate(pid(0), g); break;
    case OpTag::kExp: accumulate(pid(0), g.cwiseProduct(n.value)); break;
    case OpTag::kLog: accumulate(pid(0), g.cwiseQuotient(in(0))); break;
    case OpTag::kSin:
      accumulate(pid(0), g.cwiseProduct(Matrix(in(0).array().cos())));
      break;
    case OpTag::kCos:
      accumulate(pid(0), -g.cwiseProduct(Matrix(in(0).array().sin())));
      break;
    case OpTag::kSigmoid: {
      const Matrix d = n.value.array() * (1.0 - n.value.array());
      accumulate(pid(0), g.cwiseProduct(d));
      break;
    }
    case OpTag::kSoftplus:
      accumulate(pid(0), g.cwiseProduct(sigmoid_of(in(0))));
      break;
    case OpTag::kTanh: {
      const Matrix d = 1.0 - n.value.array().square();
      accumulate(pid(0), g.cwiseProduct(d));
      break;
    }
    case OpTag::kPow: {
      const double p = n.aux.scalar;
      const Matrix d = p * in(0).array().pow(p - 1.0);
      accumulate(pid(0), g.cwiseProduct(d));
      break;
    }
    case OpTag::kAbs: {
      const Matrix d = in(0).unaryExpr(
          [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
      accumulate(pid(0), g.cwiseProduct(d));
      break;
    }
    case OpTag::kSum:
      accumulate(pid(0), Matrix::Constant(in(0).rows(), in(0).cols(), g(0, 0)));
      break;
    case OpTag::kRowSum:
      accumulate(pid(0), g.replicate(1, in(0).cols()));
      break;
    case OpTag::kColSum:
      accumulate(pid(0), g.replicate(in(0).rows(), 1));
      break;
    case OpTag::kMatMul: {
      if (wants(0)) {
        Matrix gx;
        gx.noalias() = g * in(1);
        accumulate(pid(0), std::move(gx));
      }
      if (wants(1)) {
        Matrix gw;
        gw.noalias() = g.transpose() * in(0);
        accumulate(pid(1), std::move(gw));
      }
      break;
    }
    case OpTag::kReshape:
      accumulate(pid(0), reshape_row_major(g, in(0).rows(), in(0).cols()));
      break;
    case OpTag::kSliceCols:
      accumulate_cols(pid(0), n.aux.i0, g);
      break;
    case OpTag::kConcatCols: {
      Index offset = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const Index width = nodes_[n.parents[k]].cols;
        if (nodes_[n.parents[k]].requires_grad) {
          accumulate(n.parents[k], Matrix(g.middleCols(offset, width)));
        }
        offset += width;
      }
      break;
    }
    case OpTag::kGatherRows: {
      Matrix ga = Matrix::Zero(in(0).rows(), in(0).cols());
      for (Index k = 0; k < n.rows; ++k) {
        ga.row(n.aux.indices[static_cast<std::size_t>(k)]) += g.row(k);
      }
      accumulate(pid(0), std::move(ga));
      break;
    }
  }
}

Var add(Var a, Var b) { return binary(OpTag::kAdd, a, b, "add"); }
Var sub(Var a, Var b) { return binary(OpTag::kSub, a, b, "sub"); }
Var mul(Var a, Var b) { return binary(OpTag::kMul, a, b, "mul"); }
Var div(Var a, Var b) { return binary(OpTag::kDiv, a, b, "div"); }
Var neg(Var a) { return unary(OpTag::kNeg, a); }
Var scale(Var a, double factor) { return unary(OpTag::kScale, a, factor); }
Var shift(Var a, double offset) { return unary(OpTag::kShift, a, offset); }
Var exp(Var a) { return unary(OpTag::kExp, a); }
Var log(Var a) { return unary(OpTag::kLog, a); }
Var sin(Var a) { return unary(OpTag::kSin, a); }
Var cos(Var a) { return unary(OpTag::kCos, a); }
Var sigmoid(Var a) { return unary(OpTag::kSigmoid, a); }
Var softplus(Var a) { return unary(OpTag::kSoftplus, a); }
Var tanh(Var a) { return unary(OpTag::kTanh, a); }
Var pow(Var a, double exponent) { return unary(OpTag::kPow, a, exponent); }
Var abs(Var a) { return unary(OpTag::kAbs, a); }

Var sum(Var a) { return tape_of(a).record(OpTag::kSum, {a.id()}, 1, 1); }

Var row_sum(Var a) {
  return tape_of(a).record(OpTag::kRowSum, {a.id()}, a.rows(), 1);
}

Var col_sum(Var a) {
  return tape_of(a).record(OpTag::kColSum, {a.id()}, 1, a.cols());
}

Var matmul(Var x, Var w) {
  Tape& t = common_tape(x, w);
  if (x.cols() != w.cols()) {
    throw GraphError("matmul: input width " + std::to_string(x.cols()) +
                     " does not match weight width " +
                     std::to_string(w.cols()));
  }
  return t.record(OpTag::kMatMul, {x.id(), w.id()}, x.rows(), w.rows());
}

Var reshape(Var a, Index rows, Index cols) {
  if (rows * cols != a.rows() * a.cols()) {
    throw GraphError("reshape changes the number of entries");
  }
  return tape_of(a).record(OpTag::kReshape, {a.id()}, rows, cols);
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw GraphError("slice_cols out of range");
  }
  Tape::Aux aux;
  aux.i0 = start;
  return tape_of(a).record(OpTag::kSliceCols, {a.id()}, a.rows(), count,
                           std::move(aux));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw GraphError("concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  std::vector<int> ids;
  ids.reserve(parts.size());
  Index cols = 0;
  for (const Var& p : parts) {
    if (&tape_of(p) != &t) throw GraphError("operands belong to different tapes");
    if (p.rows() != parts.front().rows()) {
      throw GraphError("concat_cols row mismatch");
    }
    ids.push_back(p.id());
    cols += p.cols();
  }
  return t.record(OpTag::kConcatCols, std::move(ids), parts.front().rows(),
                  cols);
}

Var gather_rows(Var a, std::vector<int> indices) {
  for (int k : indices) {
    if (k < 0 || k >= a.rows()) throw GraphError("gather_rows index out of range");
  }
  const auto rows = static_cast<Index>(indices.size());
  Tape::Aux aux;
  aux.indices = std::move(indices);
  return tape_of(a).record(OpTag::kGatherRows, {a.id()}, rows, a.cols(),
                           std::move(aux));
}

}  // namespace canonica::ad
