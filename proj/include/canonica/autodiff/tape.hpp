#pragma once

// Reverse-mode automatic differentiation over small dense matrices.
//
// A Tape records operations lazily: building an expression only checks
// shapes, values are computed by forward(root) and gradients by
// backward(root). Nodes may only reference nodes recorded before them, so a
// tape is acyclic by construction. Batches of points are laid out one point
// per row.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace canonica::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class OpTag : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kScale,
  kShift,
  kExp,
  kLog,
  kSin,
  kCos,
  kSigmoid,
  kSoftplus,
  kTanh,
  kPow,
  kAbs,
  kSum,
  kRowSum,
  kColSum,
  kMatMul,
  kReshape,
  kSliceCols,
  kConcatCols,
  kGatherRows,
};

const char* op_name(OpTag op);

class Tape;

// Non-tensor operands of an op (scale factor, slice bounds, gather rows).
struct OpAux {
  double scalar = 0.0;
  Index i0 = 0;
  Index i1 = 0;
  std::vector<int> indices;
};

// Handle to a node of a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Index rows() const;
  Index cols() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input.
  Var leaf(Matrix value);
  // Input that never receives a gradient.
  Var constant(Matrix value);
  Var constant(double value);

  // Evaluates every pending node up to and including root.
  void forward(Var root);
  // Convenience: forward(root) and return its 1x1 value.
  double forward_scalar(Var root);

  // Accumulates d(seed * sum(root))/d(node) into every ancestor of root.
  // Runs forward(root) if needed and resets gradients of a previous
  // backward pass first.
  void backward(Var root, double seed = 1.0);

  bool evaluated(Var v) const;
  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  // Zero-shaped-like-value if the node received no gradient.
  Matrix grad(Var v) const;
  OpTag op(Var v) const;
  std::span<const int> parents(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Low-level recording entry point used by the operator functions below.
  using Aux = OpAux;
  Var record(OpTag op, std::vector<int> parents, Index rows, Index cols,
             Aux aux = {});

 private:
  struct Node {
    OpTag op = OpTag::kLeaf;
    std::vector<int> parents;
    Index rows = 0;
    Index cols = 0;
    Aux aux;
    Matrix value;
    Matrix grad;
    bool evaluated = false;
    bool has_grad = false;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  void evaluate(int id);
  void propagate(int id);
  void accumulate(int id, Matrix g);
  // Sums broadcast dimensions away first.
  void accumulate_reduced(int id, const Matrix& g);
  void accumulate_reduced(int id, Matrix&& g);
  void accumulate_cols(int id, Index offset, const Matrix& g);

  friend class Var;
  std::vector<Node> nodes_;
};

// Elementwise binary ops broadcast operands whose dimension is 1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double factor);
Var shift(Var a, double offset);

Var exp(Var a);
Var log(Var a);
Var sin(Var a);
Var cos(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var tanh(Var a);
Var pow(Var a, double exponent);
// Subgradient sign(x) at the kink; used by L1 penalties.
Var abs(Var a);

// Sum of every entry, 1x1.
Var sum(Var a);
// Sum across columns: n x m -> n x 1.
Var row_sum(Var a);
// Sum across rows: n x m -> 1 x m.
Var col_sum(Var a);

// Batched matrix-vector product: x (n x in), w (out x in) -> x * w^T (n x out).
Var matmul(Var x, Var w);

// Row-major reshape (entry k of the row-major flattening is preserved).
Var reshape(Var a, Index rows, Index cols);
Var slice_cols(Var a, Index start, Index count);
Var concat_cols(std::span<const Var> parts);
// out.row(k) = a.row(indices[k]); gradients scatter-add back.
Var gather_rows(Var a, std::vector<int> indices);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator+(Var a, double s) { return shift(a, s); }
inline Var operator+(double s, Var a) { return shift(a, s); }
inline Var operator-(Var a, double s) { return shift(a, -s); }
inline Var operator-(double s, Var a) { return shift(neg(a), s); }

}  // namespace canonica::ad
