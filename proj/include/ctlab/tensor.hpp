#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlab {

/// Dense row-major 64-bit tensor of rank <= 2. Vectors are 1xK or Kx1.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Tensor& t);

/// Trainable tensor with a gradient accumulator of identical shape.
struct Param {
  Param() = default;
  explicit Param(Tensor v) : value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }

  Tensor value;
  Tensor grad;
};

enum class Op : std::uint8_t {
  Constant,
  Parameter,
  Add,
  Subtract,
  Multiply,
  Square,
  Exp,
  Log,
  MatMul,
  Transpose,
  Sum,
  Mean,
  LeakyRelu,
  NormalizeRows,
  ConcatRows,
  Scale,
  AddScalar,
  BroadcastRows,
  Reshape,
  PairwiseSqDist,
  PairwiseSqDiff,
  Softmax,
  TransportLoss,
  SortedW2,
};

/// Reduction / normalization axis. `Row` acts within each row (result Nx1
/// for reductions), `Col` within each column (1xM), `All` over every entry.
enum class Axis : std::uint8_t { Row, Col, All };

struct TapeNode {
  Op op = Op::Constant;
  std::array<int, 2> parents{-1, -1};
  Tensor value;
  // op-specific saved context
  Tensor saved;
  Tensor saved2;
  std::vector<Index> order;
  double scalar = 0.0;
  std::array<double, 2> extra{};
  Axis axis = Axis::All;
  Param* param = nullptr;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double item() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so every
/// parent index is strictly smaller than its child's.
class Tape {
 public:
  Var constant(Tensor value);
  Var param(Param& p);

  Var push(TapeNode node);
  const TapeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Accumulates d(loss)/d(p) into every Param reached from `loss`.
  void backward(const Var& loss);

 private:
  std::vector<TapeNode> nodes_;
};

// Primitives. Each appends one node to the tape of its first argument.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var square(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var sum(const Var& a, Axis axis = Axis::All);
Var mean(const Var& a, Axis axis = Axis::All);
Var leaky_relu(const Var& a, double slope);
Var normalize_rows(const Var& a, double eps);
Var concat_rows(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
Var broadcast_rows(const Var& row, Index n);
Var reshape(const Var& a, Index rows, Index cols);

/// (i,j) -> sum_k (a_ik - b_jk)^2, shape NxM.
Var pairwise_sqdist(const Var& a, const Var& b);
/// Row i*M+j holds (a_i - b_j) squared elementwise, shape (N*M)xd.
Var pairwise_sqdiff(const Var& a, const Var& b);
/// Max-subtracted softmax along the given axis (Row or Col).
Var softmax(const Var& a, Axis axis);

/// Blended conditional-transport objective for a cost matrix `cost` and a
/// navigator energy `energy` (both NxM):
///   rho * (1/N) sum_i sum_j c_ij F_ij + (1-rho) * (1/M) sum_j sum_i c_ij B_ij
/// with F = softmax(-energy) along rows and B = softmax(-energy) along
/// columns. Fused so large batches need O(NM) memory once.
Var transport_loss(const Var& cost, const Var& energy, double rho);

struct TransportParts {
  double forward = 0.0;
  double backward = 0.0;
};
/// Forward/backward components recorded by a transport_loss node.
TransportParts transport_parts(const Var& loss);

/// Mean over columns of the squared 1D Wasserstein-2 distance between the
/// matching columns of `x` and `y` (equal shapes), via sorted pairing.
Var sorted_w2(const Var& x, const Var& y);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

/// True when no entry is NaN or infinite.
bool all_finite(const Tensor& t);

/// Softmax of a plain tensor, same arithmetic as the tape primitive.
Tensor softmax_values(const Tensor& a, Axis axis);
/// Pairwise squared distances of plain tensors, same arithmetic as the primitive.
Tensor pairwise_sqdist_values(const Tensor& a, const Tensor& b);

}  // namespace ctlab
