#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major-agnostic 2-D matrices.
//
// Every value is a rows x cols matrix (scalars are 1x1). Operations record their inputs and a
// backward closure on a tape that is walked in reverse topological order by Tensor::backward().
// Batches of graphs are represented by stacking node rows: block b occupies rows
// [b * nodes, (b + 1) * nodes).

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vsm::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& g);
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor constant(Matrix value) { return Tensor(std::move(value), false); }
  static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  // Gradient, or zeros of the value's shape if none has been accumulated.
  Matrix grad() const;
  bool has_grad() const { return node_->grad.size() > 0; }
  bool requires_grad() const { return node_->requires_grad; }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }
  double item() const;

  void zero_grad() { node_->grad.resize(0, 0); }

  // Seeds d(this)/d(this) = 1 and propagates. Requires a 1x1 tensor.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend Tensor make_result(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward);
  std::shared_ptr<Node> node_;
};

// Disables tape recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor add_row(const Tensor& x, const Tensor& row);  // x + broadcast 1 x cols row

// Elementwise nonlinearities
Tensor leaky_relu(const Tensor& x, double negative_slope);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor square(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor minimum(const Tensor& a, const Tensor& b);

// Reductions to 1x1
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Shape manipulation
Tensor concat_cols(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& x, std::span<const Index> rows);
Tensor pick(const Tensor& x, std::span<const Index> columns);  // out(b) = x(b, columns[b])

// Graph blocks: out_b = A_b X_b for each block of `nodes` rows. One adjacency broadcasts to all.
Tensor graph_propagate(std::shared_ptr<const std::vector<Matrix>> adjacency, const Tensor& x);
Tensor segment_mean(const Tensor& x, Index nodes);

// Row-wise log-softmax over entries with mask != 0; masked entries are -inf and get no gradient.
// Throws std::invalid_argument for a row without feasible entries.
Tensor masked_log_softmax(const Tensor& logits, const Matrix& mask);
// Row-wise entropy -Σ p log p over feasible entries of a masked log-probability matrix. Returns B x 1.
Tensor masked_entropy(const Tensor& log_probs, const Matrix& mask);

}  // namespace vsm::ad
