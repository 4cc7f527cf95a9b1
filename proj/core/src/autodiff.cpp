#include "vsm/autodiff.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace vsm::ad {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " + shape_str(b.value()));
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0)
    grad = g;
  else
    grad += g;
}

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item: tensor is not 1x1 " + shape_str(value()));
  return value()(0, 0);
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("backward: root must be 1x1, got " + shape_str(value()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() > 0) n->backward(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  Tensor out(std::move(value), false);
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(inputs.size());
  for (auto& t : inputs) out.node_->parents.push_back(t.node_);
  out.node_->backward = std::move(backward);
  return out;
}

namespace {

Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.value()) + " * " + shape_str(b.value()));
  return make_result(a.value() * b.value(), {a, b}, [](Node& n) {
    Node& pa = parent(n, 0);
    Node& pb = parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad * pb.value.transpose());
    if (pb.requires_grad) pb.accumulate(pa.value.transpose() * n.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return make_result(a.value() + b.value(), {a, b}, [](Node& n) {
    for (std::size_t i = 0; i < 2; ++i)
      if (parent(n, i).requires_grad) parent(n, i).accumulate(n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  return make_result(a.value() - b.value(), {a, b}, [](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).accumulate(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).accumulate(-n.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    Node& pa = parent(n, 0);
    Node& pb = parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) pb.accumulate(n.grad.cwiseProduct(pa.value));
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& n) { parent(n, 0).accumulate(n.grad * s); });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != x.cols())
    throw ShapeError("add_row: expected 1x" + std::to_string(x.cols()) + " row, got " + shape_str(row.value()));
  Matrix v = x.value().rowwise() + row.value().row(0);
  return make_result(std::move(v), {x, row}, [](Node& n) {
    if (parent(n, 0).requires_grad) parent(n, 0).accumulate(n.grad);
    if (parent(n, 1).requires_grad) parent(n, 1).accumulate(n.grad.colwise().sum());
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Matrix v = x.value().unaryExpr([slope](double e) { return e > 0.0 ? e : slope * e; });
  return make_result(std::move(v), {x}, [slope](Node& n) {
    Node& p = parent(n, 0);
    p.accumulate(n.grad.cwiseProduct(p.value.unaryExpr([slope](double e) { return e > 0.0 ? 1.0 : slope; })));
  });
}

Tensor tanh(const Tensor& x) {
  Matrix v = x.value().array().tanh().matrix();
  return make_result(v, {x}, [v](Node& n) {
    parent(n, 0).accumulate(n.grad.cwiseProduct((1.0 - v.array().square()).matrix()));
  });
}

Tensor exp(const Tensor& x) {
  Matrix v = x.value().array().exp().matrix();
  return make_result(v, {x}, [v](Node& n) { parent(n, 0).accumulate(n.grad.cwiseProduct(v)); });
}

Tensor square(const Tensor& x) {
  return make_result(x.value().array().square().matrix(), {x}, [](Node& n) {
    Node& p = parent(n, 0);
    p.accumulate(2.0 * n.grad.cwiseProduct(p.value));
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  Matrix v = x.value().cwiseMax(lo).cwiseMin(hi);
  return make_result(std::move(v), {x}, [lo, hi](Node& n) {
    Node& p = parent(n, 0);
    p.accumulate(n.grad.cwiseProduct(p.value.unaryExpr([lo, hi](double e) { return e >= lo && e <= hi ? 1.0 : 0.0; })));
  });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require_same_shape("minimum", a, b);
  return make_result(a.value().cwiseMin(b.value()), {a, b}, [](Node& n) {
    Node& pa = parent(n, 0);
    Node& pb = parent(n, 1);
    // Ties route the gradient to the first operand.
    Matrix first = (pa.value.array() <= pb.value.array()).cast<double>().matrix();
    if (pa.requires_grad) pa.accumulate(n.grad.cwiseProduct(first));
    if (pb.requires_grad) pb.accumulate(n.grad.cwiseProduct((1.0 - first.array()).matrix()));
  });
}

Tensor sum(const Tensor& x) {
  return make_result(Matrix::Constant(1, 1, x.value().sum()), {x}, [](Node& n) {
    Node& p = parent(n, 0);
    p.accumulate(Matrix::Constant(p.value.rows(), p.value.cols(), n.grad(0, 0)));
  });
}

Tensor mean(const Tensor& x) {
  const double count = static_cast<double>(x.value().size());
  if (count == 0) throw ShapeError("mean: empty tensor");
  return make_result(Matrix::Constant(1, 1, x.value().mean()), {x}, [count](Node& n) {
    Node& p = parent(n, 0);
    p.accumulate(Matrix::Constant(p.value.rows(), p.value.cols(), n.grad(0, 0) / count));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return make_result(std::move(v), std::vector<Tensor>(parts.begin(), parts.end()), [offsets](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      Node& p = parent(n, i);
      if (p.requires_grad) p.accumulate(n.grad.middleCols(offsets[i], p.value.cols()));
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const Index> rows) {
  Matrix v(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) throw ShapeError("gather_rows: row index out of range");
    v.row(static_cast<Index>(i)) = x.value().row(rows[i]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return make_result(std::move(v), {x}, [idx](Node& n) {
    Node& p = parent(n, 0);
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
    p.accumulate(g);
  });
}

Tensor pick(const Tensor& x, std::span<const Index> columns) {
  if (static_cast<Index>(columns.size()) != x.rows()) throw ShapeError("pick: one column per row required");
  Matrix v(x.rows(), 1);
  for (Index b = 0; b < x.rows(); ++b) {
    const Index c = columns[static_cast<std::size_t>(b)];
    if (c < 0 || c >= x.cols()) throw ShapeError("pick: column out of range");
    v(b, 0) = x.value()(b, c);
  }
  std::vector<Index> idx(columns.begin(), columns.end());
  return make_result(std::move(v), {x}, [idx](Node& n) {
    Node& p = parent(n, 0);
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (Index b = 0; b < p.value.rows(); ++b) g(b, idx[static_cast<std::size_t>(b)]) = n.grad(b, 0);
    p.accumulate(g);
  });
}

Tensor graph_propagate(std::shared_ptr<const std::vector<Matrix>> adjacency, const Tensor& x) {
  if (!adjacency || adjacency->empty()) throw ShapeError("graph_propagate: no adjacency");
  const Index nodes = (*adjacency)[0].rows();
  if (nodes == 0 || x.rows() % nodes != 0) throw ShapeError("graph_propagate: rows not a multiple of node count");
  const Index blocks = x.rows() / nodes;
  if (adjacency->size() != 1 && static_cast<Index>(adjacency->size()) != blocks)
    throw ShapeError("graph_propagate: adjacency count must be 1 or one per block");
  for (const auto& a : *adjacency)
    if (a.rows() != nodes || a.cols() != nodes) throw ShapeError("graph_propagate: adjacency sizes differ");

  auto adj_of = [adjacency](Index b) -> const Matrix& {
    return adjacency->size() == 1 ? (*adjacency)[0] : (*adjacency)[static_cast<std::size_t>(b)];
  };
  Matrix v(x.rows(), x.cols());
  for (Index b = 0; b < blocks; ++b) v.middleRows(b * nodes, nodes).noalias() = adj_of(b) * x.value().middleRows(b * nodes, nodes);
  return make_result(std::move(v), {x}, [adj_of, nodes, blocks](Node& n) {
    Node& p = parent(n, 0);
    Matrix g(p.value.rows(), p.value.cols());
    for (Index b = 0; b < blocks; ++b)
      g.middleRows(b * nodes, nodes).noalias() = adj_of(b).transpose() * n.grad.middleRows(b * nodes, nodes);
    p.accumulate(g);
  });
}

Tensor segment_mean(const Tensor& x, Index nodes) {
  if (nodes <= 0 || x.rows() % nodes != 0) throw ShapeError("segment_mean: rows not a multiple of node count");
  const Index blocks = x.rows() / nodes;
  Matrix v(blocks, x.cols());
  for (Index b = 0; b < blocks; ++b) v.row(b) = x.value().middleRows(b * nodes, nodes).colwise().mean();
  return make_result(std::move(v), {x}, [nodes, blocks](Node& n) {
    Node& p = parent(n, 0);
    Matrix g(p.value.rows(), p.value.cols());
    for (Index b = 0; b < blocks; ++b)
      g.middleRows(b * nodes, nodes).rowwise() = n.grad.row(b) / static_cast<double>(nodes);
    p.accumulate(g);
  });
}

Tensor masked_log_softmax(const Tensor& logits, const Matrix& mask) {
  if (mask.rows() != logits.rows() || mask.cols() != logits.cols())
    throw ShapeError("masked_log_softmax: mask shape " + shape_str(mask) + " vs logits " + shape_str(logits.value()));
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const Matrix& l = logits.value();
  Matrix v(l.rows(), l.cols());
  for (Index b = 0; b < l.rows(); ++b) {
    double m = kNegInf;
    for (Index j = 0; j < l.cols(); ++j)
      if (mask(b, j) != 0.0) m = std::max(m, l(b, j));
    if (m == kNegInf) throw std::invalid_argument("masked_log_softmax: row " + std::to_string(b) + " has no feasible entry");
    double s = 0.0;
    for (Index j = 0; j < l.cols(); ++j)
      if (mask(b, j) != 0.0) s += std::exp(l(b, j) - m);
    const double lse = m + std::log(s);
    for (Index j = 0; j < l.cols(); ++j) v(b, j) = mask(b, j) != 0.0 ? l(b, j) - lse : kNegInf;
  }
  Matrix out = v;
  return make_result(std::move(v), {logits}, [out, mask](Node& n) {
    Matrix g = Matrix::Zero(out.rows(), out.cols());
    for (Index b = 0; b < out.rows(); ++b) {
      double total = 0.0;
      for (Index j = 0; j < out.cols(); ++j)
        if (mask(b, j) != 0.0) total += n.grad(b, j);
      for (Index j = 0; j < out.cols(); ++j)
        if (mask(b, j) != 0.0) g(b, j) = n.grad(b, j) - std::exp(out(b, j)) * total;
    }
    parent(n, 0).accumulate(g);
  });
}

Tensor masked_entropy(const Tensor& log_probs, const Matrix& mask) {
  if (mask.rows() != log_probs.rows() || mask.cols() != log_probs.cols())
    throw ShapeError("masked_entropy: mask shape mismatch");
  const Matrix& lp = log_probs.value();
  Matrix v = Matrix::Zero(lp.rows(), 1);
  for (Index b = 0; b < lp.rows(); ++b)
    for (Index j = 0; j < lp.cols(); ++j)
      if (mask(b, j) != 0.0) v(b, 0) -= std::exp(lp(b, j)) * lp(b, j);
  return make_result(std::move(v), {log_probs}, [mask](Node& n) {
    Node& p = parent(n, 0);
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (Index b = 0; b < g.rows(); ++b)
      for (Index j = 0; j < g.cols(); ++j)
        if (mask(b, j) != 0.0) g(b, j) = -std::exp(p.value(b, j)) * (p.value(b, j) + 1.0) * n.grad(b, 0);
    p.accumulate(g);
  });
}

}  // namespace vsm::ad
