#include <gtest/gtest.h>

#include <cmath>

#include "support/generators.hpp"
#include "vsm/autodiff.hpp"

using namespace vsm;
using ad::Matrix;
using ad::Tensor;
using gen::check_gradients;
using gen::random_matrix;

namespace {

constexpr double kTol = 1e-6;

// Entries kept at least `gap` away from every kink in `kinks`.
Matrix away_from(Rng& rng, int rows, int cols, std::initializer_list<double> kinks, double gap = 0.05) {
  Matrix m = random_matrix(rng, rows, cols, 2.0);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    for (double k : kinks)
      if (std::abs(m(i) - k) < gap) m(i) = k + (m(i) < k ? -gap : gap);
  return m;
}

}  // namespace

TEST(Autodiff, Matmul) {
  Rng rng(1);
  auto a = Tensor::parameter(random_matrix(rng, 3, 4));
  auto b = Tensor::parameter(random_matrix(rng, 4, 2));
  Rng w(2);
  const auto weights = Tensor::constant(random_matrix(w, 3, 2));
  const auto r = check_gradients([&] { return ad::sum(ad::mul(ad::matmul(a, b), weights)); }, {a, b});
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
  EXPECT_THROW(ad::matmul(a, a), ad::ShapeError);
}

TEST(Autodiff, ElementwiseBinary) {
  Rng rng(3);
  auto a = Tensor::parameter(random_matrix(rng, 3, 3));
  auto b = Tensor::parameter(random_matrix(rng, 3, 3));
  const auto w = Tensor::constant(random_matrix(rng, 3, 3));
  auto loss = [&] {
    auto x = ad::add(ad::mul(a, b), ad::sub(a, ad::scale(b, 0.7)));
    return ad::sum(ad::mul(x, w));
  };
  const auto r = check_gradients(loss, {a, b});
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
  EXPECT_THROW(ad::add(a, Tensor::constant(Matrix::Zero(2, 3))), ad::ShapeError);
}

TEST(Autodiff, AddRowBroadcasts) {
  Rng rng(4);
  auto x = Tensor::parameter(random_matrix(rng, 5, 3));
  auto row = Tensor::parameter(random_matrix(rng, 1, 3));
  const auto w = Tensor::constant(random_matrix(rng, 5, 3));
  const auto r = check_gradients([&] { return ad::sum(ad::mul(ad::add_row(x, row), w)); }, {x, row});
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
  EXPECT_DOUBLE_EQ(ad::add_row(x, row).value()(4, 2), x.value()(4, 2) + row.value()(0, 2));
}

TEST(Autodiff, SmoothUnary) {
  Rng rng(5);
  auto x = Tensor::parameter(random_matrix(rng, 4, 3));
  const auto w = Tensor::constant(random_matrix(rng, 4, 3));
  for (int op = 0; op < 3; ++op) {
    auto f = [&] {
      Tensor y = op == 0 ? ad::tanh(x) : op == 1 ? ad::exp(x) : ad::square(x);
      return ad::sum(ad::mul(y, w));
    };
    const auto r = check_gradients(f, {x});
    EXPECT_LT(r.max_rel_error, kTol) << "op " << op;
  }
}

TEST(Autodiff, LeakyReluAwayFromZero) {
  Rng rng(6);
  auto x = Tensor::parameter(away_from(rng, 6, 5, {0.0}));
  const auto w = Tensor::constant(random_matrix(rng, 6, 5));
  const auto r = check_gradients([&] { return ad::sum(ad::mul(ad::leaky_relu(x, 0.1), w)); }, {x});
  EXPECT_LT(r.max_rel_error, kTol);
  const auto y = ad::leaky_relu(Tensor::constant(Matrix::Constant(1, 2, -2.0)), 0.1);
  EXPECT_DOUBLE_EQ(y.value()(0, 0), -0.2);
}

TEST(Autodiff, ClampPassesGradientOnlyInside) {
  Rng rng(8);
  auto x = Tensor::parameter(away_from(rng, 5, 5, {0.8, 1.2}));
  const auto w = Tensor::constant(random_matrix(rng, 5, 5));
  const auto r = check_gradients([&] { return ad::sum(ad::mul(ad::clamp(x, 0.8, 1.2), w)); }, {x});
  EXPECT_LT(r.max_rel_error, kTol);

  auto y = Tensor::parameter((Matrix(1, 3) << 0.5, 1.0, 1.5).finished());
  ad::sum(ad::clamp(y, 0.8, 1.2)).backward();
  EXPECT_EQ(y.grad(), (Matrix(1, 3) << 0.0, 1.0, 0.0).finished());
}

TEST(Autodiff, MinimumRoutesToSmallerAndTiesToFirst) {
  Rng rng(9);
  auto a = Tensor::parameter(random_matrix(rng, 4, 4));
  Matrix bv = random_matrix(rng, 4, 4);
  for (Eigen::Index i = 0; i < bv.size(); ++i)
    if (std::abs(bv(i) - a.value()(i)) < 0.05) bv(i) += 0.1;
  auto b = Tensor::parameter(bv);
  const auto w = Tensor::constant(random_matrix(rng, 4, 4));
  const auto r = check_gradients([&] { return ad::sum(ad::mul(ad::minimum(a, b), w)); }, {a, b});
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;

  auto p = Tensor::parameter(Matrix::Constant(1, 1, 2.0));
  auto q = Tensor::parameter(Matrix::Constant(1, 1, 2.0));
  ad::sum(ad::minimum(p, q)).backward();
  EXPECT_EQ(p.grad()(0, 0), 1.0);
  EXPECT_EQ(q.grad()(0, 0), 0.0);
}

TEST(Autodiff, Reductions) {
  Rng rng(10);
  auto x = Tensor::parameter(random_matrix(rng, 3, 7));
  auto f = [&] { return ad::add(ad::scale(ad::sum(ad::square(x)), 0.3), ad::mean(ad::tanh(x))); };
  EXPECT_LT(check_gradients(f, {x}).max_rel_error, kTol);
  EXPECT_DOUBLE_EQ(ad::mean(x).item(), x.value().mean());
}

TEST(Autodiff, ConcatGatherPick) {
  Rng rng(11);
  auto a = Tensor::parameter(random_matrix(rng, 4, 2));
  auto b = Tensor::parameter(random_matrix(rng, 4, 3));
  const std::vector<ad::Index> rows{3, 0, 3};
  const std::vector<ad::Index> cols{4, 0, 2};
  const auto w = Tensor::constant(random_matrix(rng, 3, 1));
  auto f = [&] {
    const std::array parts{a, b};
    auto c = ad::concat_cols(parts);
    auto g = ad::gather_rows(c, rows);
    return ad::sum(ad::mul(ad::pick(g, cols), w));
  };
  const auto r = check_gradients(f, {a, b});
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;

  const std::array parts{a, b};
  const auto c = ad::concat_cols(parts);
  EXPECT_EQ(c.cols(), 5);
  EXPECT_EQ(c.value()(2, 3), b.value()(2, 1));
}

TEST(Autodiff, GraphPropagateSharedAndPerBlock) {
  Rng rng(12);
  const int n = 5;
  auto x = Tensor::parameter(random_matrix(rng, 3 * n, 4));
  const auto w = Tensor::constant(random_matrix(rng, 3 * n, 4));
  auto shared = std::make_shared<std::vector<Matrix>>(std::vector<Matrix>{random_matrix(rng, n, n)});
  auto blocks = std::make_shared<std::vector<Matrix>>(
      std::vector<Matrix>{random_matrix(rng, n, n), random_matrix(rng, n, n), random_matrix(rng, n, n)});
  for (const auto& adj : {shared, blocks}) {
    auto f = [&] { return ad::sum(ad::mul(ad::graph_propagate(adj, x), w)); };
    EXPECT_LT(check_gradients(f, {x}).max_rel_error, kTol);
  }
  const auto y = ad::graph_propagate(blocks, x);
  const Matrix expected = (*blocks)[1] * x.value().middleRows(n, n);
  EXPECT_TRUE(y.value().middleRows(n, n).isApprox(expected, 1e-14));
}

TEST(Autodiff, SegmentMean) {
  Rng rng(13);
  auto x = Tensor::parameter(random_matrix(rng, 12, 3));
  const auto w = Tensor::constant(random_matrix(rng, 3, 3));
  EXPECT_LT(check_gradients([&] { return ad::sum(ad::mul(ad::segment_mean(x, 4), w)); }, {x}).max_rel_error, kTol);
  const auto m = ad::segment_mean(x, 4);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_TRUE(m.value().row(1).isApprox(x.value().middleRows(4, 4).colwise().mean(), 1e-14));
}

TEST(Autodiff, MaskedLogSoftmaxAndEntropy) {
  Rng rng(14);
  const int rows = 6, cols = 11;
  auto logits = Tensor::parameter(random_matrix(rng, rows, cols, 3.0));
  Matrix mask = Matrix::Zero(rows, cols);
  std::vector<ad::Index> chosen;
  for (int b = 0; b < rows; ++b) {
    for (int j = 0; j < cols; ++j)
      if (rng.uniform() < 0.5) mask(b, j) = 1.0;
    mask(b, b) = 1.0;
    chosen.push_back(b);
  }
  const auto w = Tensor::constant(random_matrix(rng, rows, 1));
  auto f = [&] {
    auto lp = ad::masked_log_softmax(logits, mask);
    return ad::add(ad::sum(ad::mul(ad::pick(lp, chosen), w)), ad::mean(ad::masked_entropy(lp, mask)));
  };
  const auto r = check_gradients(f, {logits});
  EXPECT_LT(r.max_rel_error, kTol);
  // Masked logits receive nothing.
  for (int b = 0; b < rows; ++b)
    for (int j = 0; j < cols; ++j)
      if (mask(b, j) == 0.0) EXPECT_EQ(logits.grad()(b, j), 0.0);

  const auto lp = ad::masked_log_softmax(logits, mask).value();
  for (int b = 0; b < rows; ++b) {
    double total = 0.0;
    for (int j = 0; j < cols; ++j) {
      if (mask(b, j) == 0.0)
        EXPECT_TRUE(std::isinf(lp(b, j)) && lp(b, j) < 0);
      else
        total += std::exp(lp(b, j));
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Autodiff, MaskedLogSoftmaxRejectsEmptyRow) {
  auto logits = Tensor::constant(Matrix::Zero(2, 3));
  Matrix mask = Matrix::Ones(2, 3);
  mask.row(1).setZero();
  EXPECT_THROW(ad::masked_log_softmax(logits, mask), std::invalid_argument);
}

TEST(Autodiff, EntropyOfUniformIsLogCount) {
  Matrix mask = Matrix::Zero(1, 11);
  mask.leftCols(4).setOnes();
  const auto lp = ad::masked_log_softmax(Tensor::constant(Matrix::Zero(1, 11)), mask);
  EXPECT_NEAR(ad::masked_entropy(lp, mask).item(), std::log(4.0), 1e-12);
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  auto x = Tensor::parameter(Matrix::Constant(1, 1, 3.0));
  auto y = ad::mul(x, x);
  ad::sum(ad::add(y, y)).backward();
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 12.0);
}

TEST(Autodiff, NoGradGuardRecordsNothing) {
  auto x = Tensor::parameter(Matrix::Constant(2, 2, 1.0));
  {
    ad::NoGradGuard g;
    EXPECT_FALSE(ad::grad_enabled());
    const auto y = ad::sum(ad::square(x));
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(ad::grad_enabled());
}

TEST(Autodiff, BackwardNeedsScalarRoot) {
  auto x = Tensor::parameter(Matrix::Constant(2, 2, 1.0));
  EXPECT_THROW(ad::square(x).backward(), std::invalid_argument);
}
