#include "vsm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vsm {

Adam::Adam(std::vector<NamedParameter> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0)
    throw std::invalid_argument("adam: betas must lie in [0,1)");
  for (const auto& p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p.tensor.rows(), p.tensor.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.tensor.rows(), p.tensor.cols()));
  }
}

void Adam::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    const Eigen::MatrixXd g = t.grad();
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    t.mutable_value().array() -=
        config_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void Adam::restore(long long steps, std::vector<Eigen::MatrixXd> m, std::vector<Eigen::MatrixXd> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw std::invalid_argument("adam: moment count does not match parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& t = params_[i].tensor;
    if (m[i].rows() != t.rows() || m[i].cols() != t.cols() || v[i].rows() != t.rows() || v[i].cols() != t.cols())
      throw std::invalid_argument("adam: moment shape mismatch for " + params_[i].name);
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

double global_grad_norm(const std::vector<NamedParameter>& params) {
  double sq = 0.0;
  for (const auto& p : params)
    if (p.tensor.has_grad()) sq += p.tensor.grad().squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<NamedParameter>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (const auto& p : params)
      if (p.tensor.has_grad()) p.tensor.node()->grad *= s;
  }
  return norm;
}

}  // namespace vsm
