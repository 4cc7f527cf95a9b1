#pragma once

#include <vector>

#include "vsm/networks.hpp"

namespace vsm {

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<NamedParameter> params, AdamConfig config);

  // One update from the gradients currently stored on the parameters.
  void step();
  void zero_grad();

  const AdamConfig& config() const { return config_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  long long steps() const { return steps_; }

  // Moment estimates in parameter order, for checkpoints.
  const std::vector<Eigen::MatrixXd>& first_moments() const { return m_; }
  const std::vector<Eigen::MatrixXd>& second_moments() const { return v_; }
  void restore(long long steps, std::vector<Eigen::MatrixXd> m, std::vector<Eigen::MatrixXd> v);

 private:
  std::vector<NamedParameter> params_;
  AdamConfig config_;
  long long steps_ = 0;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
};

double global_grad_norm(const std::vector<NamedParameter>& params);
// Rescales all gradients so their joint L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(const std::vector<NamedParameter>& params, double max_norm);

}  // namespace vsm
