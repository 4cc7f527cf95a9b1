#pragma once

// Proximal policy optimization with a clipped surrogate, GAE, value regression and an entropy bonus.

#include <stdexcept>
#include <vector>

#include "vsm/networks.hpp"
#include "vsm/optim.hpp"

namespace vsm {

class KeyValueConfig;

struct PpoConfig {
  double clip = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch = 256;
  double learning_rate = 1e-5;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double reward_scale = 0.01;   // rewards are multiplied by this before advantage estimation
  double max_grad_norm = 0.5;   // <= 0 disables clipping
  bool normalize_advantages = true;

  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

void validate(const PpoConfig& config);
PpoConfig ppo_config_from(const KeyValueConfig& cfg, PpoConfig base = {});

struct Transition {
  Observation obs;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;  // last decision of its episode
};

struct RolloutBuffer {
  std::vector<Transition> transitions;

  bool empty() const { return transitions.empty(); }
  std::size_t size() const { return transitions.size(); }
};

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over consecutive transitions; episodes end at `done`.
// Values after the final transition are taken as zero.
Advantages compute_gae(const RolloutBuffer& buffer, double discount, double lambda, double reward_scale);

struct PpoLoss {
  ad::Tensor total;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Loss for one minibatch; `advantages` are used as given (normalize beforehand if desired).
PpoLoss ppo_loss(const ActorCritic& net, std::span<const Observation* const> batch, std::span<const int> actions,
                 std::span<const double> old_log_probs, std::span<const double> advantages,
                 std::span<const double> returns, const PpoConfig& config);

struct UpdateStats {
  double policy_loss = 0.0;  // means over minibatches
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  int minibatches = 0;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(int epoch, int minibatch, const std::string& what)
      : std::runtime_error(what), epoch(epoch), minibatch(minibatch) {}
  int epoch;
  int minibatch;
};

// Runs `epochs` passes of shuffled minibatches over the buffer. Throws NonFiniteLoss before touching
// the parameters of the offending minibatch.
UpdateStats ppo_update(ActorCritic& net, Adam& optimizer, const RolloutBuffer& buffer, const PpoConfig& config,
                       Rng& shuffle_rng);

}  // namespace vsm
