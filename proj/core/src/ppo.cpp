#include "vsm/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vsm/config.hpp"

namespace vsm {

using ad::Tensor;
using Eigen::Index;
using Eigen::MatrixXd;

void validate(const PpoConfig& c) {
  if (!(c.clip > 0.0 && c.clip < 1.0)) throw std::invalid_argument("ppo.clip must lie in (0,1)");
  if (!(c.discount > 0.0 && c.discount <= 1.0)) throw std::invalid_argument("ppo.discount must lie in (0,1]");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0)) throw std::invalid_argument("ppo.gae_lambda must lie in [0,1]");
  if (c.epochs < 1) throw std::invalid_argument("ppo.epochs must be >= 1");
  if (c.minibatch < 1) throw std::invalid_argument("ppo.minibatch must be >= 1");
  if (!(c.learning_rate > 0.0)) throw std::invalid_argument("ppo.learning_rate must be positive");
  if (c.entropy_coef < 0.0 || c.value_coef < 0.0) throw std::invalid_argument("ppo coefficients must be >= 0");
  if (!(c.reward_scale > 0.0)) throw std::invalid_argument("ppo.reward_scale must be positive");
}

PpoConfig ppo_config_from(const KeyValueConfig& cfg, PpoConfig c) {
  if (auto v = cfg.get_double("ppo.clip")) c.clip = *v;
  if (auto v = cfg.get_double("ppo.discount")) c.discount = *v;
  if (auto v = cfg.get_double("ppo.gae_lambda")) c.gae_lambda = *v;
  if (auto v = cfg.get_int("ppo.epochs")) c.epochs = static_cast<int>(*v);
  if (auto v = cfg.get_int("ppo.minibatch")) c.minibatch = static_cast<int>(*v);
  if (auto v = cfg.get_double("ppo.learning_rate")) c.learning_rate = *v;
  if (auto v = cfg.get_double("ppo.entropy_coef")) c.entropy_coef = *v;
  if (auto v = cfg.get_double("ppo.value_coef")) c.value_coef = *v;
  if (auto v = cfg.get_double("ppo.reward_scale")) c.reward_scale = *v;
  if (auto v = cfg.get_double("ppo.max_grad_norm")) c.max_grad_norm = *v;
  if (auto v = cfg.get_int("ppo.normalize_advantages")) c.normalize_advantages = *v != 0;
  validate(c);
  return c;
}

Advantages compute_gae(const RolloutBuffer& buffer, double discount, double lambda, double reward_scale) {
  const auto& ts = buffer.transitions;
  Advantages out;
  out.advantages.assign(ts.size(), 0.0);
  out.returns.assign(ts.size(), 0.0);
  double running = 0.0;
  for (std::size_t i = ts.size(); i-- > 0;) {
    const bool last = ts[i].done || i + 1 == ts.size();
    const double next_value = last ? 0.0 : ts[i + 1].value;
    if (last) running = 0.0;
    const double delta = ts[i].reward * reward_scale + discount * next_value - ts[i].value;
    running = delta + discount * lambda * running;
    out.advantages[i] = running;
    out.returns[i] = running + ts[i].value;
  }
  return out;
}

PpoLoss ppo_loss(const ActorCritic& net, std::span<const Observation* const> batch, std::span<const int> actions,
                 std::span<const double> old_log_probs, std::span<const double> advantages,
                 std::span<const double> returns, const PpoConfig& config) {
  const std::size_t n = batch.size();
  if (actions.size() != n || old_log_probs.size() != n || advantages.size() != n || returns.size() != n)
    throw std::invalid_argument("ppo_loss: batch arrays differ in length");

  const NetworkOutput out = net.forward(batch);
  std::vector<Index> cols(actions.begin(), actions.end());
  const Tensor log_prob = ad::pick(out.log_probs, cols);

  auto column = [n](std::span<const double> v) {
    MatrixXd m(static_cast<Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) m(static_cast<Index>(i), 0) = v[i];
    return Tensor::constant(std::move(m));
  };
  const Tensor old_lp = column(old_log_probs);
  const Tensor adv = column(advantages);
  const Tensor ret = column(returns);

  const Tensor ratio = ad::exp(ad::sub(log_prob, old_lp));
  const Tensor surr1 = ad::mul(ratio, adv);
  const Tensor surr2 = ad::mul(ad::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), adv);
  const Tensor policy_loss = ad::scale(ad::mean(ad::minimum(surr1, surr2)), -1.0);
  const Tensor value_loss = ad::mean(ad::square(ad::sub(out.values, ret)));
  const Tensor entropy = ad::mean(ad::masked_entropy(out.log_probs, mask_matrix(batch)));

  PpoLoss loss;
  loss.total = ad::sub(ad::add(policy_loss, ad::scale(value_loss, config.value_coef)),
                       ad::scale(entropy, config.entropy_coef));
  loss.policy_loss = policy_loss.item();
  loss.value_loss = value_loss.item();
  loss.entropy = entropy.item();
  const auto& r = ratio.value();
  loss.clip_fraction = ((r.array() - 1.0).abs() > config.clip).cast<double>().mean();
  // Low-variance KL estimate (r - 1) - log r.
  loss.approx_kl = ((r.array() - 1.0) - r.array().log()).mean();
  return loss;
}

UpdateStats ppo_update(ActorCritic& net, Adam& optimizer, const RolloutBuffer& buffer, const PpoConfig& config,
                       Rng& shuffle_rng) {
  validate(config);
  if (buffer.empty()) throw std::invalid_argument("ppo_update: empty buffer");

  Advantages est = compute_gae(buffer, config.discount, config.gae_lambda, config.reward_scale);
  std::vector<double> adv = est.advantages;
  if (config.normalize_advantages && adv.size() > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(adv.size()));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  const auto params = net.parameters();
  const std::size_t n = buffer.size();
  const std::size_t mb = static_cast<std::size_t>(config.minibatch);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateStats stats;
  std::vector<const Observation*> obs;
  std::vector<int> actions;
  std::vector<double> old_lp, a_mb, r_mb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our own generator so runs agree across standard libraries.
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1))]);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      obs.clear();
      actions.clear();
      old_lp.clear();
      a_mb.clear();
      r_mb.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& t = buffer.transitions[order[k]];
        obs.push_back(&t.obs);
        actions.push_back(t.action);
        old_lp.push_back(t.log_prob);
        a_mb.push_back(adv[order[k]]);
        r_mb.push_back(est.returns[order[k]]);
      }
      PpoLoss loss = ppo_loss(net, obs, actions, old_lp, a_mb, r_mb, config);
      if (!std::isfinite(loss.total.item()))
        throw NonFiniteLoss(epoch, stats.minibatches,
                            "ppo_update: non-finite loss in epoch " + std::to_string(epoch) + ", minibatch " +
                                std::to_string(stats.minibatches) + " (policy " + std::to_string(loss.policy_loss) +
                                ", value " + std::to_string(loss.value_loss) + ")");
      optimizer.zero_grad();
      loss.total.backward();
      stats.grad_norm += clip_grad_norm(params, config.max_grad_norm);
      optimizer.step();

      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      stats.approx_kl += loss.approx_kl;
      ++stats.minibatches;
    }
  }
  optimizer.zero_grad();
  const double k = static_cast<double>(stats.minibatches);
  stats.policy_loss /= k;
  stats.value_loss /= k;
  stats.entropy /= k;
  stats.clip_fraction /= k;
  stats.approx_kl /= k;
  stats.grad_norm /= k;
  return stats;
}

}  // namespace vsm
