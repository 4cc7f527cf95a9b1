#include "vsm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vsm {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

constexpr std::string_view kDefaultConfig = R"(# Vertiport schedule-management defaults.

# layout (meters)
layout.port_spacing = 10
layout.hover_radius = 25
layout.destination_radius = 250
layout.destination_bearing_deg = 90
layout.airspace_radius = 50
layout.landing_capture_radius = 5

# simulator
sim.cruise_speed = 50          # meters per minute
sim.drain_per_meter = 0.02     # battery percent per meter cruised
sim.hover_drain = 0.5
sim.idle_drain = 0.25
sim.charge_rate = 10
sim.collision_threshold = 3
sim.conflict_horizon = 10
sim.dwell_min = 10
sim.dwell_max = 30

# reward weights: safety > delay > takeoff > landing > battery
reward.w_takeoff = 1.1
reward.w_landing = 1.0
reward.w_battery = 0.8
reward.w_delay = 1.2
reward.w_safety = 2.2

# ppo
ppo.clip = 0.2
ppo.discount = 0.99
ppo.gae_lambda = 0.95
ppo.epochs = 4
ppo.minibatch = 256
ppo.learning_rate = 1e-5
ppo.entropy_coef = 0.01
ppo.value_coef = 0.5
ppo.reward_scale = 0.01
ppo.max_grad_norm = 0.5

# experiment
experiment.episodes = 200       # training
experiment.eval_episodes = 50
experiment.seeds = 7           # comma-separated
experiment.workers = 1
experiment.out = out
)";

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[std::string(key)] = std::string(value);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  auto raw = get(key);
  if (!raw) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(*raw, &used);
    if (used != raw->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not a number: " + *raw);
  }
}

std::optional<long long> KeyValueConfig::get_int(const std::string& key) const {
  auto raw = get(key);
  if (!raw) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
  if (ec != std::errc{} || ptr != raw->data() + raw->size())
    throw std::invalid_argument("config key '" + key + "' is not an integer: " + *raw);
  return v;
}

std::string_view default_config_text() { return kDefaultConfig; }

}  // namespace vsm
