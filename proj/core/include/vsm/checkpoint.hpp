#pragma once

// Self-describing binary checkpoints:
//   "VSMCKPT\0" | u32 version | u32 network kind | u64 episodes done | u32 metadata bytes | metadata (JSON)
//   | u32 tensor count | per tensor: u32 name bytes, name, u32 rows, u32 cols, rows*cols f64 row-major
//   | u8 has optimizer | [i64 adam steps | per tensor: first moment, second moment (f64 row-major)]
// All integers and doubles are little-endian.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vsm/networks.hpp"
#include "vsm/optim.hpp"

namespace vsm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  NetworkKind kind = NetworkKind::Grl;
  std::uint64_t episodes_done = 0;
  std::string metadata;  // free-form JSON describing the run
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
  bool has_optimizer = false;
  long long optimizer_steps = 0;
  std::vector<Eigen::MatrixXd> first_moments;
  std::vector<Eigen::MatrixXd> second_moments;
};

Checkpoint capture_checkpoint(const ActorCritic& net, const Adam* optimizer, std::uint64_t episodes_done,
                              std::string metadata = "{}");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies tensors into `net`; throws CheckpointError on kind, name or shape mismatch.
void restore_parameters(ActorCritic& net, const Checkpoint& ckpt);
void restore_optimizer(Adam& optimizer, const Checkpoint& ckpt);
std::unique_ptr<ActorCritic> network_from_checkpoint(const Checkpoint& ckpt);

}  // namespace vsm
