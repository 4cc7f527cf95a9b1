#include "vsm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace vsm {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'V', 'S', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kMaxDim = 1u << 20;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void matrix(const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) pod(m(i, j));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) fail("truncated file");
    return v;
  }
  std::string bytes() {
    const auto n = pod<std::uint32_t>();
    if (n > (1u << 24)) fail("string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) fail("truncated file");
    return s;
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = pod<double>();
    return m;
  }
  [[noreturn]] void fail(const std::string& why) const { throw CheckpointError(path_ + ": " + why); }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

Checkpoint capture_checkpoint(const ActorCritic& net, const Adam* optimizer, std::uint64_t episodes_done,
                              std::string metadata) {
  Checkpoint c;
  c.kind = net.kind();
  c.episodes_done = episodes_done;
  c.metadata = std::move(metadata);
  for (const auto& p : net.parameters()) c.tensors.emplace_back(p.name, p.tensor.value());
  if (optimizer) {
    c.has_optimizer = true;
    c.optimizer_steps = optimizer->steps();
    c.first_moments = optimizer->first_moments();
    c.second_moments = optimizer->second_moments();
  }
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (c.has_optimizer && (c.first_moments.size() != c.tensors.size() || c.second_moments.size() != c.tensors.size()))
    throw CheckpointError("save_checkpoint: optimizer moments do not match tensors");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    Writer w(out);
    out.write(kMagic.data(), kMagic.size());
    w.pod(kCheckpointVersion);
    w.pod(static_cast<std::uint32_t>(c.kind));
    w.pod(c.episodes_done);
    w.bytes(c.metadata);
    w.pod(static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto& [name, m] : c.tensors) {
      w.bytes(name);
      w.pod(static_cast<std::uint32_t>(m.rows()));
      w.pod(static_cast<std::uint32_t>(m.cols()));
      w.matrix(m);
    }
    w.pod(static_cast<std::uint8_t>(c.has_optimizer ? 1 : 0));
    if (c.has_optimizer) {
      w.pod(static_cast<std::int64_t>(c.optimizer_steps));
      for (std::size_t i = 0; i < c.tensors.size(); ++i) {
        w.matrix(c.first_moments[i]);
        w.matrix(c.second_moments[i]);
      }
    }
    out.flush();
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) r.fail("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    r.fail("incompatible checkpoint version " + std::to_string(version) + " (expected " +
           std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  const auto kind = r.pod<std::uint32_t>();
  if (kind != static_cast<std::uint32_t>(NetworkKind::Grl) && kind != static_cast<std::uint32_t>(NetworkKind::Mlp))
    r.fail("unknown network kind " + std::to_string(kind));
  c.kind = static_cast<NetworkKind>(kind);
  c.episodes_done = r.pod<std::uint64_t>();
  c.metadata = r.bytes();
  const auto count = r.pod<std::uint32_t>();
  if (count > 4096) r.fail("tensor count out of range");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes();
    const auto rows = r.pod<std::uint32_t>();
    const auto cols = r.pod<std::uint32_t>();
    if (rows > kMaxDim || cols > kMaxDim) r.fail("tensor shape out of range for " + name);
    c.tensors.emplace_back(std::move(name), r.matrix(rows, cols));
    shapes.emplace_back(rows, cols);
  }
  c.has_optimizer = r.pod<std::uint8_t>() != 0;
  if (c.has_optimizer) {
    c.optimizer_steps = r.pod<std::int64_t>();
    for (const auto& [rows, cols] : shapes) {
      c.first_moments.push_back(r.matrix(rows, cols));
      c.second_moments.push_back(r.matrix(rows, cols));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes after checkpoint");
  return c;
}

void restore_parameters(ActorCritic& net, const Checkpoint& c) {
  if (c.kind != net.kind())
    throw CheckpointError("checkpoint holds a " + std::string(to_string(c.kind)) + " network, expected " +
                          std::string(to_string(net.kind())));
  auto params = net.parameters();
  if (params.size() != c.tensors.size()) throw CheckpointError("checkpoint tensor count does not match network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, m] = c.tensors[i];
    if (name != params[i].name) throw CheckpointError("checkpoint tensor " + name + " where " + params[i].name + " expected");
    if (m.rows() != params[i].tensor.rows() || m.cols() != params[i].tensor.cols())
      throw CheckpointError("checkpoint tensor " + name + " has the wrong shape");
    params[i].tensor.mutable_value() = m;
  }
}

void restore_optimizer(Adam& optimizer, const Checkpoint& c) {
  if (!c.has_optimizer) throw CheckpointError("checkpoint has no optimizer state");
  try {
    optimizer.restore(c.optimizer_steps, c.first_moments, c.second_moments);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
}

std::unique_ptr<ActorCritic> network_from_checkpoint(const Checkpoint& c) {
  auto net = make_network(c.kind, 0);
  restore_parameters(*net, c);
  return net;
}

}  // namespace vsm
