#include "ceilkit/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "ceilkit/error.hpp"
#include "ceilkit/report.hpp"

namespace ceilkit {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'E', 'I', 'L', 'K', 'I', 'T', '\0'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_cluster_result(std::ostream& out, const ClusterResult& r) {
  detail::write_pod<std::uint64_t>(out, r.assignments.size());
  for (int a : r.assignments) detail::write_pod<std::int32_t>(out, a);
  detail::write_matrix(out, r.q.q);
  detail::write_matrix(out, r.centroids.mu);
  detail::write_pod<std::uint64_t>(out, r.history.size());
  for (const auto& e : r.history) {
    detail::write_pod<std::int32_t>(out, e.epoch);
    detail::write_pod(out, e.contrast);
    detail::write_pod(out, e.cluster);
    detail::write_pod(out, e.category);
  }
}

ClusterResult read_cluster_result(std::istream& in) {
  ClusterResult r;
  const auto n = detail::read_pod<std::uint64_t>(in);
  if (n > (1ULL << 31)) throw DataError("checkpoint corrupt: assignment count out of range");
  r.assignments.resize(n);
  for (auto& a : r.assignments) a = detail::read_pod<std::int32_t>(in);
  r.q.q = detail::read_matrix(in);
  r.centroids.mu = detail::read_matrix(in);
  const auto epochs = detail::read_pod<std::uint64_t>(in);
  if (epochs > (1ULL << 24)) throw DataError("checkpoint corrupt: history length out of range");
  r.history.resize(epochs);
  for (auto& e : r.history) {
    e.epoch = detail::read_pod<std::int32_t>(in);
    e.contrast = detail::read_pod<double>(in);
    e.cluster = detail::read_pod<double>(in);
    e.category = detail::read_pod<double>(in);
  }
  return r;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  std::ostringstream body(std::ios::binary);
  detail::write_string(body, checkpoint.config.to_text());
  detail::write_pod<std::int32_t>(body, checkpoint.state.next_iteration);
  write_encoder(body, checkpoint.state.encoder);
  write_cluster_result(body, checkpoint.state.last);
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& r : checkpoint.state.records) records.push_back(to_json(r));
  detail::write_string(body, records.dump());

  const std::string payload = body.str();
  out.write(kMagic.data(), kMagic.size());
  detail::write_pod<std::uint32_t>(out, kCheckpointVersion);
  detail::write_pod<std::uint64_t>(out, payload.size());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  detail::write_pod<std::uint64_t>(out, fnv1a(payload));
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a ceilkit checkpoint (bad magic)");
  }
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto size = detail::read_pod<std::uint64_t>(in);
  if (size > (1ULL << 36)) throw DataError("checkpoint corrupt: payload size out of range");
  std::string payload(size, '\0');
  if (!in.read(payload.data(), static_cast<std::streamsize>(size))) {
    throw DataError("checkpoint truncated or corrupt");
  }
  if (detail::read_pod<std::uint64_t>(in) != fnv1a(payload)) {
    throw DataError("checkpoint corrupt: checksum mismatch");
  }

  std::istringstream body(payload, std::ios::binary);
  Checkpoint cp;
  std::istringstream config_text(detail::read_string(body));
  cp.config = CeilConfig::parse(config_text);
  cp.state.next_iteration = detail::read_pod<std::int32_t>(body);
  cp.state.encoder = read_encoder(body);
  cp.state.last = read_cluster_result(body);
  const auto records = nlohmann::json::parse(detail::read_string(body), nullptr, false);
  if (records.is_discarded() || !records.is_array()) throw DataError("checkpoint corrupt: bad iteration records");
  for (const auto& r : records) cp.state.records.push_back(record_from_json(r));
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace ceilkit
