#pragma once

#include <filesystem>
#include <iosfwd>

#include "ceilkit/config.hpp"
#include "ceilkit/pipeline.hpp"

namespace ceilkit {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  CeilConfig config;
  CeilState state;
};

// Layout: 8-byte magic, u32 version, u64 payload length, payload, u64
// FNV-1a of the payload. Loading a file with another version, a bad checksum
// or missing bytes throws DataError.
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ceilkit
