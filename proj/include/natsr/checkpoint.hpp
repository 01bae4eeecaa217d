#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "natsr/adam.hpp"
#include "natsr/autodiff.hpp"
#include "natsr/nmd.hpp"

// Single-file checkpoints:
//   "NATSRCKP" | u32 version | u64 header bytes | JSON header |
//   little-endian f64 payload | SHA-256 of everything before it
// The header lists every tensor (name, shape, buffer flag, payload offset),
// the network kind, the config echo, and optional optimiser and curriculum
// state.
namespace natsr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class NetworkKind { kNmd, kGenerator, kGanDisc };
const char* kind_tag(NetworkKind k);
NetworkKind parse_kind_tag(const std::string& tag);

struct Checkpoint {
  NetworkKind kind = NetworkKind::kGenerator;
  nlohmann::json config;  // echo of the config that produced the network
  ParameterSet params;
  std::optional<AdamState> adam;
  std::optional<CurriculumState> curriculum;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Verifies the digest over the whole file before parsing anything. Throws
// IoError for truncated or tampered files, version mismatches, and (when
// `expected` is set) a kind tag mismatch.
Checkpoint load_checkpoint(const std::string& path, std::optional<NetworkKind> expected = std::nullopt);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace natsr
