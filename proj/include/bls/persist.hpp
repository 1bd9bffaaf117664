#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "bls/model.hpp"
#include "bls/ridge.hpp"

namespace bls {

/// Enough to regenerate a BlsNetwork bit for bit: the random weights come
/// from the seed, so only sizing, the feature scale and the surviving columns
/// are stored.
struct NetworkRecord {
  NetworkConfig config;                 // enhancement_nodes = size of the first group
  std::vector<Index> group_sizes;       // every enhancement group, in order
  Eigen::RowVectorXd feature_scale;
  std::vector<Index> active;            // network columns backing the state's nodes

  static NetworkRecord capture(const BlsNetwork& network, std::vector<Index> active);
  BlsNetwork rebuild() const;
};

struct SavedState {
  std::variant<NodeState, InputState> state;
  std::optional<NetworkRecord> network;
};

enum class StateKind : std::uint32_t { node = 1, input_q = 2, input_f = 3 };

inline constexpr std::uint32_t kStateVersion = 1;

/// Layout (all little-endian):
///   "BLSS", u32 version, u32 kind, f64 lambda, u64 k, u64 c, u64 l,
///   row-major f64 matrices (node: F, W, A, A^T Y; input: Q or F, then W),
///   u8 has_network, then seed, input_dim, feature_groups, nodes_per_group,
///   group count, group sizes, feature scale, active count and columns,
///   and finally a u64 FNV-1a checksum of every preceding byte.
///
/// Loading validates every length before allocating; any inconsistency is a
/// CorruptFile, an unknown version a VersionMismatch.
std::vector<std::uint8_t> serialize_state(const SavedState& saved);
SavedState deserialize_state(const std::vector<std::uint8_t>& bytes);

void save_state(const SavedState& saved, const std::filesystem::path& path);
SavedState load_state(const std::filesystem::path& path);

}  // namespace bls
