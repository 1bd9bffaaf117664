#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bls/linalg.hpp"

namespace bls {

struct NetworkConfig {
  Index input_dim = 0;
  Index feature_groups = 0;
  Index nodes_per_group = 0;
  Index enhancement_nodes = 0;
  std::uint64_t seed = 0;
};

/// One block of sigmoid enhancement nodes fed by the whole feature block.
struct EnhancementGroup {
  Matrix weights;           // feature_count x q, entries in [-1, 1]
  Eigen::RowVectorXd bias;  // 1 x q, entries in [-1, 1]
};

enum class NodeKind { feature, enhancement };

struct NodeLabel {
  NodeKind kind = NodeKind::feature;
  Index group = 0;
};

/// Node activations, one row per sample, one column per node.
struct ExpandedMatrix {
  Matrix values;
  std::vector<NodeLabel> labels;

  Index samples() const { return values.rows(); }
  Index nodes() const { return values.cols(); }

  /// Keeps the listed columns, in the listed order.
  ExpandedMatrix select_columns(std::span<const Index> columns) const;
};

/// Random feature/enhancement mapping of a broad learning system.
///
/// Feature nodes: `feature_groups` blocks of `nodes_per_group` columns, each a
/// seeded random linear map of the raw input scaled into [-1, 1] by a fixed
/// per-column bound on |X W|, so a zero input maps to a zero feature.
/// Enhancement nodes: sigmoid(Z W + b) where Z is the feature block. Every random draw is uniform on [-1, 1] and comes
/// from a stream keyed on (seed, block id), so the weights of any block can
/// be regenerated independently of how many blocks were drawn before it.
class BlsNetwork {
 public:
  static BlsNetwork build(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  Index feature_count() const { return feature_weights_.cols(); }
  Index node_count() const;
  std::span<const EnhancementGroup> enhancement_groups() const { return groups_; }
  const Matrix& feature_weights() const { return feature_weights_; }
  const Eigen::RowVectorXd& feature_scale() const { return feature_scale_; }

  /// Replaces the per-column bounds with the observed max |X W| over `x`.
  /// The default bounds assume inputs in the unit box [0, 1]^d.
  void calibrate(const Matrix& x);

  /// Restores saved bounds.
  void set_feature_scale(Eigen::RowVectorXd scale);

  /// Draws a new enhancement group of `q` nodes; its columns follow all
  /// existing ones.
  const EnhancementGroup& add_enhancement_group(Index q);

  ExpandedMatrix expand(const Matrix& x) const;

  /// Activations of one enhancement group only.
  Matrix expand_group(const Matrix& x, std::size_t group) const;

  Matrix features(const Matrix& x) const;

 private:
  NetworkConfig config_;
  Matrix feature_weights_;  // input_dim x feature_count
  Eigen::RowVectorXd feature_scale_;
  std::vector<EnhancementGroup> groups_;
};

/// 1 / (1 + e^{-z}) without overflow, clamped to the open interval (0, 1).
double sigmoid(double z);

}  // namespace bls
