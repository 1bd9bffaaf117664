#include "bls/model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "bls/error.hpp"

namespace bls {

namespace {

enum class Stream : std::uint32_t { feature = 1, enhancement = 2 };

class UniformStream {
 public:
  UniformStream(std::uint64_t seed, Stream stream, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(block),
                      static_cast<std::uint32_t>(block >> 32)};
    engine_.seed(seq);
  }

  // 53 random mantissa bits mapped onto [-1, 1); independent of the
  // standard library's distribution implementation.
  double next() {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
  }

  void fill(Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = next();
    }
  }

  void fill(Eigen::RowVectorXd& v) {
    for (Index i = 0; i < v.size(); ++i) v(i) = next();
  }

 private:
  std::mt19937_64 engine_;
};

// Row-at-a-time product so each output row depends only on its input row
// (a blocked GEMM may reorder the inner sums depending on the batch size).
Matrix rowwise_product(const Matrix& x, const Matrix& w) {
  Matrix out(x.rows(), w.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(i).noalias() = x.row(i) * w;
  return out;
}

Matrix affine_rows(const Matrix& x, const Matrix& w, const Eigen::RowVectorXd& b) {
  Matrix out = rowwise_product(x, w);
  out.rowwise() += b;
  return out;
}

Eigen::RowVectorXd safe_scale(Eigen::RowVectorXd scale) {
  for (Index j = 0; j < scale.size(); ++j) {
    if (!(scale(j) > 0.0) || !std::isfinite(scale(j))) scale(j) = 1.0;
  }
  return scale;
}

void require_positive(Index value, const char* name) {
  if (value < 1) {
    throw InvalidConfig(std::string(name) + " must be at least 1, got " + std::to_string(value));
  }
}

}  // namespace

double sigmoid(double z) {
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return s < lo ? lo : (s > hi ? hi : s);
}

ExpandedMatrix ExpandedMatrix::select_columns(std::span<const Index> columns) const {
  ExpandedMatrix out;
  out.values.resize(values.rows(), static_cast<Index>(columns.size()));
  out.labels.reserve(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Index c = columns[j];
    if (c < 0 || c >= values.cols()) {
      throw IndexOutOfRange("column " + std::to_string(c) + " of " + std::to_string(values.cols()));
    }
    out.values.col(static_cast<Index>(j)) = values.col(c);
    out.labels.push_back(labels[static_cast<std::size_t>(c)]);
  }
  return out;
}

BlsNetwork BlsNetwork::build(const NetworkConfig& config) {
  require_positive(config.input_dim, "input_dim");
  require_positive(config.feature_groups, "feature_groups");
  require_positive(config.nodes_per_group, "nodes_per_group");
  require_positive(config.enhancement_nodes, "enhancement_nodes");

  BlsNetwork net;
  net.config_ = config;
  const Index per = config.nodes_per_group;
  const Index nf = config.feature_groups * per;
  net.feature_weights_.resize(config.input_dim, nf);
  for (Index g = 0; g < config.feature_groups; ++g) {
    UniformStream stream(config.seed, Stream::feature, static_cast<std::uint64_t>(g));
    Matrix w(config.input_dim, per);
    stream.fill(w);
    net.feature_weights_.middleCols(g * per, per) = w;
  }

  // Bound on |x w| over the unit box.
  const Eigen::RowVectorXd low = net.feature_weights_.cwiseMin(0.0).colwise().sum();
  const Eigen::RowVectorXd high = net.feature_weights_.cwiseMax(0.0).colwise().sum();
  net.feature_scale_ = safe_scale(low.cwiseAbs().cwiseMax(high));

  net.add_enhancement_group(config.enhancement_nodes);
  return net;
}

Index BlsNetwork::node_count() const {
  Index k = feature_count();
  for (const auto& g : groups_) k += g.weights.cols();
  return k;
}

void BlsNetwork::calibrate(const Matrix& x) {
  if (x.cols() != config_.input_dim) {
    throw DimensionMismatch("calibrate expects " + std::to_string(config_.input_dim) +
                            " input columns, got " + std::to_string(x.cols()));
  }
  if (x.rows() == 0) throw InvalidConfig("calibrate needs at least one sample");
  const Matrix z = rowwise_product(x, feature_weights_);
  feature_scale_ = safe_scale(z.cwiseAbs().colwise().maxCoeff());
}

void BlsNetwork::set_feature_scale(Eigen::RowVectorXd scale) {
  if (scale.size() != feature_count()) {
    throw DimensionMismatch("feature scale needs " + std::to_string(feature_count()) + " entries");
  }
  feature_scale_ = safe_scale(std::move(scale));
}

const EnhancementGroup& BlsNetwork::add_enhancement_group(Index q) {
  require_positive(q, "enhancement group size");
  UniformStream stream(config_.seed, Stream::enhancement, groups_.size());
  EnhancementGroup g;
  g.weights.resize(feature_count(), q);
  g.bias.resize(q);
  stream.fill(g.weights);
  stream.fill(g.bias);
  groups_.push_back(std::move(g));
  return groups_.back();
}

Matrix BlsNetwork::features(const Matrix& x) const {
  if (x.cols() != config_.input_dim) {
    throw DimensionMismatch("expand expects " + std::to_string(config_.input_dim) +
                            " input columns, got " + std::to_string(x.cols()));
  }
  Matrix z = rowwise_product(x, feature_weights_);
  for (Index j = 0; j < z.cols(); ++j) z.col(j) /= feature_scale_(j);
  return z;
}

Matrix BlsNetwork::expand_group(const Matrix& x, std::size_t group) const {
  if (group >= groups_.size()) {
    throw IndexOutOfRange("enhancement group " + std::to_string(group));
  }
  const Matrix z = features(x);
  const auto& g = groups_[group];
  Matrix h = affine_rows(z, g.weights, g.bias);
  return h.unaryExpr([](double v) { return sigmoid(v); });
}

ExpandedMatrix BlsNetwork::expand(const Matrix& x) const {
  const Matrix z = features(x);
  ExpandedMatrix out;
  out.values.resize(x.rows(), node_count());
  out.values.leftCols(z.cols()) = z;
  out.labels.reserve(static_cast<std::size_t>(node_count()));
  for (Index j = 0; j < z.cols(); ++j) {
    out.labels.push_back({NodeKind::feature, j / config_.nodes_per_group});
  }
  Index col = z.cols();
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    Matrix h = affine_rows(z, g.weights, g.bias);
    out.values.middleCols(col, h.cols()) = h.unaryExpr([](double v) { return sigmoid(v); });
    for (Index j = 0; j < h.cols(); ++j) {
      out.labels.push_back({NodeKind::enhancement, static_cast<Index>(gi)});
    }
    col += h.cols();
  }
  return out;
}

}  // namespace bls
