#include "bls/persist.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "bls/error.hpp"

namespace bls {

namespace {

constexpr char kMagic[4] = {'B', 'L', 'S', 'S'};

// FNV-1a over everything before the trailer; catches any single flipped
// byte that still leaves a structurally valid file.
std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void index(Index v) { u64(static_cast<std::uint64_t>(v)); }

  void matrix(const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }

  std::vector<std::uint8_t> finish() {
    u64(fnv1a(bytes_.data(), bytes_.size()));
    return std::move(bytes_);
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t remaining() const { return size_ - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw CorruptFile(std::string("truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  // A count that must be backed by at least `unit` bytes per element.
  Index count(const char* what, std::size_t unit) {
    const std::uint64_t v = u64(what);
    if (v > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
        (unit > 0 && v > remaining() / unit)) {
      throw CorruptFile(std::string(what) + " of " + std::to_string(v) + " exceeds the file");
    }
    return static_cast<Index>(v);
  }

  Matrix matrix(Index rows, Index cols, const char* what) {
    const auto r = static_cast<std::uint64_t>(rows);
    const auto c = static_cast<std::uint64_t>(cols);
    if (c != 0 && r > remaining() / 8 / c) {
      throw CorruptFile(std::string(what) + " needs more bytes than the file holds");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = f64(what);
    if (!m.allFinite()) throw CorruptFile(std::string(what) + " holds non-finite values");
    return m;
  }

 private:
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

UpperTriangular read_factor(Reader& in, Index k) {
  Matrix f = in.matrix(k, k, "factor");
  if (!f.triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0)) {
    throw CorruptFile("factor is not upper triangular");
  }
  if ((f.diagonal().array() == 0.0).any()) throw CorruptFile("factor has a zero diagonal");
  return UpperTriangular(std::move(f));
}

void write_network(Writer& out, const NetworkRecord& net) {
  out.u64(net.config.seed);
  out.index(net.config.input_dim);
  out.index(net.config.feature_groups);
  out.index(net.config.nodes_per_group);
  out.index(static_cast<Index>(net.group_sizes.size()));
  for (Index q : net.group_sizes) out.index(q);
  out.index(net.feature_scale.size());
  for (Index j = 0; j < net.feature_scale.size(); ++j) out.f64(net.feature_scale(j));
  out.index(static_cast<Index>(net.active.size()));
  for (Index c : net.active) out.index(c);
}

NetworkRecord read_network(Reader& in, Index k) {
  NetworkRecord net;
  net.config.seed = in.u64("seed");
  net.config.input_dim = in.count("input_dim", 0);
  net.config.feature_groups = in.count("feature_groups", 0);
  net.config.nodes_per_group = in.count("nodes_per_group", 0);
  if (net.config.input_dim < 1 || net.config.feature_groups < 1 || net.config.nodes_per_group < 1) {
    throw CorruptFile("network sizing must be positive");
  }
  const Index groups = in.count("group count", 8);
  if (groups < 1) throw CorruptFile("network has no enhancement group");
  Index total = 0;
  for (Index g = 0; g < groups; ++g) {
    const Index q = in.count("group size", 0);
    if (q < 1 || q > std::numeric_limits<Index>::max() / 4 - total) {
      throw CorruptFile("invalid enhancement group size");
    }
    net.group_sizes.push_back(q);
    total += q;
  }
  net.config.enhancement_nodes = net.group_sizes.front();
  const Index features = in.count("feature scale", 8);
  if (net.config.feature_groups > std::numeric_limits<Index>::max() / net.config.nodes_per_group ||
      features != net.config.feature_groups * net.config.nodes_per_group) {
    throw CorruptFile("feature scale length disagrees with the sizing");
  }
  net.feature_scale.resize(features);
  for (Index j = 0; j < features; ++j) {
    net.feature_scale(j) = in.f64("feature scale");
    if (!(net.feature_scale(j) > 0.0) || !std::isfinite(net.feature_scale(j))) {
      throw CorruptFile("feature scale must be positive");
    }
  }
  const Index active = in.count("active columns", 8);
  if (active != k) throw CorruptFile("active column count disagrees with the state");
  for (Index i = 0; i < active; ++i) {
    const Index c = in.count("active column", 0);
    if (c >= features + total || (!net.active.empty() && c <= net.active.back())) {
      throw CorruptFile("active columns must be increasing network columns");
    }
    net.active.push_back(c);
  }
  return net;
}

}  // namespace

NetworkRecord NetworkRecord::capture(const BlsNetwork& network, std::vector<Index> active) {
  NetworkRecord r;
  r.config = network.config();
  for (const auto& g : network.enhancement_groups()) r.group_sizes.push_back(g.weights.cols());
  r.config.enhancement_nodes = r.group_sizes.front();
  r.feature_scale = network.feature_scale();
  r.active = std::move(active);
  return r;
}

BlsNetwork NetworkRecord::rebuild() const {
  BlsNetwork net = BlsNetwork::build(config);
  for (std::size_t g = 1; g < group_sizes.size(); ++g) net.add_enhancement_group(group_sizes[g]);
  net.set_feature_scale(feature_scale);
  return net;
}

std::vector<std::uint8_t> serialize_state(const SavedState& saved) {
  Writer out;
  out.raw(kMagic, 4);
  out.u32(kStateVersion);
  if (const auto* node = std::get_if<NodeState>(&saved.state)) {
    out.u32(static_cast<std::uint32_t>(StateKind::node));
    out.f64(node->lambda);
    out.index(node->nodes());
    out.index(node->outputs());
    out.index(node->samples());
    out.matrix(node->f.matrix());
    out.matrix(node->w);
    out.matrix(node->a);
    out.matrix(node->aty);
  } else {
    const auto& in = std::get<InputState>(saved.state);
    const bool q = in.form == InputForm::q_form;
    out.u32(static_cast<std::uint32_t>(q ? StateKind::input_q : StateKind::input_f));
    out.f64(in.lambda);
    out.index(in.nodes());
    out.index(in.outputs());
    out.index(0);
    out.matrix(q ? in.q : in.f.matrix());
    out.matrix(in.w);
  }
  out.u8(saved.network ? 1 : 0);
  if (saved.network) write_network(out, *saved.network);
  return out.finish();
}

SavedState deserialize_state(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CorruptFile("missing BLSS magic");
  }
  Reader in(bytes.data() + 4, bytes.size() - 4);
  const std::uint32_t version = in.u32("version");
  if (version != kStateVersion) {
    throw VersionMismatch("state version " + std::to_string(version) + ", expected " +
                          std::to_string(kStateVersion));
  }
  if (bytes.size() < 16) throw CorruptFile("truncated file");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= std::uint64_t{bytes[body + i]} << (8 * i);
  if (stored != fnv1a(bytes.data(), body)) throw CorruptFile("checksum mismatch");
  in = Reader(bytes.data() + 8, body - 8);

  const std::uint32_t kind = in.u32("kind");
  const double lambda = in.f64("lambda");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw CorruptFile("lambda must be positive");
  const Index k = in.count("k", 0);
  const Index c = in.count("c", 0);
  const Index l = in.count("l", 0);
  if (k < 1 || c < 1) throw CorruptFile("state dimensions must be positive");

  SavedState saved;
  switch (static_cast<StateKind>(kind)) {
    case StateKind::node: {
      NodeState s;
      s.lambda = lambda;
      s.f = read_factor(in, k);
      s.w = in.matrix(k, c, "W");
      s.a = in.matrix(l, k, "A");
      s.aty = in.matrix(k, c, "A^T Y");
      saved.state = std::move(s);
      break;
    }
    case StateKind::input_q:
    case StateKind::input_f: {
      if (l != 0) throw CorruptFile("input states carry no sample count");
      InputState s;
      s.lambda = lambda;
      if (static_cast<StateKind>(kind) == StateKind::input_q) {
        s.form = InputForm::q_form;
        s.q = in.matrix(k, k, "Q");
      } else {
        s.form = InputForm::f_form;
        s.f = read_factor(in, k);
      }
      s.w = in.matrix(k, c, "W");
      saved.state = std::move(s);
      break;
    }
    default:
      throw CorruptFile("unknown state kind " + std::to_string(kind));
  }

  const std::uint8_t has_network = in.u8("network flag");
  if (has_network > 1) throw CorruptFile("bad network flag");
  if (has_network == 1) saved.network = read_network(in, k);
  if (in.remaining() != 0) throw CorruptFile(std::to_string(in.remaining()) + " trailing bytes");
  return saved;
}

void save_state(const SavedState& saved, const std::filesystem::path& path) {
  const auto bytes = serialize_state(saved);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidConfig("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidConfig("failed writing " + path.string());
}

SavedState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFile("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize_state(bytes);
}

}  // namespace bls
