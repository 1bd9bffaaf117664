#include "bls/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "bls/error.hpp"

namespace bls {

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t big_endian_u32(const std::vector<std::uint8_t>& bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

void put_big_endian(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view field, const std::string& where) {
  field = trim(field);
  T value{};
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty()) {
    throw ParseError(where + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

Dataset assemble(std::vector<int> labels, Matrix x) {
  Dataset d;
  d.x = std::move(x);
  d.classes = observed_classes(labels);
  d.y = one_hot(labels, d.classes);
  d.labels = std::move(labels);
  return d;
}

}  // namespace

Dataset Dataset::take_rows(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > samples()) {
    throw IndexOutOfRange("rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                          ") of " + std::to_string(samples()));
  }
  Dataset out;
  out.x = x.middleRows(begin, count);
  out.y = y.middleRows(begin, count);
  out.labels.assign(labels.begin() + begin, labels.begin() + begin + count);
  out.classes = classes;
  return out;
}

DataFormat parse_data_format(const std::string& tag) {
  if (tag == "csv") return DataFormat::csv;
  if (tag == "idx") return DataFormat::idx;
  if (tag == "synthetic") return DataFormat::synthetic;
  throw InvalidConfig("unknown data format '" + tag + "' (expected csv, idx or synthetic)");
}

std::string to_string(DataFormat format) {
  switch (format) {
    case DataFormat::csv: return "csv";
    case DataFormat::idx: return "idx";
    case DataFormat::synthetic: return "synthetic";
  }
  return "?";
}

std::vector<int> observed_classes(const std::vector<int>& labels) {
  std::vector<int> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

Matrix one_hot(const std::vector<int>& labels, const std::vector<int>& classes) {
  Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), static_cast<Index>(classes.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), labels[i]);
    if (it == classes.end() || *it != labels[i]) {
      throw LabelMismatch("label " + std::to_string(labels[i]) + " is not a known class");
    }
    y(static_cast<Index>(i), it - classes.begin()) = 1.0;
  }
  return y;
}

Dataset with_classes(Dataset data, const std::vector<int>& classes) {
  data.y = one_hot(data.labels, classes);
  data.classes = classes;
  return data;
}

Dataset parse_csv(const std::string& text, const std::string& origin) {
  std::vector<int> labels;
  std::vector<double> values;
  Index width = -1;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    Index fields = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = row.find(',', start);
      const std::string_view field =
          row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (fields == 0) {
        labels.push_back(parse_number<int>(field, where));
      } else {
        const double v = parse_number<double>(field, where);
        if (!std::isfinite(v)) throw ParseError(where + ": non-finite value");
        values.push_back(v);
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields < 2) throw ParseError(where + ": need a label and at least one feature");
    if (width < 0) width = fields - 1;
    if (fields - 1 != width) {
      throw ParseError(where + ": expected " + std::to_string(width) + " features, found " +
                       std::to_string(fields - 1));
    }
  }
  if (labels.empty()) throw ParseError(origin + ": no samples");
  const Index n = static_cast<Index>(labels.size());
  Matrix x(n, width);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < width; ++j) x(i, j) = values[static_cast<std::size_t>(i * width + j)];
  return assemble(std::move(labels), std::move(x));
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_csv(text.str(), path.string());
}

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 16) throw ParseError(path.string() + ": truncated IDX header");
  const std::uint32_t magic = big_endian_u32(bytes, 0);
  if (magic != kIdxImages) throw ParseError(path.string() + ": not an IDX image file");
  IdxImages img;
  img.count = big_endian_u32(bytes, 4);
  img.rows = big_endian_u32(bytes, 8);
  img.cols = big_endian_u32(bytes, 12);
  const std::uint64_t expected =
      std::uint64_t{img.count} * std::uint64_t{img.rows} * std::uint64_t{img.cols};
  if (img.rows == 0 || img.cols == 0 || bytes.size() - 16 != expected) {
    throw ParseError(path.string() + ": payload does not match " + std::to_string(img.count) + "x" +
                     std::to_string(img.rows) + "x" + std::to_string(img.cols));
  }
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 8) throw ParseError(path.string() + ": truncated IDX header");
  if (big_endian_u32(bytes, 0) != kIdxLabels) {
    throw ParseError(path.string() + ": not an IDX label file");
  }
  const std::uint32_t count = big_endian_u32(bytes, 4);
  if (bytes.size() - 8 != count) throw ParseError(path.string() + ": label payload size mismatch");
  return {bytes.begin() + 8, bytes.end()};
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxImages img = read_idx_images(images);
  const auto raw = read_idx_labels(labels);
  if (raw.size() != img.count) {
    throw LabelMismatch(std::to_string(img.count) + " images but " + std::to_string(raw.size()) +
                        " labels");
  }
  const Index n = img.count;
  const Index d = Index{img.rows} * Index{img.cols};
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = img.pixels[static_cast<std::size_t>(i * d + j)] / 255.0;
  return assemble(std::vector<int>(raw.begin(), raw.end()), std::move(x));
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out.precision(17);
  for (Index i = 0; i < data.samples(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.features(); ++j) out << ',' << data.x(i, j);
    out << '\n';
  }
}

void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::uint32_t rows, std::uint32_t cols) {
  if (Index{rows} * Index{cols} != data.features()) {
    throw DimensionMismatch(std::to_string(rows) + "x" + std::to_string(cols) + " images need " +
                            std::to_string(Index{rows} * Index{cols}) + " features, have " +
                            std::to_string(data.features()));
  }
  for (int label : data.labels) {
    if (label < 0 || label > 255) throw LabelMismatch("label " + std::to_string(label) + " not in [0, 255]");
  }
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw ParseError("cannot write IDX output");
  const auto n = static_cast<std::uint32_t>(data.samples());
  put_big_endian(img, kIdxImages);
  put_big_endian(img, n);
  put_big_endian(img, rows);
  put_big_endian(img, cols);
  for (Index i = 0; i < data.samples(); ++i) {
    for (Index j = 0; j < data.features(); ++j) {
      const double v = std::clamp(data.x(i, j), 0.0, 1.0);
      img.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
    }
  }
  put_big_endian(lab, kIdxLabels);
  put_big_endian(lab, n);
  for (int label : data.labels) lab.put(static_cast<char>(static_cast<std::uint8_t>(label)));
}

SplitDataset make_synthetic(const SyntheticSpec& spec, Index test_samples) {
  if (spec.samples < 1 || spec.dim < 1 || spec.classes < 1 || test_samples < 0 ||
      !(spec.noise >= 0.0)) {
    throw InvalidConfig("synthetic data needs positive samples, dim and classes");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    std::uint32_t{4}};
  std::mt19937_64 engine(seq);
  std::uniform_real_distribution<double> centre(0.25, 0.75);
  std::normal_distribution<double> scatter(0.0, spec.noise);

  Matrix centres(spec.classes, spec.dim);
  for (Index c = 0; c < centres.rows(); ++c)
    for (Index j = 0; j < spec.dim; ++j) centres(c, j) = centre(engine);

  const auto draw = [&](Index n) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    Matrix x(n, spec.dim);
    for (Index i = 0; i < n; ++i) {
      const int label = static_cast<int>(i % spec.classes);
      labels[static_cast<std::size_t>(i)] = label;
      for (Index j = 0; j < spec.dim; ++j)
        x(i, j) = std::clamp(centres(label, j) + scatter(engine), 0.0, 1.0);
    }
    return assemble(std::move(labels), std::move(x));
  };
  SplitDataset out;
  out.train = draw(spec.samples);
  out.test = with_classes(draw(test_samples), out.train.classes);
  return out;
}

}  // namespace bls
