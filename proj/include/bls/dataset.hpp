#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bls/linalg.hpp"

namespace bls {

/// Samples with integer class labels. `y` is the 1/0 one-hot encoding over
/// `classes`, which holds the distinct labels in ascending order.
struct Dataset {
  Matrix x;                  // samples x features
  Matrix y;                  // samples x classes
  std::vector<int> labels;   // raw label per sample
  std::vector<int> classes;  // column j of y is label classes[j]

  Index samples() const { return x.rows(); }
  Index features() const { return x.cols(); }

  Dataset take_rows(Index begin, Index count) const;
};

enum class DataFormat { csv, idx, synthetic };

DataFormat parse_data_format(const std::string& tag);
std::string to_string(DataFormat format);

/// One-hot encoding of `labels` over `classes` (ascending). A label missing
/// from `classes` raises LabelMismatch.
Matrix one_hot(const std::vector<int>& labels, const std::vector<int>& classes);

/// Sorted distinct values.
std::vector<int> observed_classes(const std::vector<int>& labels);

/// CSV: one sample per line, integer label first, then the features. Blank
/// lines and lines starting with '#' are skipped. Values are taken as is.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text, const std::string& origin = "<memory>");

/// IDX image file (magic 0x00000803, u8 pixels) plus IDX label file (magic
/// 0x00000801). Pixels are divided by 255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Raw IDX pieces, exposed for inspection and tests.
struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;
};
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_csv(const Dataset& data, const std::filesystem::path& path);

/// Writes x as IDX images of shape rows x cols (rows * cols must equal the
/// feature count); values are clamped to [0, 1] and rounded to u8. Labels
/// must lie in [0, 255].
void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::uint32_t rows, std::uint32_t cols);

/// Re-encodes y over a given class list, typically the training classes.
Dataset with_classes(Dataset data, const std::vector<int>& classes);

/// Gaussian class blobs clipped to the unit box: each class has a centre
/// drawn uniformly in [0.25, 0.75]^dim and samples scatter around it with
/// standard deviation `noise`. Labels cycle 0..classes-1. The test split
/// shares the centres and continues the same random stream.
struct SyntheticSpec {
  Index samples = 1000;
  Index dim = 100;
  int classes = 10;
  double noise = 0.35;
  std::uint64_t seed = 0;
};
struct SplitDataset {
  Dataset train;
  Dataset test;
};
SplitDataset make_synthetic(const SyntheticSpec& spec, Index test_samples);

}  // namespace bls
