#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qkm/kernel.hpp"

namespace qkm {

/// Labelled feature matrix; labels are +1 or -1.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<FeatureRow> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_features() const noexcept { return feature_names.size(); }
  std::size_t count(int label) const;
};

/// CSV with a header row and a label column named `class`. Labels may be
/// 1 / -1 or illicit / licit; rows labelled `unknown` are skipped. All other
/// columns must be numeric.
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Writes `class` first, then the features with 17 significant digits.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t per_class = 100;
  std::size_t m = 4;
  std::size_t blobs = 2;       // Gaussian blobs per class
  double separation = 4.0;     // distance between the class means
  std::uint64_t seed = 0;
};

/// Two classes of isotropic unit-variance Gaussian blobs. Class means are
/// `separation` apart along the all-ones direction; blobs of a class are
/// spread orthogonally to it.
Dataset make_synthetic(const SyntheticSpec& spec);

/// Keep the first m feature columns.
Dataset select_features(const Dataset& data, std::size_t m);

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

/// Seeded draw of `per_class` rows of each class, in original row order.
/// Throws ValidationError naming the available counts when a class is short.
Dataset balanced_sample(const Dataset& data, std::size_t per_class, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split: round(train_fraction * n_c) rows of each class go to
/// training. Indices are sorted. Deterministic for a fixed seed.
SplitIndices split_indices(std::span<const int> labels, double train_fraction, std::uint64_t seed);

struct RescaleParams {
  std::vector<double> min;
  std::vector<double> max;
};

RescaleParams fit_rescale(std::span<const FeatureRow> train);

/// x' = 2 (x - min) / (max - min), clamped into [0, 2]; constant features map to 1.
std::vector<FeatureRow> apply_rescale(std::span<const FeatureRow> rows, const RescaleParams& params);

struct Rescaled {
  std::vector<FeatureRow> train;
  std::vector<FeatureRow> other;
  RescaleParams params;
};

/// Fit on the training rows and apply to both sets.
Rescaled rescale(std::span<const FeatureRow> train, std::span<const FeatureRow> other);

}  // namespace qkm
