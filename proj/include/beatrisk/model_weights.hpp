#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace beatrisk {

/// Architecture hyperparameters. Defaults are the published configuration.
struct Net1dConfig {
  int in_channels = 1;
  int base_filters = 32;
  double ratio = 1.0;  // stored for provenance; has no effect at 1.0
  std::vector<int> filter_list{16, 32, 32, 40, 40, 64, 64};
  std::vector<int> block_list{2, 2, 2, 2, 2, 2, 2};
  int kernel_size = 8;
  int stride = 1;
  int groups_width = 4;
  int n_classes = 2;
  double dropout_rate = 0.5;
  int se_reduction = 2;

  bool operator==(const Net1dConfig&) const = default;
};

/// Throws Error describing the first broken constraint.
void validate(const Net1dConfig& config);

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;  // row-major

  std::size_t element_count() const;
  bool operator==(const NamedTensor&) const = default;
};

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

struct ModelWeights {
  std::uint32_t format_version = kWeightsFormatVersion;
  Net1dConfig config;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  NamedTensor* find(const std::string& name);
  bool operator==(const ModelWeights&) const = default;
};

/// Structural checks only: unique names and value counts matching shapes.
/// Consistency with the architecture is checked when a Net1d is built.
void validate(const ModelWeights& weights);

}  // namespace beatrisk
