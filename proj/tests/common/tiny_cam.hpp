#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "beatrisk/model_weights.hpp"
#include "beatrisk/net1d.hpp"

// Tiny fixed model for saliency checks: 1x1 stem with two channels, one
// stage with a single block whose convolutions and SE gate are all zero, so
// the block output is the max-pooled stem activation (2 channels, length 4
// for an 8-sample beat). Head weights are hand set.
namespace tiny_cam {

inline constexpr std::array<double, 2> kStemW{1.0, -0.5};
inline constexpr std::array<double, 2> kStemB{0.125, 0.25};
inline constexpr std::array<std::array<double, 2>, 2> kHeadW{{{0.25, -0.75}, {-0.5, 1.0}}};
inline constexpr std::array<double, 2> kHeadB{0.0625, -0.0625};
inline constexpr const char* kLayer = "stage0.block0";

inline beatrisk::Net1dConfig config() {
  beatrisk::Net1dConfig c;
  c.in_channels = 1;
  c.base_filters = 2;
  c.filter_list = {2};
  c.block_list = {1};
  c.kernel_size = 1;
  c.groups_width = 2;
  c.dropout_rate = 0.0;
  c.se_reduction = 2;
  return c;
}

inline beatrisk::ModelWeights weights() {
  auto w = beatrisk::Net1d::build(config(), 0).to_weights();
  for (auto& t : w.tensors) {
    const bool var = t.name.size() > 11 && t.name.compare(t.name.size() - 11, 11, "running_var") == 0;
    const bool gamma = t.name.find(".bn.weight") != std::string::npos;
    std::fill(t.values.begin(), t.values.end(), var ? static_cast<float>(1.0 - beatrisk::kBatchNormEps)
                                                    : gamma ? 1.0f : 0.0f);
  }
  auto set = [&](const char* name, std::vector<double> v) {
    auto* t = w.find(name);
    for (std::size_t i = 0; i < v.size(); ++i) t->values[i] = static_cast<float>(v[i]);
  };
  set("stem.conv.weight", {kStemW[0], kStemW[1]});
  set("stem.conv.bias", {kStemB[0], kStemB[1]});
  set("head.weight", {kHeadW[0][0], kHeadW[0][1], kHeadW[1][0], kHeadW[1][1]});
  set("head.bias", {kHeadB[0], kHeadB[1]});
  return w;
}

inline std::vector<float> beat() { return {-1.0f, -0.5f, 0.25f, 1.5f, 0.75f, -0.25f, 0.5f, 2.0f}; }

struct Expected {
  std::array<std::array<double, 4>, 2> v{};  // block output
  std::array<double, 2> w{};                  // gradient, constant over time
  std::array<double, 4> raw{};
  std::array<double, 8> upsampled{};
  std::array<double, 2> probs{};
};

// Written out by hand: stem h = a x + b, swish, pool pairs, mean, softmax,
// dL/dz = p - onehot, dL/du = W^T dL/dz / 4, cam = relu(sum_c v w).
inline Expected expected(const std::vector<float>& x, int target) {
  auto swish = [](double h) { return h / (1.0 + std::exp(-h)); };
  Expected e;
  std::array<double, 2> mean{};
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < 4; ++j) {
      const double s0 = swish(kStemW[c] * x[2 * j] + kStemB[c]);
      const double s1 = swish(kStemW[c] * x[2 * j + 1] + kStemB[c]);
      e.v[c][j] = std::max(s0, s1);
      mean[c] += e.v[c][j] / 4.0;
    }
  }
  const double z0 = kHeadW[0][0] * mean[0] + kHeadW[0][1] * mean[1] + kHeadB[0];
  const double z1 = kHeadW[1][0] * mean[0] + kHeadW[1][1] * mean[1] + kHeadB[1];
  e.probs[1] = 1.0 / (1.0 + std::exp(z0 - z1));
  e.probs[0] = 1.0 - e.probs[1];
  const double g0 = e.probs[0] - (target == 0 ? 1.0 : 0.0);
  const double g1 = e.probs[1] - (target == 1 ? 1.0 : 0.0);
  for (int c = 0; c < 2; ++c) e.w[c] = (kHeadW[0][c] * g0 + kHeadW[1][c] * g1) / 4.0;
  for (int j = 0; j < 4; ++j) e.raw[j] = std::max(0.0, e.v[0][j] * e.w[0] + e.v[1][j] * e.w[1]);
  // Pixel-centre sampling from 4 to 8 points: source = i/2 - 1/4.
  const auto& m = e.raw;
  e.upsampled = {m[0],
                 0.75 * m[0] + 0.25 * m[1],
                 0.25 * m[0] + 0.75 * m[1],
                 0.75 * m[1] + 0.25 * m[2],
                 0.25 * m[1] + 0.75 * m[2],
                 0.75 * m[2] + 0.25 * m[3],
                 0.25 * m[2] + 0.75 * m[3],
                 m[3]};
  const double mx = *std::max_element(e.upsampled.begin(), e.upsampled.end());
  if (mx > 0.0) {
    for (auto& u : e.upsampled) u /= mx;
  }
  return e;
}

}  // namespace tiny_cam
