#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beatrisk/net1d.hpp"

namespace beatrisk {

struct CamResult {
  int target_class = 1;
  std::string source_layer;
  std::vector<double> raw_map;        // feature resolution, >= 0
  std::vector<double> upsampled_map;  // beat length, in [0, 1]
  std::vector<double> probabilities;  // eval-mode softmax row of the beat
  Signal3 activations;                // v, [1 x C x T]; kept when requested
  Signal3 gradients;                  // w, same shape
};

/// Gradient-weighted activation map of one beat. `layer` defaults to the
/// last convolution of the final stage. Runs in eval mode; the network is
/// not modified.
CamResult compute_cam(const Net1d& net, std::span<const float> beat, int target_class,
                      std::string_view layer = {}, bool keep_tensors = false);

/// Linear interpolation from the feature grid to `length` points, sampling
/// at pixel centres.
std::vector<double> upsample_linear(std::span<const double> values, std::size_t length);

/// Beat trace coloured by saliency plus a CSV sidecar at `csv_path`
/// (index, sample, saliency, color).
void render_cam(const std::filesystem::path& svg_path, const std::filesystem::path& csv_path,
                std::span<const float> beat, const CamResult& cam);

/// Blue (0) to red (1) ramp; the red channel is nondecreasing in s.
std::string saliency_color(double s);

struct CamCsvRow {
  std::size_t index = 0;
  double sample = 0.0;
  double saliency = 0.0;
  std::string color;
};
std::vector<CamCsvRow> load_cam_csv(const std::filesystem::path& path);

}  // namespace beatrisk
