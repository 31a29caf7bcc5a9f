#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beatrisk/model_weights.hpp"

namespace beatrisk {

/// Dense [batch x channels x length] buffer, row-major.
struct Signal3 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> data;

  Signal3() = default;
  Signal3(std::size_t b, std::size_t c, std::size_t l, double fill = 0.0)
      : batch(b), channels(c), length(l), data(b * c * l, fill) {}

  void reset(std::size_t b, std::size_t c, std::size_t l, double fill = 0.0) {
    batch = b;
    channels = c;
    length = l;
    data.assign(b * c * l, fill);
  }

  double& operator()(std::size_t b, std::size_t c, std::size_t t) {
    return data[(b * channels + c) * length + t];
  }
  double operator()(std::size_t b, std::size_t c, std::size_t t) const {
    return data[(b * channels + c) * length + t];
  }
  double* row(std::size_t b, std::size_t c) { return data.data() + (b * channels + c) * length; }
  const double* row(std::size_t b, std::size_t c) const {
    return data.data() + (b * channels + c) * length;
  }
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class Mode { train, eval };

/// A[a,b,c] = B[a,b,c] * C[a,b]. Throws Error on shape mismatch.
Signal3 se_scale(const Signal3& features, const Matrix& gate);

struct LossValue {
  double value = 0.0;
  double d_probability = 0.0;  // dL/dp; zero where the clamp is active
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Binary cross-entropy on the class-1 probability, clamped to [eps, 1-eps].
LossValue cross_entropy(int label, double probability);
double mean_cross_entropy(std::span<const int> labels, std::span<const double> probabilities);

struct ParameterCount {
  std::size_t trainable = 0;
  std::size_t running = 0;
  std::size_t total() const { return trainable + running; }
};

ParameterCount count_parameters(const ModelWeights& weights);

/// Canonical parameter count of the default configuration, asserted by tests.
inline constexpr std::size_t kDefaultTrainableParameters = 104898;
inline constexpr std::size_t kDefaultRunningStatistics = 3392;

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool trainable = true;
};

// Forward caches. Everything the backward pass and the saliency maps need.
struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> inv_std;
  Signal3 normalized;
};

struct BaseConvCache {
  bool preactivated = false;
  BatchNormCache bn;
  Signal3 bn_out;
  std::vector<double> dropout_scale;  // empty when dropout is the identity
  Signal3 conv_in;
  Signal3 out;
};

struct PoolCache {
  std::size_t in_length = 0;
  std::vector<std::int32_t> argmax;  // -1 marks the zero pad
};

struct SqueezeExciteCache {
  Matrix squeeze, hidden_pre, hidden, gate_pre, gate;
};

struct BlockCache {
  BaseConvCache conv1, conv2, conv3;
  PoolCache main_pool, skip_pool;
  SqueezeExciteCache se;
  Signal3 out;
};

struct StemCache {
  Signal3 input;
  Signal3 conv_out;
  BatchNormCache bn;
  Signal3 bn_out;
  Signal3 out;
};

struct HeadCache {
  std::size_t in_length = 0;
  Matrix pooled, logits, probs;
};

class Net1d;

struct ForwardTrace {
  const Net1d* owner = nullptr;
  std::uint64_t version = 0;
  Mode mode = Mode::eval;
  StemCache stem;
  std::vector<BlockCache> blocks;
  HeadCache head;

  bool empty() const { return owner == nullptr; }
};

struct Gradients {
  std::vector<std::vector<double>> params;  // parallel to Net1d::parameters()
  Signal3 tap;                              // gradient at the requested layer, if any
  double loss = 0.0;
};

/// Residual 1D CNN with squeeze-and-excitation gating.
///
/// Layout: stem conv (k, same padding) -> BN -> swish, then one stage per
/// entry of filter_list. A block is three base-convs (BN -> swish ->
/// dropout -> same-pad -> conv): a 1x1 projection to the stage width, a
/// grouped k-wide conv with groups = width / groups_width, and a 1x1 conv.
/// The first block of the network skips the pre-activation of its first
/// base-conv (the stem already applied it). The first block of every stage
/// max-pools (window 2, stride 2, zero same-padding) after the grouped conv
/// and on the shortcut. Shortcuts are zero-padded (or centre-cropped) to the
/// block width. An SE gate (mean -> fc -> swish -> fc -> sigmoid) scales the
/// block output before the residual sum. Head: mean over time -> linear ->
/// softmax.
///
/// Layer names for saliency taps: "stem", "stage{s}.block{b}" (block output)
/// and "stage{s}.block{b}.conv{1,2,3}" (conv outputs, before pooling).
class Net1d {
 public:
  explicit Net1d(const ModelWeights& weights);

  static Net1d build(const Net1dConfig& config, std::uint64_t seed);

  const Net1dConfig& config() const { return config_; }
  const std::vector<ParamTensor>& parameters() const { return params_; }
  /// Invalidates outstanding traces.
  std::vector<ParamTensor>& mutable_parameters() {
    ++version_;
    return params_;
  }
  std::size_t parameter_index(std::string_view name) const;

  ModelWeights to_weights() const;

  /// Temporal length after the stem and after each stage.
  std::vector<std::size_t> temporal_lengths(std::size_t input_length) const;
  std::vector<std::string> layer_names() const;
  std::string default_cam_layer() const;

  /// Returns [batch x 2] softmax rows. Eval mode is const and thread-safe;
  /// train mode also refreshes batch-norm running statistics.
  Matrix forward(const Signal3& input, Mode mode, ForwardTrace* trace = nullptr,
                 std::uint64_t dropout_seed = 0);
  Matrix predict(const Signal3& input, ForwardTrace* trace = nullptr) const;

  /// Analytic gradients of the mean cross-entropy of the traced batch.
  /// `tap` optionally names a layer whose activation gradient is returned.
  Gradients backward(const ForwardTrace& trace, std::span<const int> labels,
                     std::string_view tap = {}) const;

  /// Activation retained in a trace for the named layer.
  static const Signal3& trace_layer(const Net1d& net, const ForwardTrace& trace,
                                    std::string_view layer);

  struct ConvRef {
    std::size_t weight = 0, bias = 0;
    int in = 0, out = 0, kernel = 1, groups = 1;
  };
  struct BatchNormRef {
    std::size_t gamma = 0, beta = 0, mean = 0, var = 0;
    int channels = 0;
  };
  struct BaseConvRef {
    bool preactivated = true;
    BatchNormRef bn;
    ConvRef conv;
  };
  struct BlockRef {
    std::string name;
    int in = 0, out = 0;
    bool downsample = false;
    BaseConvRef conv1, conv2, conv3;
    std::size_t se_w1 = 0, se_b1 = 0, se_w2 = 0, se_b2 = 0;
    int se_hidden = 0;
  };

 private:
  Net1d() = default;
  void make_layout();
  struct BatchStats;
  Matrix run(const Signal3& input, Mode mode, ForwardTrace& trace, std::uint64_t dropout_seed,
             std::vector<BatchStats>* stats) const;

  Net1dConfig config_;
  std::vector<ParamTensor> params_;
  ConvRef stem_conv_;
  BatchNormRef stem_bn_;
  std::vector<BlockRef> blocks_;
  std::size_t head_w_ = 0, head_b_ = 0;
  std::uint64_t version_ = 0;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Packs equal-length beats into a [n x 1 x L] batch.
Signal3 make_batch(std::span<const std::vector<float>> beats);

}  // namespace beatrisk
