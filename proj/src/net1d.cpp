#include "beatrisk/net1d.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "beatrisk/error.hpp"
#include "beatrisk/rng.hpp"

namespace beatrisk {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double swish(double x) { return x * sigmoid(x); }

double swish_grad(double x) {
  const double s = sigmoid(x);
  return s + x * s * (1.0 - s);
}

std::ptrdiff_t floor_half(std::ptrdiff_t v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

using ParamList = std::vector<ParamTensor>;

// ---------------------------------------------------------------------------
// Convolution with same padding (left = (k-1)/2), stride 1, grouped.
// ---------------------------------------------------------------------------

// Pointwise conv over a [C x (B*T)] view, so short sequences still give long
// inner loops. Columns are processed in cache-sized tiles. Per-element
// summation order matches the general path.
void pointwise_forward(const Signal3& in, const double* w, const double* bias, int cout, Signal3& out) {
  constexpr std::size_t kTile = 256;
  const std::size_t B = in.batch, C = in.channels, T = in.length, N = B * T;
  thread_local std::vector<double> x, y;
  x.resize(C * N);
  y.resize(static_cast<std::size_t>(cout) * N);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) std::copy_n(in.row(b, c), T, x.data() + c * N + b * T);
  }
  for (std::size_t n0 = 0; n0 < N; n0 += kTile) {
    const std::size_t n1 = std::min(N, n0 + kTile);
    for (int o = 0; o < cout; ++o) {
      double* acc = y.data() + static_cast<std::size_t>(o) * N;
      std::fill(acc + n0, acc + n1, bias[o]);
      const double* wr = w + static_cast<std::size_t>(o) * C;
      for (std::size_t c = 0; c < C; ++c) {
        const double wc = wr[c];
        const double* src = x.data() + c * N;
        for (std::size_t n = n0; n < n1; ++n) acc[n] += wc * src[n];
      }
    }
  }
  out.reset(B, static_cast<std::size_t>(cout), T);
  for (std::size_t b = 0; b < B; ++b) {
    for (int o = 0; o < cout; ++o) {
      std::copy_n(y.data() + static_cast<std::size_t>(o) * N + b * T, T, out.row(b, static_cast<std::size_t>(o)));
    }
  }
}

void conv_forward(const Signal3& in, const ParamList& p, const Net1d::ConvRef& ref, Signal3& out) {
  if (ref.kernel == 1 && ref.groups == 1 && in.batch > 1) {
    pointwise_forward(in, p[ref.weight].values.data(), p[ref.bias].values.data(), ref.out, out);
    return;
  }
  const auto T = static_cast<std::ptrdiff_t>(in.length);
  const int cin_g = ref.in / ref.groups;
  const int cout_g = ref.out / ref.groups;
  const int K = ref.kernel;
  const std::ptrdiff_t pad = (K - 1) / 2;
  const double* w = p[ref.weight].values.data();
  const double* bias = p[ref.bias].values.data();
  out.reset(in.batch, static_cast<std::size_t>(ref.out), in.length);
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (int o = 0; o < ref.out; ++o) {
      const int g = o / cout_g;
      double* dst = out.row(b, static_cast<std::size_t>(o));
      std::fill(dst, dst + T, bias[o]);
      for (int ci = 0; ci < cin_g; ++ci) {
        const double* src = in.row(b, static_cast<std::size_t>(g * cin_g + ci));
        const double* wr = w + (static_cast<std::size_t>(o) * cin_g + ci) * K;
        for (int j = 0; j < K; ++j) {
          const std::ptrdiff_t shift = j - pad;
          const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(T, T - shift);
          const double wj = wr[j];
          for (std::ptrdiff_t t = t0; t < t1; ++t) dst[t] += wj * src[t + shift];
        }
      }
    }
  }
}

void conv_backward(const Signal3& in, const Signal3& dout, const ParamList& p,
                   const Net1d::ConvRef& ref, std::vector<double>& dw, std::vector<double>& db,
                   Signal3* din) {
  const auto T = static_cast<std::ptrdiff_t>(in.length);
  const int cin_g = ref.in / ref.groups;
  const int cout_g = ref.out / ref.groups;
  const int K = ref.kernel;
  const std::ptrdiff_t pad = (K - 1) / 2;
  const double* w = p[ref.weight].values.data();
  if (din) din->reset(in.batch, in.channels, in.length);
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (int o = 0; o < ref.out; ++o) {
      const int g = o / cout_g;
      const double* go = dout.row(b, static_cast<std::size_t>(o));
      double bias_acc = 0.0;
      for (std::ptrdiff_t t = 0; t < T; ++t) bias_acc += go[t];
      db[static_cast<std::size_t>(o)] += bias_acc;
      for (int ci = 0; ci < cin_g; ++ci) {
        const auto c = static_cast<std::size_t>(g * cin_g + ci);
        const double* src = in.row(b, c);
        const std::size_t woff = (static_cast<std::size_t>(o) * cin_g + ci) * K;
        double* gi = din ? din->row(b, c) : nullptr;
        for (int j = 0; j < K; ++j) {
          const std::ptrdiff_t shift = j - pad;
          const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(T, T - shift);
          double acc = 0.0;
          for (std::ptrdiff_t t = t0; t < t1; ++t) acc += go[t] * src[t + shift];
          dw[woff + j] += acc;
          if (gi) {
            const double wj = w[woff + j];
            for (std::ptrdiff_t t = t0; t < t1; ++t) gi[t + shift] += go[t] * wj;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Batch norm over (batch, time) per channel.
// ---------------------------------------------------------------------------

void bn_forward(const Signal3& x, const ParamList& p, const Net1d::BatchNormRef& ref, Mode mode,
                BatchNormCache& cache, Signal3& y, std::vector<double>* unbiased_var) {
  const std::size_t C = x.channels;
  const std::size_t T = x.length;
  const double n = static_cast<double>(x.batch * T);
  const auto& gamma = p[ref.gamma].values;
  const auto& beta = p[ref.beta].values;
  cache.mean.assign(C, 0.0);
  cache.inv_std.assign(C, 0.0);
  cache.normalized.reset(x.batch, C, T);
  y.reset(x.batch, C, T);
  if (unbiased_var) unbiased_var->assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::train) {
      for (std::size_t b = 0; b < x.batch; ++b) {
        const double* r = x.row(b, c);
        for (std::size_t t = 0; t < T; ++t) mean += r[t];
      }
      mean /= n;
      for (std::size_t b = 0; b < x.batch; ++b) {
        const double* r = x.row(b, c);
        for (std::size_t t = 0; t < T; ++t) var += (r[t] - mean) * (r[t] - mean);
      }
      var /= n;
      if (unbiased_var) (*unbiased_var)[c] = n > 1.0 ? var * n / (n - 1.0) : var;
    } else {
      mean = p[ref.mean].values[c];
      var = p[ref.var].values[c];
    }
    const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
    cache.mean[c] = mean;
    cache.inv_std[c] = inv;
    for (std::size_t b = 0; b < x.batch; ++b) {
      const double* r = x.row(b, c);
      double* xh = cache.normalized.row(b, c);
      double* out = y.row(b, c);
      for (std::size_t t = 0; t < T; ++t) {
        xh[t] = (r[t] - mean) * inv;
        out[t] = gamma[c] * xh[t] + beta[c];
      }
    }
  }
}

void bn_backward(const Signal3& dy, const BatchNormCache& cache, const ParamList& p,
                 const Net1d::BatchNormRef& ref, Mode mode, std::vector<double>& dgamma,
                 std::vector<double>& dbeta, Signal3& dx) {
  const std::size_t C = dy.channels;
  const std::size_t T = dy.length;
  const double n = static_cast<double>(dy.batch * T);
  const auto& gamma = p[ref.gamma].values;
  dx.reset(dy.batch, C, T);
  for (std::size_t c = 0; c < C; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < dy.batch; ++b) {
      const double* g = dy.row(b, c);
      const double* xh = cache.normalized.row(b, c);
      for (std::size_t t = 0; t < T; ++t) {
        sum_dy += g[t];
        sum_dy_xhat += g[t] * xh[t];
      }
    }
    dgamma[c] += sum_dy_xhat;
    dbeta[c] += sum_dy;
    const double inv = cache.inv_std[c];
    for (std::size_t b = 0; b < dy.batch; ++b) {
      const double* g = dy.row(b, c);
      const double* xh = cache.normalized.row(b, c);
      double* out = dx.row(b, c);
      if (mode == Mode::train) {
        const double k = gamma[c] * inv / n;
        for (std::size_t t = 0; t < T; ++t) out[t] = k * (n * g[t] - sum_dy - xh[t] * sum_dy_xhat);
      } else {
        const double k = gamma[c] * inv;
        for (std::size_t t = 0; t < T; ++t) out[t] = k * g[t];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Max pool, window 2 stride 2, one zero appended to odd lengths.
// ---------------------------------------------------------------------------

void pool_forward(const Signal3& x, PoolCache& cache, Signal3& y) {
  const std::size_t T = x.length;
  const std::size_t To = (T + 1) / 2;
  y.reset(x.batch, x.channels, To);
  cache.in_length = T;
  cache.argmax.assign(x.batch * x.channels * To, -1);
  std::size_t k = 0;
  for (std::size_t b = 0; b < x.batch; ++b) {
    for (std::size_t c = 0; c < x.channels; ++c) {
      const double* r = x.row(b, c);
      double* out = y.row(b, c);
      for (std::size_t t = 0; t < To; ++t, ++k) {
        const std::size_t i0 = 2 * t;
        const std::size_t i1 = i0 + 1;
        const double v0 = r[i0];
        const double v1 = i1 < T ? r[i1] : 0.0;
        if (v0 >= v1) {
          out[t] = v0;
          cache.argmax[k] = static_cast<std::int32_t>(i0);
        } else {
          out[t] = v1;
          cache.argmax[k] = i1 < T ? static_cast<std::int32_t>(i1) : -1;
        }
      }
    }
  }
}

Signal3 pool_backward(const Signal3& dy, const PoolCache& cache) {
  Signal3 dx(dy.batch, dy.channels, cache.in_length);
  std::size_t k = 0;
  for (std::size_t b = 0; b < dy.batch; ++b) {
    for (std::size_t c = 0; c < dy.channels; ++c) {
      const double* g = dy.row(b, c);
      double* out = dx.row(b, c);
      for (std::size_t t = 0; t < dy.length; ++t, ++k) {
        if (cache.argmax[k] >= 0) out[cache.argmax[k]] += g[t];
      }
    }
  }
  return dx;
}

// Output channel c reads input channel c - offset, offset = floor((out - in) / 2).
Signal3 shift_channels(const Signal3& x, int out_channels) {
  if (static_cast<int>(x.channels) == out_channels) return x;
  const std::ptrdiff_t offset =
      floor_half(static_cast<std::ptrdiff_t>(out_channels) - static_cast<std::ptrdiff_t>(x.channels));
  Signal3 y(x.batch, static_cast<std::size_t>(out_channels), x.length);
  for (std::size_t b = 0; b < x.batch; ++b) {
    for (int c = 0; c < out_channels; ++c) {
      const std::ptrdiff_t src = c - offset;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(x.channels)) continue;
      std::copy_n(x.row(b, static_cast<std::size_t>(src)), x.length, y.row(b, static_cast<std::size_t>(c)));
    }
  }
  return y;
}

Signal3 unshift_channels(const Signal3& dy, int in_channels) {
  if (static_cast<int>(dy.channels) == in_channels) return dy;
  const std::ptrdiff_t offset =
      floor_half(static_cast<std::ptrdiff_t>(dy.channels) - static_cast<std::ptrdiff_t>(in_channels));
  Signal3 dx(dy.batch, static_cast<std::size_t>(in_channels), dy.length);
  for (std::size_t b = 0; b < dy.batch; ++b) {
    for (std::size_t c = 0; c < dy.channels; ++c) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(c) - offset;
      if (src < 0 || src >= in_channels) continue;
      std::copy_n(dy.row(b, c), dy.length, dx.row(b, static_cast<std::size_t>(src)));
    }
  }
  return dx;
}

void add_into(Signal3& acc, const Signal3& x) {
  for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += x.data[i];
}

enum class TapKind { none, stem, block_out, conv1, conv2, conv3 };

struct TapRef {
  TapKind kind = TapKind::none;
  std::size_t block = 0;
};

}  // namespace

struct Net1d::BatchStats {
  const BatchNormRef* ref = nullptr;
  std::vector<double> mean;
  std::vector<double> var;
};

// ---------------------------------------------------------------------------

Signal3 se_scale(const Signal3& features, const Matrix& gate) {
  if (gate.rows != features.batch || gate.cols != features.channels) {
    std::ostringstream os;
    os << "se_scale shape mismatch: features (" << features.batch << "," << features.channels << ","
       << features.length << ") vs gate (" << gate.rows << "," << gate.cols << ")";
    throw Error(os.str());
  }
  Signal3 out(features.batch, features.channels, features.length);
  for (std::size_t a = 0; a < features.batch; ++a) {
    for (std::size_t b = 0; b < features.channels; ++b) {
      const double g = gate(a, b);
      const double* src = features.row(a, b);
      double* dst = out.row(a, b);
      for (std::size_t c = 0; c < features.length; ++c) dst[c] = src[c] * g;
    }
  }
  return out;
}

LossValue cross_entropy(int label, double probability) {
  const bool clamped = probability < kProbabilityClamp || probability > 1.0 - kProbabilityClamp;
  const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const double y = label ? 1.0 : 0.0;
  LossValue out;
  // y*log(p) with y == 0 contributes nothing; skipping it keeps L == 0 exact at p == y.
  double v = 0.0;
  if (y > 0.0) v -= std::log(p);
  if (y < 1.0) v -= std::log1p(-p);
  out.value = probability == y ? 0.0 : v;
  out.d_probability = clamped ? 0.0 : -y / p + (1.0 - y) / (1.0 - p);
  return out;
}

double mean_cross_entropy(std::span<const int> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size()) throw Error("label/probability count mismatch");
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) sum += cross_entropy(labels[i], probabilities[i]).value;
  return sum / static_cast<double>(labels.size());
}

ParameterCount count_parameters(const ModelWeights& weights) {
  ParameterCount out;
  for (const auto& t : weights.tensors) {
    const std::size_t n = t.element_count();
    if (ends_with(t.name, "running_mean") || ends_with(t.name, "running_var")) {
      out.running += n;
    } else {
      out.trainable += n;
    }
  }
  return out;
}

Signal3 make_batch(std::span<const std::vector<float>> beats) {
  if (beats.empty()) return Signal3(0, 1, 0);
  const std::size_t L = beats.front().size();
  Signal3 out(beats.size(), 1, L);
  for (std::size_t i = 0; i < beats.size(); ++i) {
    if (beats[i].size() != L) throw Error("beats in a batch must share one length");
    std::copy(beats[i].begin(), beats[i].end(), out.row(i, 0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

void Net1d::make_layout() {
  validate(config_);
  params_.clear();
  blocks_.clear();
  auto add = [this](std::string name, std::vector<std::size_t> shape, bool trainable = true) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    params_.push_back(ParamTensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0), trainable});
    return params_.size() - 1;
  };
  auto add_bn = [&](const std::string& prefix, int channels) {
    const auto c = static_cast<std::size_t>(channels);
    BatchNormRef ref;
    ref.channels = channels;
    ref.gamma = add(prefix + ".bn.weight", {c});
    ref.beta = add(prefix + ".bn.bias", {c});
    ref.mean = add(prefix + ".bn.running_mean", {c}, false);
    ref.var = add(prefix + ".bn.running_var", {c}, false);
    return ref;
  };
  auto add_conv = [&](const std::string& prefix, int in, int out, int kernel, int groups) {
    ConvRef ref;
    ref.in = in;
    ref.out = out;
    ref.kernel = kernel;
    ref.groups = groups;
    ref.weight = add(prefix + ".weight", {static_cast<std::size_t>(out),
                                          static_cast<std::size_t>(in / groups),
                                          static_cast<std::size_t>(kernel)});
    ref.bias = add(prefix + ".bias", {static_cast<std::size_t>(out)});
    return ref;
  };

  stem_conv_ = add_conv("stem.conv", config_.in_channels, config_.base_filters, config_.kernel_size, 1);
  stem_bn_ = add_bn("stem", config_.base_filters);

  int in = config_.base_filters;
  for (std::size_t s = 0; s < config_.filter_list.size(); ++s) {
    const int out = config_.filter_list[s];
    for (int b = 0; b < config_.block_list[s]; ++b) {
      BlockRef block;
      block.name = "stage" + std::to_string(s) + ".block" + std::to_string(b);
      block.in = b == 0 ? in : out;
      block.out = out;
      block.downsample = b == 0;
      const bool very_first = s == 0 && b == 0;
      const std::string& pre = block.name;

      block.conv1.preactivated = !very_first;
      if (block.conv1.preactivated) block.conv1.bn = add_bn(pre + ".conv1", block.in);
      block.conv1.conv = add_conv(pre + ".conv1", block.in, out, 1, 1);

      block.conv2.bn = add_bn(pre + ".conv2", out);
      block.conv2.conv = add_conv(pre + ".conv2", out, out, config_.kernel_size, out / config_.groups_width);

      block.conv3.bn = add_bn(pre + ".conv3", out);
      block.conv3.conv = add_conv(pre + ".conv3", out, out, 1, 1);

      block.se_hidden = out / config_.se_reduction;
      const auto h = static_cast<std::size_t>(block.se_hidden);
      const auto c = static_cast<std::size_t>(out);
      block.se_w1 = add(pre + ".se.fc1.weight", {h, c});
      block.se_b1 = add(pre + ".se.fc1.bias", {h});
      block.se_w2 = add(pre + ".se.fc2.weight", {c, h});
      block.se_b2 = add(pre + ".se.fc2.bias", {c});
      blocks_.push_back(std::move(block));
    }
    in = out;
  }
  head_w_ = add("head.weight", {static_cast<std::size_t>(config_.n_classes), static_cast<std::size_t>(in)});
  head_b_ = add("head.bias", {static_cast<std::size_t>(config_.n_classes)});
}

Net1d Net1d::build(const Net1dConfig& config, std::uint64_t seed) {
  Net1d net;
  net.config_ = config;
  net.make_layout();
  Rng rng(seed);
  for (auto& t : net.params_) {
    const std::string_view name = t.name;
    if (ends_with(name, "running_var") || (name.find(".bn.") != std::string_view::npos && ends_with(name, ".weight"))) {
      std::fill(t.values.begin(), t.values.end(), 1.0);
    } else if (ends_with(name, ".weight")) {
      double fan_in = 0.0;
      double fan_out = 0.0;
      if (t.shape.size() == 3) {
        fan_in = static_cast<double>(t.shape[1] * t.shape[2]);
        fan_out = static_cast<double>(t.shape[0] * t.shape[2]);
      } else {
        fan_in = static_cast<double>(t.shape[1]);
        fan_out = static_cast<double>(t.shape[0]);
      }
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : t.values) v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
    }
  }
  return net;
}

Net1d::Net1d(const ModelWeights& weights) {
  validate(weights);
  config_ = weights.config;
  make_layout();
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& t : weights.tensors) by_name.emplace(t.name, &t);
  if (by_name.size() != params_.size()) {
    std::ostringstream os;
    os << "weights hold " << by_name.size() << " tensors, architecture expects " << params_.size();
    throw Error(os.str());
  }
  for (auto& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw Error("weights missing tensor " + p.name);
    if (it->second->shape != p.shape) throw Error("shape mismatch for tensor " + p.name);
    std::copy(it->second->values.begin(), it->second->values.end(), p.values.begin());
  }
}

std::size_t Net1d::parameter_index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw Error("unknown parameter " + std::string(name));
}

ModelWeights Net1d::to_weights() const {
  ModelWeights w;
  w.config = config_;
  w.tensors.reserve(params_.size());
  for (const auto& p : params_) {
    NamedTensor t;
    t.name = p.name;
    t.shape = p.shape;
    t.values.assign(p.values.begin(), p.values.end());
    w.tensors.push_back(std::move(t));
  }
  return w;
}

std::vector<std::size_t> Net1d::temporal_lengths(std::size_t input_length) const {
  std::vector<std::size_t> out{input_length};
  std::size_t t = input_length;
  for (std::size_t s = 0; s < config_.filter_list.size(); ++s) {
    if (config_.block_list[s] > 0) t = (t + 1) / 2;
    out.push_back(t);
  }
  return out;
}

std::vector<std::string> Net1d::layer_names() const {
  std::vector<std::string> out{"stem"};
  for (const auto& b : blocks_) {
    out.push_back(b.name + ".conv1");
    out.push_back(b.name + ".conv2");
    out.push_back(b.name + ".conv3");
    out.push_back(b.name);
  }
  return out;
}

std::string Net1d::default_cam_layer() const {
  if (blocks_.empty()) return "stem";
  return blocks_.back().name + ".conv3";
}

namespace {

TapRef resolve_tap(const std::vector<Net1d::BlockRef>& blocks, std::string_view name) {
  if (name.empty()) return {};
  if (name == "stem") return {TapKind::stem, 0};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string& bn = blocks[i].name;
    if (name == bn) return {TapKind::block_out, i};
    if (name.size() == bn.size() + 6 && name.substr(0, bn.size()) == bn) {
      const auto suffix = name.substr(bn.size());
      if (suffix == ".conv1") return {TapKind::conv1, i};
      if (suffix == ".conv2") return {TapKind::conv2, i};
      if (suffix == ".conv3") return {TapKind::conv3, i};
    }
  }
  throw Error("unknown layer name: " + std::string(name));
}

void base_conv_forward(const Signal3& x, const ParamList& p, const Net1d::BaseConvRef& ref, Mode mode,
                       double dropout, Rng* rng, BaseConvCache& cache, std::vector<double>* unbiased_var) {
  cache.preactivated = ref.preactivated;
  cache.dropout_scale.clear();
  if (!ref.preactivated) {
    cache.conv_in = x;
  } else {
    bn_forward(x, p, ref.bn, mode, cache.bn, cache.bn_out, unbiased_var);
    cache.conv_in.reset(x.batch, x.channels, x.length);
    for (std::size_t i = 0; i < cache.bn_out.data.size(); ++i) cache.conv_in.data[i] = swish(cache.bn_out.data[i]);
    if (mode == Mode::train && dropout > 0.0) {
      const double keep_scale = 1.0 / (1.0 - dropout);
      cache.dropout_scale.resize(cache.conv_in.data.size());
      for (std::size_t i = 0; i < cache.dropout_scale.size(); ++i) {
        cache.dropout_scale[i] = rng->uniform() < dropout ? 0.0 : keep_scale;
        cache.conv_in.data[i] *= cache.dropout_scale[i];
      }
    }
  }
  conv_forward(cache.conv_in, p, ref.conv, cache.out);
}

void base_conv_backward(const Signal3& dout, const BaseConvCache& cache, const ParamList& p,
                        const Net1d::BaseConvRef& ref, Mode mode, std::vector<std::vector<double>>& g,
                        Signal3& dx) {
  Signal3 du;
  conv_backward(cache.conv_in, dout, p, ref.conv, g[ref.conv.weight], g[ref.conv.bias], &du);
  if (!cache.preactivated) {
    dx = std::move(du);
    return;
  }
  for (std::size_t i = 0; i < du.data.size(); ++i) {
    double v = du.data[i];
    if (!cache.dropout_scale.empty()) v *= cache.dropout_scale[i];
    du.data[i] = v * swish_grad(cache.bn_out.data[i]);
  }
  bn_backward(du, cache.bn, p, ref.bn, mode, g[ref.bn.gamma], g[ref.bn.beta], dx);
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

Matrix Net1d::run(const Signal3& input, Mode mode, ForwardTrace& trace, std::uint64_t dropout_seed,
                  std::vector<BatchStats>* stats) const {
  if (input.channels != static_cast<std::size_t>(config_.in_channels)) {
    std::ostringstream os;
    os << "input has " << input.channels << " channels, model expects " << config_.in_channels;
    throw Error(os.str());
  }
  if (input.length == 0) throw Error("input length must be positive");
  if (input.data.size() != input.batch * input.channels * input.length) throw Error("input buffer size mismatch");

  trace.owner = this;
  trace.version = version_;
  trace.mode = mode;
  trace.blocks.resize(blocks_.size());
  Rng rng(dropout_seed);
  const double dropout = config_.dropout_rate;

  auto record = [&](const BatchNormRef& ref, const BatchNormCache& cache, std::vector<double>&& var) {
    if (stats && mode == Mode::train) stats->push_back(BatchStats{&ref, cache.mean, std::move(var)});
  };

  // Stem.
  StemCache& stem = trace.stem;
  stem.input = input;
  conv_forward(input, params_, stem_conv_, stem.conv_out);
  {
    std::vector<double> var;
    bn_forward(stem.conv_out, params_, stem_bn_, mode, stem.bn, stem.bn_out, &var);
    record(stem_bn_, stem.bn, std::move(var));
  }
  stem.out.reset(stem.bn_out.batch, stem.bn_out.channels, stem.bn_out.length);
  for (std::size_t i = 0; i < stem.out.data.size(); ++i) stem.out.data[i] = swish(stem.bn_out.data[i]);

  const Signal3* x = &stem.out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const BlockRef& ref = blocks_[i];
    BlockCache& bc = trace.blocks[i];
    std::vector<double> var;

    base_conv_forward(*x, params_, ref.conv1, mode, dropout, &rng, bc.conv1, &var);
    if (ref.conv1.preactivated) record(ref.conv1.bn, bc.conv1.bn, std::move(var));

    base_conv_forward(bc.conv1.out, params_, ref.conv2, mode, dropout, &rng, bc.conv2, &var);
    record(ref.conv2.bn, bc.conv2.bn, std::move(var));

    Signal3 pooled;
    if (ref.downsample) pool_forward(bc.conv2.out, bc.main_pool, pooled);
    const Signal3& conv3_in = ref.downsample ? pooled : bc.conv2.out;
    base_conv_forward(conv3_in, params_, ref.conv3, mode, dropout, &rng, bc.conv3, &var);
    record(ref.conv3.bn, bc.conv3.bn, std::move(var));

    // Squeeze and excite.
    const Signal3& h3 = bc.conv3.out;
    const std::size_t B = h3.batch;
    const std::size_t C = h3.channels;
    const auto H = static_cast<std::size_t>(ref.se_hidden);
    SqueezeExciteCache& se = bc.se;
    se.squeeze = Matrix(B, C);
    se.hidden_pre = Matrix(B, H);
    se.hidden = Matrix(B, H);
    se.gate_pre = Matrix(B, C);
    se.gate = Matrix(B, C);
    const auto& w1 = params_[ref.se_w1].values;
    const auto& b1 = params_[ref.se_b1].values;
    const auto& w2 = params_[ref.se_w2].values;
    const auto& b2 = params_[ref.se_b2].values;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        const double* r = h3.row(b, c);
        double s = 0.0;
        for (std::size_t t = 0; t < h3.length; ++t) s += r[t];
        se.squeeze(b, c) = s / static_cast<double>(h3.length);
      }
      for (std::size_t h = 0; h < H; ++h) {
        double z = b1[h];
        for (std::size_t c = 0; c < C; ++c) z += w1[h * C + c] * se.squeeze(b, c);
        se.hidden_pre(b, h) = z;
        se.hidden(b, h) = swish(z);
      }
      for (std::size_t c = 0; c < C; ++c) {
        double z = b2[c];
        for (std::size_t h = 0; h < H; ++h) z += w2[c * H + h] * se.hidden(b, h);
        se.gate_pre(b, c) = z;
        se.gate(b, c) = sigmoid(z);
      }
    }
    bc.out = se_scale(h3, se.gate);

    // Shortcut.
    Signal3 skip;
    if (ref.downsample) {
      pool_forward(*x, bc.skip_pool, skip);
    } else {
      skip = *x;
    }
    add_into(bc.out, shift_channels(skip, ref.out));
    x = &bc.out;
  }

  // Head.
  HeadCache& head = trace.head;
  const std::size_t B = x->batch;
  const std::size_t C = x->channels;
  const auto K = static_cast<std::size_t>(config_.n_classes);
  head.in_length = x->length;
  head.pooled = Matrix(B, C);
  head.logits = Matrix(B, K);
  head.probs = Matrix(B, K);
  const auto& hw = params_[head_w_].values;
  const auto& hb = params_[head_b_].values;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* r = x->row(b, c);
      double s = 0.0;
      for (std::size_t t = 0; t < x->length; ++t) s += r[t];
      head.pooled(b, c) = s / static_cast<double>(x->length);
    }
    double mx = -INFINITY;
    for (std::size_t k = 0; k < K; ++k) {
      double z = hb[k];
      for (std::size_t c = 0; c < C; ++c) z += hw[k * C + c] * head.pooled(b, c);
      head.logits(b, k) = z;
      mx = std::max(mx, z);
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      head.probs(b, k) = std::exp(head.logits(b, k) - mx);
      denom += head.probs(b, k);
    }
    for (std::size_t k = 0; k < K; ++k) head.probs(b, k) /= denom;
  }
  return head.probs;
}

Matrix Net1d::predict(const Signal3& input, ForwardTrace* trace) const {
  thread_local ForwardTrace workspace;
  return run(input, Mode::eval, trace ? *trace : workspace, 0, nullptr);
}

Matrix Net1d::forward(const Signal3& input, Mode mode, ForwardTrace* trace, std::uint64_t dropout_seed) {
  if (mode == Mode::eval) return predict(input, trace);
  thread_local ForwardTrace workspace;
  ForwardTrace& t = trace ? *trace : workspace;
  std::vector<BatchStats> stats;
  Matrix probs = run(input, mode, t, dropout_seed, &stats);
  for (const auto& s : stats) {
    auto& rm = params_[s.ref->mean].values;
    auto& rv = params_[s.ref->var].values;
    for (std::size_t c = 0; c < rm.size(); ++c) {
      rm[c] = (1.0 - kBatchNormMomentum) * rm[c] + kBatchNormMomentum * s.mean[c];
      rv[c] = (1.0 - kBatchNormMomentum) * rv[c] + kBatchNormMomentum * s.var[c];
    }
  }
  return probs;
}

const Signal3& Net1d::trace_layer(const Net1d& net, const ForwardTrace& trace, std::string_view layer) {
  if (trace.empty()) throw Error("trace missing: run a forward pass with tracing first");
  const TapRef tap = resolve_tap(net.blocks_, layer);
  switch (tap.kind) {
    case TapKind::stem:
      return trace.stem.out;
    case TapKind::block_out:
      return trace.blocks[tap.block].out;
    case TapKind::conv1:
      return trace.blocks[tap.block].conv1.out;
    case TapKind::conv2:
      return trace.blocks[tap.block].conv2.out;
    case TapKind::conv3:
      return trace.blocks[tap.block].conv3.out;
    case TapKind::none:
      break;
  }
  throw Error("layer name required");
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

Gradients Net1d::backward(const ForwardTrace& trace, std::span<const int> labels, std::string_view tap_name) const {
  if (trace.empty()) throw Error("trace missing: backward needs a traced forward pass");
  if (trace.owner != this || trace.version != version_) throw Error("stale trace: parameters changed since the forward pass");
  const HeadCache& head = trace.head;
  const std::size_t B = head.probs.rows;
  if (labels.size() != B) throw Error("label count does not match the traced batch");
  const TapRef tap = resolve_tap(blocks_, tap_name);
  const Mode mode = trace.mode;

  Gradients out;
  out.params.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) out.params[i].assign(params_[i].values.size(), 0.0);
  auto& g = out.params;

  // Loss and head.
  const std::size_t C = head.pooled.cols;
  const auto K = static_cast<std::size_t>(config_.n_classes);
  const auto& hw = params_[head_w_].values;
  Signal3 dx(B, C, head.in_length);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double p1 = head.probs(b, 1);
    const double p0 = head.probs(b, 0);
    const LossValue lv = cross_entropy(labels[b], p1);
    loss += lv.value;
    const double dp = lv.d_probability / static_cast<double>(B);
    const double dz1 = dp * p1 * p0;
    const double dz[2] = {-dz1, dz1};
    for (std::size_t k = 0; k < K; ++k) {
      g[head_b_][k] += dz[k];
      for (std::size_t c = 0; c < C; ++c) g[head_w_][k * C + c] += dz[k] * head.pooled(b, c);
    }
    for (std::size_t c = 0; c < C; ++c) {
      double dpool = 0.0;
      for (std::size_t k = 0; k < K; ++k) dpool += hw[k * C + c] * dz[k];
      double* r = dx.row(b, c);
      const double v = dpool / static_cast<double>(head.in_length);
      for (std::size_t t = 0; t < head.in_length; ++t) r[t] = v;
    }
  }
  out.loss = B ? loss / static_cast<double>(B) : 0.0;

  // Blocks, last to first. dx holds the gradient at the current block output.
  for (std::size_t ii = blocks_.size(); ii-- > 0;) {
    const BlockRef& ref = blocks_[ii];
    const BlockCache& bc = trace.blocks[ii];
    if (tap.kind == TapKind::block_out && tap.block == ii) out.tap = dx;

    const Signal3& h3 = bc.conv3.out;
    const SqueezeExciteCache& se = bc.se;
    const std::size_t Cb = h3.channels;
    const auto H = static_cast<std::size_t>(ref.se_hidden);
    const std::size_t T = h3.length;
    const auto& w1 = params_[ref.se_w1].values;
    const auto& w2 = params_[ref.se_w2].values;

    Signal3 dh3(B, Cb, T);
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<double> dgate_pre(Cb, 0.0);
      for (std::size_t c = 0; c < Cb; ++c) {
        const double* go = dx.row(b, c);
        const double* hv = h3.row(b, c);
        double* gh = dh3.row(b, c);
        const double gate = se.gate(b, c);
        double dgate = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          dgate += go[t] * hv[t];
          gh[t] = go[t] * gate;
        }
        dgate_pre[c] = dgate * gate * (1.0 - gate);
        g[ref.se_b2][c] += dgate_pre[c];
      }
      std::vector<double> dhidden_pre(H, 0.0);
      for (std::size_t h = 0; h < H; ++h) {
        double dh = 0.0;
        for (std::size_t c = 0; c < Cb; ++c) {
          g[ref.se_w2][c * H + h] += dgate_pre[c] * se.hidden(b, h);
          dh += w2[c * H + h] * dgate_pre[c];
        }
        dhidden_pre[h] = dh * swish_grad(se.hidden_pre(b, h));
        g[ref.se_b1][h] += dhidden_pre[h];
      }
      for (std::size_t c = 0; c < Cb; ++c) {
        double ds = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
          g[ref.se_w1][h * Cb + c] += dhidden_pre[h] * se.squeeze(b, c);
          ds += w1[h * Cb + c] * dhidden_pre[h];
        }
        const double v = ds / static_cast<double>(T);
        double* gh = dh3.row(b, c);
        for (std::size_t t = 0; t < T; ++t) gh[t] += v;
      }
    }
    if (tap.kind == TapKind::conv3 && tap.block == ii) out.tap = dh3;

    Signal3 dpooled;
    base_conv_backward(dh3, bc.conv3, params_, ref.conv3, mode, g, dpooled);
    Signal3 dh2 = ref.downsample ? pool_backward(dpooled, bc.main_pool) : std::move(dpooled);
    if (tap.kind == TapKind::conv2 && tap.block == ii) out.tap = dh2;

    Signal3 dh1;
    base_conv_backward(dh2, bc.conv2, params_, ref.conv2, mode, g, dh1);
    if (tap.kind == TapKind::conv1 && tap.block == ii) out.tap = dh1;

    Signal3 dxin;
    base_conv_backward(dh1, bc.conv1, params_, ref.conv1, mode, g, dxin);

    Signal3 dskip = unshift_channels(dx, ref.in);
    if (ref.downsample) dskip = pool_backward(dskip, bc.skip_pool);
    add_into(dxin, dskip);
    dx = std::move(dxin);
  }

  // Stem.
  const StemCache& stem = trace.stem;
  if (tap.kind == TapKind::stem) out.tap = dx;
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= swish_grad(stem.bn_out.data[i]);
  Signal3 dconv;
  bn_backward(dx, stem.bn, params_, stem_bn_, mode, g[stem_bn_.gamma], g[stem_bn_.beta], dconv);
  conv_backward(stem.input, dconv, params_, stem_conv_, g[stem_conv_.weight], g[stem_conv_.bias], nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// Config / weights validation
// ---------------------------------------------------------------------------

void validate(const Net1dConfig& c) {
  auto fail = [](const std::string& msg) { throw Error("invalid Net1d config: " + msg); };
  if (c.in_channels < 1) fail("in_channels must be >= 1");
  if (c.base_filters < 1) fail("base_filters must be >= 1");
  if (!(c.ratio > 0.0)) fail("ratio must be positive");
  if (c.filter_list.empty()) fail("filter_list is empty");
  if (c.filter_list.size() != c.block_list.size()) fail("filter_list and block_list lengths differ");
  if (c.kernel_size < 1) fail("kernel_size must be >= 1");
  if (c.stride != 1) fail("only stride 1 is supported");
  if (c.groups_width < 1) fail("groups_width must be >= 1");
  if (c.n_classes != 2) fail("n_classes must be 2");
  if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
  if (c.se_reduction < 1) fail("se_reduction must be >= 1");
  for (std::size_t i = 0; i < c.filter_list.size(); ++i) {
    const int f = c.filter_list[i];
    if (f < 1) fail("filter counts must be positive");
    if (f % c.groups_width != 0) {
      fail("filter count " + std::to_string(f) + " not divisible by groups_width " + std::to_string(c.groups_width));
    }
    if (f / c.se_reduction < 1) fail("se_reduction leaves an empty SE hidden layer");
    if (c.block_list[i] < 1) fail("every stage needs at least one block");
  }
}

std::size_t NamedTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const NamedTensor* ModelWeights::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

NamedTensor* ModelWeights::find(const std::string& name) {
  for (auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void validate(const ModelWeights& weights) {
  if (weights.format_version != kWeightsFormatVersion) {
    throw Error("weights format version " + std::to_string(weights.format_version) + " unsupported");
  }
  std::unordered_map<std::string, int> seen;
  for (const auto& t : weights.tensors) {
    if (t.name.empty()) throw Error("tensor with empty name");
    if (++seen[t.name] > 1) throw Error("duplicate tensor name " + t.name);
    if (t.values.size() != t.element_count()) throw Error("value-count mismatch for tensor " + t.name);
  }
}

}  // namespace beatrisk
