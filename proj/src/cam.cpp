#include "beatrisk/cam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "beatrisk/error.hpp"
#include "beatrisk/io_formats.hpp"
#include "beatrisk/svg.hpp"

namespace beatrisk {

std::vector<double> upsample_linear(std::span<const double> values, std::size_t length) {
  if (values.empty()) throw Error("upsample: empty input");
  std::vector<double> out(length);
  const auto n = values.size();
  const double scale = static_cast<double>(n) / static_cast<double>(length);
  for (std::size_t i = 0; i < length; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(n - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double f = src - static_cast<double>(i0);
    out[i] = (1.0 - f) * values[i0] + f * values[i1];
  }
  return out;
}

CamResult compute_cam(const Net1d& net, std::span<const float> beat, int target_class, std::string_view layer,
                      bool keep_tensors) {
  if (target_class != 0 && target_class != 1) throw Error("cam: target class must be 0 or 1");
  if (beat.empty()) throw Error("cam: empty beat");
  CamResult r;
  r.target_class = target_class;
  r.source_layer = layer.empty() ? net.default_cam_layer() : std::string(layer);

  Signal3 x(1, 1, beat.size());
  std::copy(beat.begin(), beat.end(), x.row(0, 0));
  ForwardTrace trace;
  const Matrix p = net.predict(x, &trace);
  r.probabilities = {p(0, 0), p(0, 1)};
  const Signal3& v = Net1d::trace_layer(net, trace, r.source_layer);
  const int y[1] = {target_class};
  Gradients g = net.backward(trace, y, r.source_layer);
  const Signal3& w = g.tap;
  if (w.channels != v.channels || w.length != v.length) throw Error("cam: gradient and activation shapes differ");

  r.raw_map.assign(v.length, 0.0);
  for (std::size_t t = 0; t < v.length; ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c < v.channels; ++c) s += v(0, c, t) * w(0, c, t);
    r.raw_map[t] = std::max(0.0, s);
  }
  r.upsampled_map = upsample_linear(r.raw_map, beat.size());
  const double mx = *std::max_element(r.upsampled_map.begin(), r.upsampled_map.end());
  if (mx > 0.0) {
    for (auto& m : r.upsampled_map) m /= mx;
  }
  if (keep_tensors) {
    r.activations = v;
    r.gradients = w;
  }
  return r;
}

std::string saliency_color(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const int red = static_cast<int>(std::lround(255.0 * s));
  const int blue = 255 - red;
  const int green = static_cast<int>(std::lround(60.0 * (1.0 - std::abs(2.0 * s - 1.0))));
  return rgb_hex(red, green, blue);
}

void render_cam(const std::filesystem::path& svg_path, const std::filesystem::path& csv_path,
                std::span<const float> beat, const CamResult& cam) {
  if (cam.upsampled_map.size() != beat.size()) throw Error("cam: map length differs from beat length");
  const double width = 800.0, height = 300.0, margin = 30.0;
  SvgDocument svg(width, height);
  svg.text(margin, 18, "Saliency for class " + std::to_string(cam.target_class) + " (" + cam.source_layer + ")");
  const auto n = beat.size();
  if (n > 1) {
    const auto [mn, mx] = std::minmax_element(beat.begin(), beat.end());
    const double lo = *mn;
    const double span = std::max(1e-9, static_cast<double>(*mx) - lo);
    auto px = [&](std::size_t i) { return margin + (width - 2 * margin) * static_cast<double>(i) / static_cast<double>(n - 1); };
    auto py = [&](std::size_t i) { return height - margin - (height - 2 * margin) * (beat[i] - lo) / span; };
    for (std::size_t i = 1; i < n; ++i) {
      const double s = 0.5 * (cam.upsampled_map[i - 1] + cam.upsampled_map[i]);
      svg.line(px(i - 1), py(i - 1), px(i), py(i), saliency_color(s), 2.0);
    }
  }
  write_file(svg_path, svg.str());

  std::string csv = "index,sample,saliency,color\n";
  char buf[128];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.17g,%s\n", i, static_cast<double>(beat[i]), cam.upsampled_map[i],
                  saliency_color(cam.upsampled_map[i]).c_str());
    csv += buf;
  }
  write_file(csv_path, csv);
}

std::vector<CamCsvRow> load_cam_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "index,sample,saliency,color") throw Error("cam csv: bad header in " + path.string());
  std::vector<CamCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CamCsvRow r;
    std::istringstream ls(line);
    std::string idx, sample, sal;
    if (!std::getline(ls, idx, ',') || !std::getline(ls, sample, ',') || !std::getline(ls, sal, ',') ||
        !std::getline(ls, r.color)) {
      throw Error("cam csv: malformed row '" + line + "'");
    }
    try {
      r.index = std::stoul(idx);
      r.sample = std::stod(sample);
      r.saliency = std::stod(sal);
    } catch (const std::exception&) {
      throw Error("cam csv: malformed number in '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace beatrisk
