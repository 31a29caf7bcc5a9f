#include "beatrisk/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "beatrisk/error.hpp"
#include "beatrisk/io_formats.hpp"
#include "beatrisk/svg.hpp"

namespace beatrisk {

void validate(const RiskSeries& s) {
  const std::size_t k = s.probabilities.size();
  if (s.ordinals.size() != k || s.rpeaks.size() != k) throw Error("risk series: provenance length differs from probabilities");
  for (double p : s.probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("risk series: probability outside [0, 1]");
  }
}

std::vector<TimeGroupSummary> tgd(const RiskSeries& series, std::size_t n) {
  if (n < 1) throw Error("tgd: group size n must be >= 1");
  validate(series);
  const std::size_t k = series.probabilities.size();
  const std::size_t t = (k + n - 1) / n;
  std::vector<TimeGroupSummary> out;
  out.reserve(t);
  for (std::size_t m = 0; m < t; ++m) {
    TimeGroupSummary g;
    g.m = m + 1;
    g.alpha = m * n + 1;
    g.beta = std::min(k, (m + 1) * n);
    g.n_members = g.beta - g.alpha + 1;
    double sum = 0.0;
    for (std::size_t i = g.alpha - 1; i < g.beta; ++i) sum += series.probabilities[i];
    g.p_avg = sum / static_cast<double>(g.n_members);
    g.t = t;
    out.push_back(g);
  }
  return out;
}

int bid(double p_avg, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("bid: threshold must lie in [0, 1]");
  return p_avg >= threshold ? 1 : 0;
}

int bid(const TimeGroupSummary& group, double threshold) { return bid(group.p_avg, threshold); }

Aggregation parse_aggregation(std::string_view name) {
  if (name == "max_group") return Aggregation::max_group;
  if (name == "majority") return Aggregation::majority;
  if (name == "mean_of_all") return Aggregation::mean_of_all;
  throw Error("unknown aggregation '" + std::string(name) + "' (expected max_group, majority or mean_of_all)");
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::max_group:
      return "max_group";
    case Aggregation::majority:
      return "majority";
    case Aggregation::mean_of_all:
      return "mean_of_all";
  }
  return "?";
}

PatientDecision bid_patient(const RiskSeries& series, std::size_t n, double threshold, Aggregation aggregation) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("bid: threshold must lie in [0, 1]");
  PatientDecision out;
  out.groups = tgd(series, n);
  if (out.groups.empty()) throw Error("bid_patient: series " + series.record_id + " has no beats");
  std::size_t positive = 0;
  double max_mean = 0.0;
  for (auto& g : out.groups) {
    g.decision = bid(g, threshold);
    g.threshold = threshold;
    positive += static_cast<std::size_t>(*g.decision);
    max_mean = std::max(max_mean, g.p_avg);
  }
  switch (aggregation) {
    case Aggregation::max_group:
      out.score = max_mean;
      out.decision = positive > 0 ? 1 : 0;
      break;
    case Aggregation::majority:
      out.score = static_cast<double>(positive) / static_cast<double>(out.groups.size());
      out.decision = 2 * positive > out.groups.size() ? 1 : 0;
      break;
    case Aggregation::mean_of_all: {
      double sum = 0.0;
      for (double p : series.probabilities) sum += p;
      out.score = sum / static_cast<double>(series.probabilities.size());
      out.decision = bid(out.score, threshold);
      break;
    }
  }
  return out;
}

void mark_af_overlap(std::vector<TimeGroupSummary>& groups, const RiskSeries& series, std::span<const Interval> af) {
  for (auto& g : groups) {
    if (g.beta > series.rpeaks.size()) throw Error("time groups do not align with the risk series");
    g.af_overlap = false;
    for (std::size_t i = g.alpha - 1; i < g.beta && !g.af_overlap; ++i) {
      for (const auto& iv : af) {
        if (iv.contains(series.rpeaks[i])) {
          g.af_overlap = true;
          break;
        }
      }
    }
  }
}

std::vector<TrendRecord> tri(const RiskSeries& series, std::vector<TimeGroupSummary> groups,
                             std::span<const Interval> af_episodes, double threshold) {
  validate(series);
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("tri: threshold must lie in [0, 1]");
  std::size_t expected_alpha = 1;
  for (const auto& g : groups) {
    if (g.alpha != expected_alpha || g.beta < g.alpha || g.beta > series.probabilities.size()) {
      throw Error("tri: groups are misaligned with the risk series");
    }
    expected_alpha = g.beta + 1;
  }
  if (expected_alpha != series.probabilities.size() + 1) throw Error("tri: groups do not cover the risk series");
  mark_af_overlap(groups, series, af_episodes);
  std::vector<TrendRecord> out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    g.decision = bid(g, threshold);
    g.threshold = threshold;
    TrendRecord r;
    r.group = g;
    r.red = g.af_overlap;
    r.intensity = std::min(4, static_cast<int>(std::floor(g.p_avg * 5.0)));
    r.first_sample = series.rpeaks[g.alpha - 1];
    r.last_sample = series.rpeaks[g.beta - 1];
    out.push_back(r);
  }
  return out;
}

void write_trend_csv(const std::filesystem::path& path, std::span<const TrendRecord> records) {
  std::string out = "m,alpha,beta,n_members,p_avg,af_overlap,color,intensity,decision,threshold,first_sample,last_sample\n";
  char buf[256];
  for (const auto& r : records) {
    const auto& g = r.group;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.17g,%d,%s,%d,%d,%.17g,%lld,%lld\n", g.m, g.alpha, g.beta,
                  g.n_members, g.p_avg, g.af_overlap ? 1 : 0, r.red ? "red" : "blue", r.intensity,
                  g.decision.value_or(0), g.threshold.value_or(0.0), static_cast<long long>(r.first_sample),
                  static_cast<long long>(r.last_sample));
    out += buf;
  }
  write_file(path, out);
}

void render_trend_svg(const std::filesystem::path& path, std::span<const TrendRecord> records,
                      const EcgRecordBundle& record, double threshold) {
  const double width = 1000.0;
  const double strip_h = 160.0;
  const double bars_h = 160.0;
  const double margin = 30.0;
  SvgDocument svg(width, strip_h + bars_h + 3 * margin);
  const double plot_w = width - 2 * margin;
  const auto n = record.samples.size();

  // Signal strip.
  const double top = margin;
  svg.text(margin, top - 8, "ECG " + record.record_id + " (red: AF episodes)");
  if (n > 1) {
    for (const auto& iv : record.af_episodes) {
      const double x0 = margin + plot_w * static_cast<double>(iv.start) / static_cast<double>(n - 1);
      const double x1 = margin + plot_w * static_cast<double>(iv.end - 1) / static_cast<double>(n - 1);
      svg.rect(x0, top, x1 - x0, strip_h, "#ff0000", 0.15);
    }
    const auto [mn, mx] = std::minmax_element(record.samples.begin(), record.samples.end());
    const double lo = *mn;
    const double span = std::max(1e-9, static_cast<double>(*mx) - lo);
    const std::size_t step = std::max<std::size_t>(1, n / 4000);
    auto xy = [&](std::size_t i) {
      return std::pair{margin + plot_w * static_cast<double>(i) / static_cast<double>(n - 1),
                       top + strip_h - strip_h * (record.samples[i] - lo) / span};
    };
    for (std::size_t i = step; i < n; i += step) {
      const auto [x0, y0] = xy(i - step);
      const auto [x1, y1] = xy(i);
      bool in_af = false;
      for (const auto& iv : record.af_episodes) in_af = in_af || iv.contains(static_cast<std::int64_t>(i));
      svg.line(x0, y0, x1, y1, in_af ? "#d62728" : "#1f77b4", 0.6);
    }
  }

  // Group-mean bars.
  const double btop = strip_h + 2 * margin;
  svg.text(margin, btop - 8, "Mean risk per time group");
  svg.rect(margin, btop, plot_w, bars_h, "#f4f4f4");
  if (!records.empty()) {
    const double bw = plot_w / static_cast<double>(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const double h = bars_h * r.group.p_avg;
      std::string color;
      if (r.red) {
        color = "#d62728";
      } else {
        const int shade = 220 - 40 * r.intensity;
        color = rgb_hex(shade / 2, shade, 255);
      }
      svg.rect(margin + bw * static_cast<double>(i), btop + bars_h - h, std::max(0.5, bw * 0.9), h, color);
    }
  }
  const double ty = btop + bars_h - bars_h * threshold;
  svg.line(margin, ty, margin + plot_w, ty, "#000000", 1.0);
  write_file(path, svg.str());
}

}  // namespace beatrisk
