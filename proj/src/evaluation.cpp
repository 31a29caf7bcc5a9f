#include "beatrisk/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <sys/utsname.h>

#include "beatrisk/error.hpp"
#include "beatrisk/net1d.hpp"

namespace beatrisk {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
  }
}

// Indices sorted by descending score.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  const std::size_t neg = labels.size() - pos;
  std::vector<RocPoint> out{{0.0, 0.0}};
  if (pos == 0 || neg == 0) return out;
  const auto order = descending(scores);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    out.push_back({static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  // Trapezoid over tied-score steps in integer counts: each step adds
  // fp_step * (tp_before + tp_step / 2).
  const auto order = descending(scores);
  double area = 0.0;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::size_t dtp = 0, dfp = 0;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]] == 1) {
        ++dtp;
      } else {
        ++dfp;
      }
    }
    area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
    tp += dtp;
  }
  return area / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<CalibrationBin> calibration(std::span<const double> scores, std::span<const int> labels,
                                        std::size_t bins) {
  check_lengths(scores, labels);
  if (bins == 0) throw Error("calibration: bin count must be >= 1");
  std::vector<CalibrationBin> out(bins);
  std::vector<double> sum_s(bins, 0.0), sum_y(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lower = static_cast<double>(b) / static_cast<double>(bins);
    out[b].upper = static_cast<double>(b + 1) / static_cast<double>(bins);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0)) throw Error("calibration: score outside [0, 1]");
    auto b = static_cast<std::size_t>(s * static_cast<double>(bins));
    b = std::min(b, bins - 1);
    ++out[b].count;
    sum_s[b] += s;
    sum_y[b] += labels[i];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (out[b].count == 0) continue;
    out[b].mean_score = sum_s[b] / static_cast<double>(out[b].count);
    out[b].positive_rate = sum_y[b] / static_cast<double>(out[b].count);
  }
  return out;
}

EvaluationReport classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                         double threshold) {
  check_lengths(scores, labels);
  EvaluationReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++r.n_positive;
      pred ? ++r.confusion.tp : ++r.confusion.fn;
    } else {
      ++r.n_negative;
      pred ? ++r.confusion.fp : ++r.confusion.tn;
    }
  }
  const auto& c = r.confusion;
  if (c.total() > 0) r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (r.recall && r.precision && *r.recall + *r.precision > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  r.auc = roc_auc(scores, labels);
  r.roc_points = roc_curve(scores, labels);
  r.calibration_bins = calibration(scores, labels);
  return r;
}

SweepResult bid_sweep(std::span<const RiskSeries> patients, std::span<const int> labels,
                      std::span<const std::size_t> n_values, double threshold, Aggregation aggregation) {
  if (patients.size() != labels.size()) throw Error("bid_sweep: one label per patient required");
  SweepResult out;
  std::optional<double> prev;
  for (std::size_t n : n_values) {
    std::vector<double> scores;
    scores.reserve(patients.size());
    std::vector<int> decisions;
    for (const auto& p : patients) {
      const auto d = bid_patient(p, n, threshold, aggregation);
      scores.push_back(d.score);
      decisions.push_back(d.decision);
    }
    // Accuracy and F1 follow the patient decisions, AUC the aggregation score.
    std::vector<double> as_scores(decisions.begin(), decisions.end());
    const auto rep = classification_metrics(as_scores, labels, 0.5);
    SweepRow row;
    row.n = n;
    row.auc = roc_auc(scores, labels);
    row.accuracy = rep.accuracy;
    row.f1 = rep.f1;
    if (prev && row.auc && *row.auc < *prev) out.auc_nondecreasing = false;
    if (row.auc) prev = row.auc;
    out.rows.push_back(row);
  }
  return out;
}

std::string to_string(Subgroup s) {
  switch (s) {
    case Subgroup::stable:
      return "Stable";
    case Subgroup::before_af:
      return "BeforeAF";
    case Subgroup::after_af:
      return "AfterAF";
    case Subgroup::bna:
      return "BNA";
    case Subgroup::bnv:
      return "BNV";
  }
  return "?";
}

SubgroupAssignment subgroup_classify(std::int64_t rpeak, const EcgRecordBundle& record, double window_seconds) {
  if (!(window_seconds > 0.0)) throw Error("subgroup window must be positive");
  SubgroupAssignment a;
  a.rpeak_sample = rpeak;
  a.window_seconds = window_seconds;
  a.af_patient = record.patient_label == 1;
  if (!a.af_patient) return a;
  const auto w = static_cast<std::int64_t>(std::llround(window_seconds * record.fs));
  const auto n = static_cast<std::int64_t>(record.samples.size());
  const std::int64_t lo = std::max<std::int64_t>(0, rpeak - w);
  const std::int64_t hi = std::min<std::int64_t>(n, rpeak + w + 1);
  auto set = [&](Subgroup s) { a.mask |= static_cast<std::uint8_t>(1u << static_cast<int>(s)); };

  for (std::size_t i = 0; i < record.rpeaks.size(); ++i) {
    const auto r = record.rpeaks[i];
    if (r < lo || r >= hi || r == rpeak) continue;
    if (record.beat_types[i] == BeatType::ventricular) set(Subgroup::bnv);
    if (record.beat_types[i] == BeatType::atrial) set(Subgroup::bna);
  }

  // Half-open sample windows: before = [R - W, R), after = [R + 1, R + W + 1).
  auto intersects = [](const Interval& iv, std::int64_t a0, std::int64_t a1) { return iv.start < a1 && a0 < iv.end; };
  const std::int64_t before0 = lo, before1 = rpeak;
  const std::int64_t after0 = rpeak + 1, after1 = hi;
  bool any_before = false, any_after = false, starts_after = false, ends_before = false;
  for (const auto& iv : record.af_episodes) {
    any_before = any_before || intersects(iv, before0, before1);
    any_after = any_after || intersects(iv, after0, after1);
    starts_after = starts_after || (iv.start >= after0 && iv.start < after1);
    const std::int64_t last = iv.end - 1;
    ends_before = ends_before || (last >= before0 && last <= rpeak);
  }
  if (starts_after && !any_before) set(Subgroup::before_af);
  if (ends_before && !any_after) set(Subgroup::after_af);
  if (a.mask == 0) set(Subgroup::stable);
  return a;
}

std::vector<SubgroupResult> subgroup_evaluate(std::span<const SubgroupAssignment> assignments,
                                              std::span<const double> scores, std::span<const int> labels,
                                              double threshold) {
  if (assignments.size() != scores.size() || scores.size() != labels.size()) {
    throw Error("subgroup_evaluate: assignments, scores and labels differ in length");
  }
  std::vector<SubgroupResult> out;
  for (Subgroup s : kAllSubgroups) {
    SubgroupResult r;
    r.category = s;
    std::vector<double> sc;
    std::vector<int> lb;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      const auto& a = assignments[i];
      if (a.af_patient) {
        if (!a.has(s)) continue;
        ++r.in_category;
      } else {
        ++r.non_af;
      }
      sc.push_back(scores[i]);
      lb.push_back(labels[i]);
    }
    if (r.in_category > 0) r.report = classification_metrics(sc, lb, threshold);
    out.push_back(std::move(r));
  }
  return out;
}

QuintileWaveforms risk_quintile_waveforms(std::span<const std::vector<float>> beats, std::span<const double> scores) {
  if (beats.size() != scores.size()) throw Error("quintiles: beats and scores differ in length");
  if (beats.size() < 5) throw Error("quintiles: at least 5 beats required");
  const std::size_t len = beats.front().size();
  for (const auto& b : beats) {
    if (b.size() != len) throw Error("quintiles: beats differ in length");
  }
  std::vector<std::size_t> order(beats.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  QuintileWaveforms q;
  const std::size_t n = beats.size();
  std::size_t start = 0;
  for (std::size_t part = 0; part < 5; ++part) {
    const std::size_t size = n / 5 + (part < n % 5 ? 1 : 0);
    q.sizes[part] = size;
    q.mean[part].assign(len, 0.0);
    double score_sum = 0.0;
    for (std::size_t j = start; j < start + size; ++j) {
      const auto& b = beats[order[j]];
      for (std::size_t t = 0; t < len; ++t) q.mean[part][t] += b[t];
      score_sum += scores[order[j]];
    }
    for (auto& v : q.mean[part]) v /= static_cast<double>(size);
    q.mean_score[part] = score_sum / static_cast<double>(size);
    start += size;
  }
  return q;
}

BenchmarkResult benchmark(const ModelWeights& weights, std::size_t runs, std::size_t beat_length) {
  if (runs == 0) throw Error("benchmark: runs must be >= 1");
  const Net1d net(weights);
  const auto counts = count_parameters(weights);
  BenchmarkResult r;
  r.parameters = counts.total();
  r.trainable_parameters = counts.trainable;
  r.runs = runs;

  auto make_input = [&](std::size_t batch) {
    Signal3 input(batch, 1, beat_length);
    for (std::size_t i = 0; i < input.data.size(); ++i) input.data[i] = std::sin(0.05 * static_cast<double>(i));
    return input;
  };
  const Signal3 single = make_input(1);
  const Signal3 batch32 = make_input(32);
  auto time_once = [&](const Signal3& input) {
    const auto a = std::chrono::steady_clock::now();
    (void)net.predict(input);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
  };
  for (int w = 0; w < 3; ++w) {
    (void)net.predict(single);
    (void)net.predict(batch32);
  }
  // Interleaved so drift in clock speed hits both sizes alike.
  std::vector<double> t1(runs), t32(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    t1[i] = time_once(single);
    t32[i] = time_once(batch32);
  }
  auto median = [&](std::vector<double>& t) {
    std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(runs / 2), t.end());
    return t[runs / 2];
  };
  r.single_beat_median_s = median(t1);
  r.batch32_median_s = median(t32);

  utsname u{};
  std::string env = "threads=1";
  if (uname(&u) == 0) env += std::string(" os=") + u.sysname + " " + u.release + " arch=" + u.machine;
  env += " hw_concurrency=" + std::to_string(std::thread::hardware_concurrency());
#if defined(__VERSION__)
  env += std::string(" compiler=") + __VERSION__;
#endif
  r.environment = env;
  return r;
}

}  // namespace beatrisk
