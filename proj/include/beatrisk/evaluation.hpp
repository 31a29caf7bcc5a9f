#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beatrisk/fusion.hpp"
#include "beatrisk/model_weights.hpp"
#include "beatrisk/record.hpp"

namespace beatrisk {

/// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::size_t tn = 0, fp = 0, fn = 0, tp = 0;
  std::size_t total() const { return tn + fp + fn + tp; }
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> mean_score;
  std::optional<double> positive_rate;
  std::size_t count = 0;
};

struct EvaluationReport {
  double threshold = 0.5;
  double accuracy = 0.0;
  std::optional<double> recall;
  std::optional<double> precision;
  double f1 = 0.0;  // 0 when precision or recall is undefined
  std::optional<double> auc;
  ConfusionMatrix confusion;
  std::vector<RocPoint> roc_points;
  std::vector<CalibrationBin> calibration_bins;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

/// Mann-Whitney AUC with midpoint ties; nullopt when a class is missing.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
std::vector<CalibrationBin> calibration(std::span<const double> scores, std::span<const int> labels,
                                        std::size_t bins = 10);
EvaluationReport classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                         double threshold = 0.5);

struct SweepRow {
  std::size_t n = 0;
  std::optional<double> auc;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool auc_nondecreasing = true;
};

/// Patient-level metrics of bid_patient for each group size.
SweepResult bid_sweep(std::span<const RiskSeries> patients, std::span<const int> labels,
                      std::span<const std::size_t> n_values, double threshold = 0.5,
                      Aggregation aggregation = Aggregation::max_group);

enum class Subgroup : std::uint8_t { stable = 0, before_af = 1, after_af = 2, bna = 3, bnv = 4 };
inline constexpr std::array<Subgroup, 5> kAllSubgroups{Subgroup::stable, Subgroup::before_af, Subgroup::after_af,
                                                       Subgroup::bna, Subgroup::bnv};
std::string to_string(Subgroup s);

struct SubgroupAssignment {
  std::int64_t rpeak_sample = 0;
  bool af_patient = false;
  std::uint8_t mask = 0;
  double window_seconds = 10.0;

  bool has(Subgroup s) const { return (mask >> static_cast<int>(s)) & 1u; }
};

/// Categories of one beat. Beats of non-AF patients get an empty mask.
SubgroupAssignment subgroup_classify(std::int64_t rpeak_sample, const EcgRecordBundle& record,
                                     double window_seconds = 10.0);

struct SubgroupResult {
  Subgroup category = Subgroup::stable;
  std::size_t in_category = 0;  // AF-patient beats in the category
  std::size_t non_af = 0;       // beats of non-AF patients added to every category
  std::optional<EvaluationReport> report;
};

/// Each category's AF-patient beats combined with all non-AF beats.
std::vector<SubgroupResult> subgroup_evaluate(std::span<const SubgroupAssignment> assignments,
                                              std::span<const double> scores, std::span<const int> labels,
                                              double threshold = 0.5);

struct QuintileWaveforms {
  std::array<std::vector<double>, 5> mean;
  std::array<std::size_t, 5> sizes{};
  std::array<double, 5> mean_score{};
};

/// Beats sorted by ascending score, cut into five contiguous parts whose sizes
/// differ by at most one, averaged pointwise.
QuintileWaveforms risk_quintile_waveforms(std::span<const std::vector<float>> beats, std::span<const double> scores);

struct BenchmarkResult {
  std::size_t parameters = 0;
  std::size_t trainable_parameters = 0;
  double single_beat_median_s = 0.0;
  double batch32_median_s = 0.0;
  std::size_t runs = 0;
  std::string environment;
};

BenchmarkResult benchmark(const ModelWeights& weights, std::size_t runs = 100, std::size_t beat_length = 200);

}  // namespace beatrisk
