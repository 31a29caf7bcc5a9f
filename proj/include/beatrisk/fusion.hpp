#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beatrisk/record.hpp"

namespace beatrisk {

/// Per-beat class-1 probabilities of one recording, in beat order.
struct RiskSeries {
  std::string record_id;
  std::vector<double> probabilities;
  std::vector<std::size_t> ordinals;
  std::vector<std::int64_t> rpeaks;
};

void validate(const RiskSeries& series);

/// One time group. alpha/beta are 1-based inclusive beat positions.
struct TimeGroupSummary {
  std::size_t m = 0;  // 1-based group index
  std::size_t alpha = 0;
  std::size_t beta = 0;
  std::size_t n_members = 0;
  double p_avg = 0.0;
  bool af_overlap = false;
  std::optional<int> decision;
  std::optional<double> threshold;
  std::size_t t = 0;  // total group count
};

/// Consecutive groups of n beats; a trailing partial group averages over its
/// actual member count.
std::vector<TimeGroupSummary> tgd(const RiskSeries& series, std::size_t n);

/// 1 iff p_avg >= threshold.
int bid(double p_avg, double threshold);
int bid(const TimeGroupSummary& group, double threshold);

enum class Aggregation { max_group, majority, mean_of_all };

Aggregation parse_aggregation(std::string_view name);
std::string to_string(Aggregation a);

struct PatientDecision {
  int decision = 0;
  double score = 0.0;  // statistic consistent with the aggregation, used for AUC
  std::vector<TimeGroupSummary> groups;
};

/// max_group: score = max group mean. majority: score = fraction of positive
/// groups, decision needs a strict majority. mean_of_all: score = mean of all
/// beat probabilities.
PatientDecision bid_patient(const RiskSeries& series, std::size_t n, double threshold,
                            Aggregation aggregation = Aggregation::max_group);

/// Flags groups with any member R-peak inside an AF episode.
void mark_af_overlap(std::vector<TimeGroupSummary>& groups, const RiskSeries& series,
                     std::span<const Interval> af_episodes);

struct TrendRecord {
  TimeGroupSummary group;
  bool red = false;       // group overlaps AF
  int intensity = 0;      // 0..4 blue shade bucket for sinus groups, floor(5 * p_avg) capped
  std::int64_t first_sample = 0;
  std::int64_t last_sample = 0;
};

inline constexpr std::size_t kTrendGroupSize = 20;

std::vector<TrendRecord> tri(const RiskSeries& series, std::vector<TimeGroupSummary> groups,
                             std::span<const Interval> af_episodes, double threshold);

void write_trend_csv(const std::filesystem::path& path, std::span<const TrendRecord> records);
/// Two panels: the signal strip with AF spans, and group-mean bars with the threshold line.
void render_trend_svg(const std::filesystem::path& path, std::span<const TrendRecord> records,
                      const EcgRecordBundle& record, double threshold);

}  // namespace beatrisk
