#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace beatrisk {

/// Annotated beat class. `other` covers every code outside N/A/V.
enum class BeatType : char {
  normal = 'N',
  atrial = 'A',
  ventricular = 'V',
  other = 'O',
};

char beat_code(BeatType type);
/// Throws Error for anything but the single characters N, A, V, O.
BeatType parse_beat_code(std::string_view code);

/// Half-open sample interval [start, end).
struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t sample) const { return sample >= start && sample < end; }
  bool operator==(const Interval&) const = default;
};

/// One annotated single-lead recording belonging to one patient.
struct EcgRecordBundle {
  std::string record_id;
  int fs = 200;
  std::vector<float> samples;
  std::vector<std::int64_t> rpeaks;
  std::vector<BeatType> beat_types;
  std::vector<Interval> af_episodes;
  int patient_label = 0;
  int segment_count = 1;
  std::vector<Interval> segment_boundaries;

  bool operator==(const EcgRecordBundle&) const = default;
};

/// Throws Error naming the first violated invariant.
void validate(const EcgRecordBundle& record);

struct Beat {
  std::vector<float> samples;
  std::int64_t rpeak_index = 0;
  std::size_t ordinal = 0;  // 1-based position among the record's R-peaks
  BeatType type = BeatType::normal;
  std::int64_t left = 0;
  std::int64_t right = 0;

  bool operator==(const Beat&) const = default;
};

struct BeatArchive {
  std::string record_id;
  std::size_t length = 200;
  std::vector<Beat> beats;
  std::vector<int> labels;

  bool operator==(const BeatArchive&) const = default;
};

void validate(const BeatArchive& archive);

}  // namespace beatrisk
