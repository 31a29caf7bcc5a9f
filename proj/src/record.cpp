#include "beatrisk/record.hpp"

#include <algorithm>
#include <string>

#include "beatrisk/error.hpp"

namespace beatrisk {

char beat_code(BeatType type) { return static_cast<char>(type); }

BeatType parse_beat_code(std::string_view code) {
  if (code.size() == 1) {
    switch (code[0]) {
      case 'N':
        return BeatType::normal;
      case 'A':
        return BeatType::atrial;
      case 'V':
        return BeatType::ventricular;
      case 'O':
        return BeatType::other;
      default:
        break;
    }
  }
  throw Error("unknown beat type code '" + std::string(code) + "'");
}

void validate(const EcgRecordBundle& r) {
  const auto n = static_cast<std::int64_t>(r.samples.size());
  if (r.fs <= 0) throw Error("invariant violated: fs must be positive");
  if (r.rpeaks.size() != r.beat_types.size()) {
    throw Error("invariant violated: rpeaks and beat_types lengths differ");
  }
  for (std::size_t i = 0; i < r.rpeaks.size(); ++i) {
    if (r.rpeaks[i] < 0 || r.rpeaks[i] >= n) throw Error("invariant violated: rpeak index outside samples");
    if (i > 0 && r.rpeaks[i] <= r.rpeaks[i - 1]) throw Error("rpeaks not strictly increasing");
  }
  if (r.patient_label != 0 && r.patient_label != 1) throw Error("invariant violated: patient_label must be 0 or 1");
  if (r.segment_count < 1) throw Error("invariant violated: segment_count must be >= 1");
  auto check_intervals = [n](const std::vector<Interval>& v, const char* what) {
    std::vector<Interval> sorted = v;
    std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const auto& iv = sorted[i];
      if (iv.start < 0 || iv.end > n || iv.start >= iv.end) {
        throw Error(std::string("invariant violated: ") + what + " interval outside [0, n_samples) or empty");
      }
      if (i > 0 && iv.start < sorted[i - 1].end) {
        throw Error(std::string("invariant violated: ") + what + " intervals overlap");
      }
    }
  };
  check_intervals(r.af_episodes, "af_episodes");
  check_intervals(r.segment_boundaries, "segment_boundaries");
}

void validate(const BeatArchive& a) {
  if (a.labels.size() != a.beats.size()) throw Error("invariant violated: labels and beats lengths differ");
  for (std::size_t i = 0; i < a.beats.size(); ++i) {
    const Beat& b = a.beats[i];
    if (b.samples.size() != a.length) throw Error("invariant violated: beat does not have exactly L samples");
    if (b.right - b.left != static_cast<std::int64_t>(a.length)) throw Error("invariant violated: right - left != L");
    if (a.labels[i] != 0 && a.labels[i] != 1) throw Error("invariant violated: beat label must be 0 or 1");
  }
}

}  // namespace beatrisk
