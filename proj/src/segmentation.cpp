#include "beatrisk/segmentation.hpp"

#include <algorithm>

#include "beatrisk/error.hpp"

namespace beatrisk {

SegmentationResult segment_beats(const EcgRecordBundle& record, const SegmentParams& params) {
  if (record.fs != 200) {
    throw Error("segment_beats: fs must be 200 (beat length is fixed to one second at 200 Hz), got " +
                std::to_string(record.fs));
  }
  if (params.length == 0 || params.length % 2 != 0) throw Error("segment_beats: beat length must be even and positive");
  if (params.skip_head < 1) throw Error("segment_beats: skip_head is a 1-based ordinal and must be >= 1");
  validate(record);

  SegmentationResult out;
  const std::size_t k = record.rpeaks.size();
  if (k < params.skip_tail || k - params.skip_tail < params.skip_head) return out;
  const auto half = static_cast<std::int64_t>(params.length / 2);
  const auto n = static_cast<std::int64_t>(record.samples.size());
  for (std::size_t i = params.skip_head; i <= k - params.skip_tail; ++i) {
    const std::int64_t r = record.rpeaks[i - 1];
    const std::int64_t left = r - half;
    const std::int64_t right = r + half;
    if (left < 0 || right > n) {
      ++out.boundary_skipped;
      continue;
    }
    Beat b;
    b.samples.assign(record.samples.begin() + left, record.samples.begin() + right);
    b.rpeak_index = r;
    b.ordinal = i;
    b.type = record.beat_types[i - 1];
    b.left = left;
    b.right = right;
    out.beats.push_back(std::move(b));
  }
  return out;
}

std::vector<Beat> select_types(std::vector<Beat> beats, std::span<const BeatType> keep) {
  std::erase_if(beats, [&](const Beat& b) { return std::find(keep.begin(), keep.end(), b.type) == keep.end(); });
  return beats;
}

std::vector<Beat> select_sinus(std::vector<Beat> beats) {
  static constexpr BeatType kSinus[] = {BeatType::normal};
  return select_types(std::move(beats), kSinus);
}

BeatArchive assign_labels(const EcgRecordBundle& record, std::vector<Beat> beats, std::size_t length) {
  if (record.patient_label != 0 && record.patient_label != 1) throw Error("assign_labels: patient_label must be 0 or 1");
  BeatArchive a;
  a.record_id = record.record_id;
  a.length = length;
  a.labels.assign(beats.size(), record.patient_label);
  a.beats = std::move(beats);
  validate(a);
  return a;
}

}  // namespace beatrisk
