#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "beatrisk/record.hpp"

namespace beatrisk {

struct SegmentParams {
  std::size_t length = 200;
  std::size_t skip_head = 10;  // first usable 1-based ordinal
  std::size_t skip_tail = 5;   // last usable ordinal is k - skip_tail
};

struct SegmentationResult {
  std::vector<Beat> beats;
  std::size_t boundary_skipped = 0;
};

/// Cuts [rpeak - L/2, rpeak + L/2) around every usable R-peak. Requires
/// fs == 200 and an even length.
SegmentationResult segment_beats(const EcgRecordBundle& record, const SegmentParams& params = {});

std::vector<Beat> select_types(std::vector<Beat> beats, std::span<const BeatType> keep);
std::vector<Beat> select_sinus(std::vector<Beat> beats);

/// Every beat inherits the patient-level label.
BeatArchive assign_labels(const EcgRecordBundle& record, std::vector<Beat> beats,
                          std::size_t length = 200);

}  // namespace beatrisk
