#include <gtest/gtest.h>

#include "beatrisk/error.hpp"
#include "beatrisk/rng.hpp"
#include "beatrisk/segmentation.hpp"

using namespace beatrisk;

namespace {

EcgRecordBundle ramp_record(std::size_t n_samples, std::vector<std::int64_t> rpeaks, int label = 0) {
  EcgRecordBundle r;
  r.record_id = "seg";
  r.samples.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) r.samples[i] = static_cast<float>(i);
  r.beat_types.assign(rpeaks.size(), BeatType::normal);
  r.rpeaks = std::move(rpeaks);
  r.patient_label = label;
  return r;
}

std::vector<std::int64_t> evenly(std::size_t k, std::int64_t first, std::int64_t step) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(first + static_cast<std::int64_t>(i) * step);
  return out;
}

Beat typed(BeatType t) {
  Beat b;
  b.type = t;
  return b;
}

}  // namespace

TEST(SegmentBeats, WindowAroundRpeak) {
  auto rpeaks = evenly(20, 100, 100);
  rpeaks[9] = 1000;  // ordinal 10 is the first usable beat
  auto r = ramp_record(3000, rpeaks);
  const auto res = segment_beats(r);
  ASSERT_FALSE(res.beats.empty());
  const auto& b = res.beats.front();
  EXPECT_EQ(b.ordinal, 10u);
  EXPECT_EQ(b.left, 900);
  EXPECT_EQ(b.right, 1100);
  ASSERT_EQ(b.samples.size(), 200u);
  EXPECT_EQ(b.samples.front(), 900.0f);
  EXPECT_EQ(b.samples.back(), 1099.0f);
  EXPECT_EQ(b.samples[100], r.samples[1000]);
}

TEST(SegmentBeats, FourteenPeaksGiveNothing) {
  const auto res = segment_beats(ramp_record(3000, evenly(14, 150, 150)));
  EXPECT_TRUE(res.beats.empty());
  EXPECT_EQ(res.boundary_skipped, 0u);
}

TEST(SegmentBeats, TwentyPeaksGiveOrdinalsTenToFifteen) {
  const auto res = segment_beats(ramp_record(4000, evenly(20, 150, 150)));
  ASSERT_EQ(res.beats.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(res.beats[i].ordinal, 10 + i);
}

TEST(SegmentBeats, BoundaryCrossingIsSkippedAndCounted) {
  // Usable ordinals 10..15; ordinal 10 sits at sample 50 and 15 near the end.
  std::vector<std::int64_t> rp;
  for (int i = 0; i < 9; ++i) rp.push_back(i);
  rp.push_back(50);
  for (int i = 0; i < 4; ++i) rp.push_back(300 + 200 * i);
  rp.push_back(1950);
  for (int i = 0; i < 5; ++i) rp.push_back(1960 + i);
  const auto res = segment_beats(ramp_record(2000, rp));
  EXPECT_EQ(res.boundary_skipped, 2u);
  EXPECT_EQ(res.beats.size(), 4u);
}

TEST(SegmentBeats, CountLawOnRandomRecords) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 100 + rng.below(3000);
    std::vector<std::int64_t> rp;
    std::int64_t pos = static_cast<std::int64_t>(rng.below(50));
    while (pos < static_cast<std::int64_t>(n)) {
      rp.push_back(pos);
      pos += 1 + static_cast<std::int64_t>(rng.below(200));
    }
    SegmentParams p;
    p.skip_head = 1 + rng.below(12);
    p.skip_tail = rng.below(8);
    const auto r = ramp_record(n, rp);
    const auto res = segment_beats(r, p);
    const auto k = static_cast<long>(rp.size());
    const long expected = std::max(0L, k - static_cast<long>(p.skip_head) - static_cast<long>(p.skip_tail) + 1);
    EXPECT_EQ(static_cast<long>(res.beats.size() + res.boundary_skipped), expected);
    for (const auto& b : res.beats) {
      ASSERT_EQ(b.samples.size(), 200u);
      EXPECT_EQ(b.right - b.left, 200);
      EXPECT_EQ(b.samples[100], r.samples[static_cast<std::size_t>(b.rpeak_index)]);
    }
  }
}

TEST(SegmentBeats, Preconditions) {
  auto r = ramp_record(3000, evenly(20, 150, 100));
  r.fs = 250;
  EXPECT_THROW(segment_beats(r), Error);
  r.fs = 200;
  SegmentParams odd;
  odd.length = 201;
  EXPECT_THROW(segment_beats(r, odd), Error);
}

TEST(SelectSinus, Examples) {
  const std::vector<Beat> mixed{typed(BeatType::normal), typed(BeatType::atrial), typed(BeatType::normal),
                                typed(BeatType::ventricular)};
  auto kept = select_sinus(mixed);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], mixed[0]);
  EXPECT_EQ(kept[1], mixed[2]);
  EXPECT_TRUE(select_sinus({typed(BeatType::atrial), typed(BeatType::other)}).empty());
  const std::vector<Beat> all_n{typed(BeatType::normal), typed(BeatType::normal)};
  EXPECT_EQ(select_sinus(all_n), all_n);
}

TEST(SelectSinus, Idempotent) {
  Rng rng(1);
  std::vector<Beat> beats;
  for (int i = 0; i < 100; ++i) {
    Beat b = typed(static_cast<BeatType>("NAVO"[rng.below(4)]));
    b.ordinal = static_cast<std::size_t>(i);
    beats.push_back(b);
  }
  const auto once = select_sinus(beats);
  EXPECT_EQ(select_sinus(once), once);
}

TEST(AssignLabels, PatientLabelPropagates) {
  auto r = ramp_record(4000, evenly(25, 150, 150), 1);
  r.af_episodes = {{3500, 3900}};
  auto beats = select_sinus(segment_beats(r).beats);
  const auto a = assign_labels(r, beats);
  ASSERT_EQ(a.labels.size(), beats.size());
  for (int y : a.labels) EXPECT_EQ(y, 1);

  r.patient_label = 0;
  r.af_episodes.clear();
  for (int y : assign_labels(r, beats).labels) EXPECT_EQ(y, 0);
  EXPECT_TRUE(assign_labels(r, {}).beats.empty());
}
