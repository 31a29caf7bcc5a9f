#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "beatrisk/error.hpp"
#include "beatrisk/fusion.hpp"
#include "beatrisk/io_formats.hpp"
#include "beatrisk/rng.hpp"
#include "test_util.hpp"

using namespace beatrisk;

namespace {

RiskSeries series_of(std::vector<double> p, std::int64_t spacing = 160) {
  RiskSeries s;
  s.record_id = "r";
  s.probabilities = std::move(p);
  for (std::size_t i = 0; i < s.probabilities.size(); ++i) {
    s.ordinals.push_back(10 + i);
    s.rpeaks.push_back(1000 + spacing * static_cast<std::int64_t>(i));
  }
  return s;
}

std::vector<double> means(const std::vector<TimeGroupSummary>& g) {
  std::vector<double> out;
  for (const auto& x : g) out.push_back(x.p_avg);
  return out;
}

}  // namespace

TEST(Tgd, Examples) {
  const auto g = tgd(series_of({0.2, 0.4, 0.6, 0.8}), 2);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_NEAR(g[0].p_avg, 0.3, 1e-15);
  EXPECT_NEAR(g[1].p_avg, 0.7, 1e-15);

  const std::vector<double> p{0.1, 0.5, 0.9, 0.3, 0.7};
  EXPECT_EQ(means(tgd(series_of(p), 1)), p);

  const auto g5 = tgd(series_of(p), 2);
  ASSERT_EQ(g5.size(), 3u);
  EXPECT_EQ(g5[2].p_avg, 0.7);
  EXPECT_EQ(g5[2].n_members, 1u);
  EXPECT_EQ(g5[2].alpha, 5u);
  EXPECT_EQ(g5[2].beta, 5u);
  for (const auto& x : g5) EXPECT_EQ(x.t, 3u);
}

TEST(Tgd, Errors) {
  EXPECT_THROW(tgd(series_of({0.1}), 0), Error);
  auto bad = series_of({0.1, 1.2});
  EXPECT_THROW(tgd(bad, 1), Error);
  auto misaligned = series_of({0.1, 0.2});
  misaligned.rpeaks.pop_back();
  EXPECT_THROW(tgd(misaligned, 1), Error);
  EXPECT_TRUE(tgd(series_of({}), 3).empty());
}

TEST(Tgd, TilingAndMeanPreservation) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(1 + rng.below(300));
    for (auto& v : p) v = rng.uniform();
    const std::size_t n = 1 + rng.below(40);
    const auto g = tgd(series_of(p), n);
    EXPECT_EQ(g.size(), (p.size() + n - 1) / n);
    std::size_t next = 1;
    double weighted = 0.0;
    for (const auto& x : g) {
      EXPECT_EQ(x.alpha, next);
      EXPECT_EQ(x.beta - x.alpha + 1, x.n_members);
      next = x.beta + 1;
      weighted += x.p_avg * static_cast<double>(x.n_members);
    }
    EXPECT_EQ(next, p.size() + 1);
    double total = 0.0;
    for (double v : p) total += v;
    EXPECT_NEAR(weighted / static_cast<double>(p.size()), total / static_cast<double>(p.size()), 1e-12);
  }
}

TEST(Bid, Examples) {
  EXPECT_EQ(bid(0.5, 0.5), 1);
  EXPECT_EQ(bid(0.49, 0.5), 0);
  for (double p : {0.0, 0.3, 1.0}) EXPECT_EQ(bid(p, 0.0), 1);
  EXPECT_THROW(bid(0.5, -0.1), Error);
  EXPECT_THROW(bid(0.5, 1.1), Error);
}

TEST(Bid, MonotoneInThreshold) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform();
    int prev = 1;
    for (double thr = 0.0; thr <= 1.0; thr += 0.01) {
      const int d = bid(p, thr);
      EXPECT_LE(d, prev);
      prev = d;
    }
  }
}

TEST(Bid, GroupSizeOneMatchesPerBeatThreshold) {
  Rng rng(3);
  std::vector<double> p(200);
  for (auto& v : p) v = rng.uniform();
  const auto g = tgd(series_of(p), 1);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(bid(g[i], 0.4), p[i] >= 0.4 ? 1 : 0);
}

TEST(BidPatient, Aggregations) {
  const auto low = series_of({0.1, 0.2, 0.3, 0.2});
  for (auto a : {Aggregation::max_group, Aggregation::majority, Aggregation::mean_of_all}) {
    EXPECT_EQ(bid_patient(low, 2, 0.5, a).decision, 0);
  }
  const auto s = series_of({0.9, 0.1, 0.1});
  const auto mg = bid_patient(s, 1, 0.5, Aggregation::max_group);
  EXPECT_EQ(mg.decision, 1);
  EXPECT_EQ(mg.score, 0.9);
  const auto mj = bid_patient(s, 1, 0.5, Aggregation::majority);
  EXPECT_EQ(mj.decision, 0);
  EXPECT_NEAR(mj.score, 1.0 / 3.0, 1e-15);
  const auto ma = bid_patient(s, 1, 0.5, Aggregation::mean_of_all);
  EXPECT_EQ(ma.decision, 0);
  EXPECT_NEAR(ma.score, 1.1 / 3.0, 1e-15);
  for (const auto& g : mg.groups) {
    ASSERT_TRUE(g.decision.has_value());
    EXPECT_EQ(*g.threshold, 0.5);
  }
  EXPECT_THROW(bid_patient(series_of({}), 3, 0.5), Error);
}

TEST(BidPatient, ParseAggregation) {
  EXPECT_EQ(parse_aggregation("majority"), Aggregation::majority);
  EXPECT_EQ(to_string(parse_aggregation("mean_of_all")), "mean_of_all");
  EXPECT_THROW(parse_aggregation("median"), Error);
}

TEST(Tri, AllSinusConstant) {
  const auto s = series_of(std::vector<double>(100, 0.1));
  const auto recs = tri(s, tgd(s, kTrendGroupSize), {}, 0.5);
  ASSERT_EQ(recs.size(), 5u);
  for (const auto& r : recs) {
    EXPECT_FALSE(r.red);
    EXPECT_EQ(r.group.p_avg, recs.front().group.p_avg);
    EXPECT_EQ(r.intensity, 0);
    EXPECT_EQ(*r.group.decision, 0);
  }
}

TEST(Tri, AfOverlapIsRed) {
  const auto s = series_of(std::vector<double>(60, 0.5), 100);
  // Beat 45 sits at sample 1000 + 44 * 100 = 5400.
  const std::vector<Interval> af{{5400, 5401}};
  const auto recs = tri(s, tgd(s, 20), af, 0.5);
  EXPECT_FALSE(recs[0].red);
  EXPECT_FALSE(recs[1].red);
  EXPECT_TRUE(recs[2].red);
  const std::vector<Interval> just_after{{5401, 5500}};
  EXPECT_FALSE(tri(s, tgd(s, 20), just_after, 0.5)[2].red);
}

TEST(Tri, RampIntoAfRises) {
  std::vector<double> p;
  for (int i = 0; i < 200; ++i) p.push_back(0.1 + 0.8 * i / 199.0);
  const auto s = series_of(p);
  const std::vector<Interval> af{{s.rpeaks[180], s.rpeaks[199] + 1}};
  const auto recs = tri(s, tgd(s, 20), af, 0.5);
  std::size_t first_red = recs.size();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].red) {
      first_red = i;
      break;
    }
  }
  ASSERT_EQ(first_red, 9u);
  for (std::size_t i = 1; i < first_red; ++i) EXPECT_GT(recs[i].group.p_avg, recs[i - 1].group.p_avg);
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_GE(recs[i].intensity, recs[i - 1].intensity);
}

TEST(Tri, RejectsMisalignedGroups) {
  const auto s = series_of({0.1, 0.2, 0.3, 0.4});
  auto g = tgd(s, 2);
  g.pop_back();
  EXPECT_THROW(tri(s, g, {}, 0.5), Error);
  const auto other = series_of({0.1, 0.2});
  EXPECT_THROW(tri(other, tgd(s, 2), {}, 0.5), Error);
}

TEST(Tri, WritesCsvAndSvg) {
  TempDir dir;
  EcgRecordBundle rec;
  rec.record_id = "r";
  rec.samples.resize(5000);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) rec.samples[i] = static_cast<float>(std::sin(0.01 * static_cast<double>(i)));
  rec.af_episodes = {{3000, 3500}};
  const auto s = series_of(std::vector<double>(25, 0.6), 150);
  const auto recs = tri(s, tgd(s, 20), rec.af_episodes, 0.5);
  write_trend_csv(dir / "t.csv", recs);
  render_trend_svg(dir / "t.svg", recs, rec, 0.5);
  const auto csv = read_file(dir / "t.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(read_file(dir / "t.svg").find("<svg"), std::string::npos);
}
