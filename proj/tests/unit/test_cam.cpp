#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "beatrisk/cam.hpp"
#include "beatrisk/error.hpp"
#include "beatrisk/io_formats.hpp"
#include "beatrisk/rng.hpp"
#include "test_util.hpp"
#include "tiny_cam.hpp"

using namespace beatrisk;

namespace {

Net1dConfig small_config() {
  Net1dConfig c;
  c.base_filters = 8;
  c.filter_list = {8, 16};
  c.block_list = {1, 1};
  c.dropout_rate = 0.0;
  return c;
}

std::vector<float> random_beat(Rng& rng, std::size_t n = 200) {
  std::vector<float> b(n);
  for (auto& v : b) v = static_cast<float>(rng.normal());
  return b;
}

int red_channel(const std::string& hex) { return std::stoi(hex.substr(1, 2), nullptr, 16); }

}  // namespace

TEST(Cam, TinyModelMatchesHandComputation) {
  const Net1d net(tiny_cam::weights());
  const auto x = tiny_cam::beat();
  for (int target : {0, 1}) {
    const auto e = tiny_cam::expected(x, target);
    const auto r = compute_cam(net, x, target, tiny_cam::kLayer, true);
    ASSERT_EQ(r.raw_map.size(), 4u);
    ASSERT_EQ(r.upsampled_map.size(), 8u);
    EXPECT_NEAR(r.probabilities[1], e.probs[1], 1e-6);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(r.activations(0, c, j), e.v[c][j], 1e-6);
        EXPECT_NEAR(r.gradients(0, c, j), e.w[c], 1e-6);
      }
    }
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.raw_map[j], e.raw[j], 1e-6) << "target " << target;
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(r.upsampled_map[i], e.upsampled[i], 1e-6) << "target " << target;
  }
}

TEST(Cam, TinyModelMapIsNotTrivial) {
  const auto e1 = tiny_cam::expected(tiny_cam::beat(), 1);
  const auto e0 = tiny_cam::expected(tiny_cam::beat(), 0);
  const auto positive = [](const auto& a) { return std::count_if(a.begin(), a.end(), [](double v) { return v > 0; }); };
  EXPECT_GT(positive(e1.raw) + positive(e0.raw), 0);
  EXPECT_LT(positive(e1.raw) + positive(e0.raw), 8);
}

TEST(Cam, ZeroGradientGivesZeroMap) {
  auto w = tiny_cam::weights();
  std::fill(w.find("head.weight")->values.begin(), w.find("head.weight")->values.end(), 0.0f);
  const Net1d net(w);
  const auto r = compute_cam(net, tiny_cam::beat(), 1, tiny_cam::kLayer);
  for (double v : r.raw_map) EXPECT_EQ(v, 0.0);
  for (double v : r.upsampled_map) EXPECT_EQ(v, 0.0);
}

TEST(Cam, DefaultLayerIsLastConvOfFinalStage) {
  const auto net = Net1d::build(small_config(), 3);
  Rng rng(1);
  const auto r = compute_cam(net, random_beat(rng), 1);
  EXPECT_EQ(r.source_layer, "stage1.block0.conv3");
}

TEST(Cam, ContractsOnRandomBeats) {
  const auto net = Net1d::build(small_config(), 5);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto beat = random_beat(rng);
    const auto r = compute_cam(net, beat, static_cast<int>(i % 2));
    ASSERT_EQ(r.upsampled_map.size(), 200u);
    for (double v : r.raw_map) EXPECT_GE(v, 0.0);
    double mx = 0.0;
    for (double v : r.upsampled_map) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      mx = std::max(mx, v);
    }
    const bool all_zero = std::all_of(r.raw_map.begin(), r.raw_map.end(), [](double v) { return v == 0.0; });
    if (!all_zero) EXPECT_DOUBLE_EQ(mx, 1.0);
  }
}

TEST(Cam, LeavesModelAndOutputUntouched) {
  const auto net = Net1d::build(small_config(), 9);
  Rng rng(4);
  const auto beat = random_beat(rng);
  const auto before = net.to_weights();
  Signal3 x(1, 1, beat.size());
  std::copy(beat.begin(), beat.end(), x.row(0, 0));
  const Matrix p0 = net.predict(x);
  for (const auto& layer : net.layer_names()) (void)compute_cam(net, beat, 1, layer);
  EXPECT_EQ(net.to_weights(), before);
  const Matrix p1 = net.predict(x);
  EXPECT_EQ(p0.data, p1.data);
  const auto r = compute_cam(net, beat, 1);
  EXPECT_EQ(r.probabilities[1], p0(0, 1));
}

TEST(Cam, ChannelPermutationLeavesMapUnchanged) {
  const auto net = Net1d::build(small_config(), 11);
  Rng rng(6);
  const auto r = compute_cam(net, random_beat(rng), 1, {}, true);
  const auto& v = r.activations;
  const auto& w = r.gradients;
  std::vector<std::size_t> perm(v.channels);
  for (std::size_t c = 0; c < perm.size(); ++c) perm[c] = perm.size() - 1 - c;
  rng.shuffle(perm.begin(), perm.end());
  for (std::size_t t = 0; t < v.length; ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c < v.channels; ++c) s += v(0, perm[c], t) * w(0, perm[c], t);
    EXPECT_NEAR(std::max(0.0, s), r.raw_map[t], 1e-12 * (1.0 + std::abs(s)));
  }
}

TEST(Cam, ErrorsOnBadInput) {
  const auto net = Net1d::build(small_config(), 1);
  Rng rng(1);
  const auto beat = random_beat(rng);
  EXPECT_THROW(compute_cam(net, beat, 2), Error);
  EXPECT_THROW(compute_cam(net, beat, 1, "stage9.block0"), Error);
  EXPECT_THROW(compute_cam(net, std::vector<float>{}, 1), Error);
}

TEST(Upsample, LinearPixelCentres) {
  const std::vector<double> v{0.0, 1.0};
  const auto u = upsample_linear(v, 4);
  const std::vector<double> want{0.0, 0.25, 0.75, 1.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(u[i], want[i], 1e-15);
  const auto same = upsample_linear(std::vector<double>{3.0, 1.0, 2.0}, 3);
  EXPECT_EQ(same, (std::vector<double>{3.0, 1.0, 2.0}));
  EXPECT_EQ(upsample_linear(std::vector<double>{7.0}, 5), std::vector<double>(5, 7.0));
}

TEST(RenderCam, SidecarRoundTrips) {
  TempDir dir;
  const auto net = Net1d::build(small_config(), 2);
  Rng rng(8);
  const auto beat = random_beat(rng);
  const auto r = compute_cam(net, beat, 1);
  render_cam(dir / "c.svg", dir / "c.csv", beat, r);
  const auto rows = load_cam_csv(dir / "c.csv");
  ASSERT_EQ(rows.size(), 200u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].index, i);
    EXPECT_EQ(rows[i].saliency, r.upsampled_map[i]);
    EXPECT_EQ(static_cast<float>(rows[i].sample), beat[i]);
    EXPECT_EQ(rows[i].color, saliency_color(r.upsampled_map[i]));
  }
  EXPECT_NE(read_file(dir / "c.svg").find("<svg"), std::string::npos);
}

TEST(RenderCam, MonotoneMapGivesMonotoneRamp) {
  TempDir dir;
  CamResult r;
  r.source_layer = "x";
  std::vector<float> beat(200);
  for (std::size_t i = 0; i < 200; ++i) {
    beat[i] = static_cast<float>(std::sin(0.1 * static_cast<double>(i)));
    r.upsampled_map.push_back(static_cast<double>(i) / 199.0);
  }
  render_cam(dir / "m.svg", dir / "m.csv", beat, r);
  const auto rows = load_cam_csv(dir / "m.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(red_channel(rows[i].color), red_channel(rows[i - 1].color));
  EXPECT_EQ(red_channel(rows.front().color), 0);
  EXPECT_EQ(red_channel(rows.back().color), 255);
}

TEST(RenderCam, ZeroMapIsUniformColor) {
  TempDir dir;
  CamResult r;
  r.upsampled_map.assign(200, 0.0);
  const std::vector<float> beat(200, 0.5f);
  render_cam(dir / "z.svg", dir / "z.csv", beat, r);
  const auto rows = load_cam_csv(dir / "z.csv");
  for (const auto& row : rows) EXPECT_EQ(row.color, rows.front().color);
  CamResult bad;
  bad.upsampled_map.assign(10, 0.0);
  EXPECT_THROW(render_cam(dir / "b.svg", dir / "b.csv", beat, bad), Error);
}
