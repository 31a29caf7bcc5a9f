#include "beatrisk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "beatrisk/error.hpp"
#include "beatrisk/rng.hpp"

namespace beatrisk {

namespace {

void add_wave(std::vector<double>& x, std::int64_t r, const WaveComponent& w, double scale = 1.0) {
  const double centre = static_cast<double>(r) + w.offset;
  const auto lo = static_cast<std::int64_t>(std::floor(centre - 5.0 * w.sigma));
  const auto hi = static_cast<std::int64_t>(std::ceil(centre + 5.0 * w.sigma));
  const auto n = static_cast<std::int64_t>(x.size());
  for (std::int64_t t = std::max<std::int64_t>(0, lo); t <= std::min(n - 1, hi); ++t) {
    const double d = (static_cast<double>(t) - centre) / w.sigma;
    x[static_cast<std::size_t>(t)] += scale * w.amplitude * std::exp(-0.5 * d * d);
  }
}

constexpr std::size_t kHead = 10;  // default skip_head
constexpr std::size_t kTail = 5;   // default skip_tail
constexpr std::size_t kAfRun = 6;

EcgRecordBundle make_record(std::size_t index, int label, std::size_t sinus, Rng& rng) {
  // Types of the usable ordinals, then padding beats on both sides.
  std::vector<BeatType> usable(sinus, BeatType::normal);
  if (label == 1) {
    usable.insert(usable.begin() + static_cast<std::ptrdiff_t>(sinus / 4), BeatType::atrial);
    usable.insert(usable.begin() + static_cast<std::ptrdiff_t>(sinus / 2 + 1), BeatType::ventricular);
    usable.insert(usable.begin() + static_cast<std::ptrdiff_t>(3 * sinus / 4 + 2), kAfRun, BeatType::other);
  }
  std::vector<BeatType> types(kHead - 1, BeatType::normal);
  types.insert(types.end(), usable.begin(), usable.end());
  types.insert(types.end(), kTail, BeatType::normal);

  // R-peak placement.
  std::vector<std::int64_t> rpeaks;
  std::int64_t r = kSynthFirstR;
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (i > 0) {
      double rr = kSynthRR + rng.uniform(-kSynthRRJitter, kSynthRRJitter);
      switch (types[i]) {
        case BeatType::atrial:
          rr *= 0.7;
          break;
        case BeatType::ventricular:
          rr *= 0.65;
          break;
        case BeatType::other:
          rr = rng.uniform(90.0, 170.0);
          break;
        case BeatType::normal:
          if (types[i - 1] == BeatType::ventricular) rr *= 1.35;
          break;
      }
      r += static_cast<std::int64_t>(std::lround(rr));
    }
    rpeaks.push_back(r);
  }
  const auto n = static_cast<std::size_t>(rpeaks.back() + kSynthRR);

  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto ri = rpeaks[i];
    switch (types[i]) {
      case BeatType::normal: {
        const double p = label == 1 ? rng.uniform(0.0, 0.5) : 1.0;
        const double t = label == 1 ? rng.uniform(0.3, 1.0) : 1.0;
        add_wave(x, ri, kSynthP, p);
        add_wave(x, ri, kSynthQ);
        add_wave(x, ri, kSynthR);
        add_wave(x, ri, kSynthS);
        add_wave(x, ri, kSynthT, t);
        break;
      }
      case BeatType::atrial:
        add_wave(x, ri, {0.10, -28.0, 4.0});
        add_wave(x, ri, kSynthQ);
        add_wave(x, ri, kSynthR);
        add_wave(x, ri, kSynthS);
        add_wave(x, ri, kSynthT);
        break;
      case BeatType::ventricular:
        add_wave(x, ri, {1.20, 0.0, 7.0});
        add_wave(x, ri, {-0.40, 14.0, 6.0});
        add_wave(x, ri, {-0.35, 70.0, 14.0});
        break;
      case BeatType::other:
        add_wave(x, ri, kSynthQ);
        add_wave(x, ri, kSynthR);
        add_wave(x, ri, kSynthS);
        add_wave(x, ri, kSynthT);
        break;
    }
  }

  EcgRecordBundle rec;
  char id[32];
  std::snprintf(id, sizeof id, "SYN%03zu", index);
  rec.record_id = id;
  rec.fs = 200;
  rec.rpeaks = rpeaks;
  rec.beat_types = types;
  rec.patient_label = label;

  if (label == 1) {
    const auto first = std::find(types.begin(), types.end(), BeatType::other) - types.begin();
    const Interval af{rpeaks[static_cast<std::size_t>(first)] - 40,
                      rpeaks[static_cast<std::size_t>(first) + kAfRun - 1] + 40};
    rec.af_episodes.push_back(af);
    // Fibrillatory baseline inside the episode.
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (auto t = af.start; t < af.end; ++t) {
      x[static_cast<std::size_t>(t)] += 0.04 * std::sin(2.0 * M_PI * 7.0 * static_cast<double>(t) / 200.0 + phase);
    }
  }

  rec.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) rec.samples[t] = static_cast<float>(x[t] + kSynthNoiseSigma * rng.normal());
  return rec;
}

}  // namespace

std::vector<EcgRecordBundle> generate_synthetic(std::size_t n_patients, std::size_t beats_per_patient,
                                                std::uint64_t seed) {
  if (n_patients < 2) throw Error("synthetic: at least 2 patients required");
  if (n_patients > 1000) throw Error("synthetic: at most 1000 patients supported");
  Rng rng(seed);
  std::vector<EcgRecordBundle> out;
  out.reserve(n_patients);
  for (std::size_t i = 0; i < n_patients; ++i) {
    out.push_back(make_record(i, static_cast<int>(i % 2), beats_per_patient, rng));
  }
  return out;
}

}  // namespace beatrisk
