#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beatrisk/record.hpp"

namespace beatrisk {

/// Gaussian component of the beat template, relative to the R-peak.
struct WaveComponent {
  double amplitude;
  double offset;  // samples from the R-peak
  double sigma;   // samples
};

// Template at 200 Hz. Class-1 beats scale P by U(0, 0.5) and T by U(0.3, 1.0)
// independently per beat.
inline constexpr WaveComponent kSynthP{0.15, -36.0, 5.0};
inline constexpr WaveComponent kSynthQ{-0.10, -6.0, 2.0};
inline constexpr WaveComponent kSynthR{1.00, 0.0, 2.5};
inline constexpr WaveComponent kSynthS{-0.25, 6.0, 2.5};
inline constexpr WaveComponent kSynthT{0.30, 56.0, 10.0};
inline constexpr double kSynthNoiseSigma = 0.05;
inline constexpr int kSynthRR = 160;        // mean RR interval, samples
inline constexpr int kSynthRRJitter = 10;   // uniform +- jitter
inline constexpr std::int64_t kSynthFirstR = 120;

/// One record per patient, ids SYN000, SYN001, ... Patient i has label i % 2.
/// Every record yields exactly `beats_per_patient` sinus beats under the
/// default segmentation (skip 10 head / 5 tail). AF-positive records also
/// carry one A beat, one V beat and a short AF run with its episode interval.
std::vector<EcgRecordBundle> generate_synthetic(std::size_t n_patients, std::size_t beats_per_patient,
                                                std::uint64_t seed);

}  // namespace beatrisk
