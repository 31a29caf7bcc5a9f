#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "beatrisk/record.hpp"

namespace beatrisk {

struct FilterSpec {
  double low_hz = 0.5;
  double high_hz = 50.0;
  int order = 4;  // lowpass prototype order; the bandpass has 2*order poles
  double fs = 200.0;
};

void validate(const FilterSpec& spec);

/// Direct-form II transposed biquad, a0 normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct SosFilter {
  std::vector<Biquad> sections;
};

/// Butterworth bandpass via analog prototype, lowpass-to-bandpass
/// transform and bilinear mapping with prewarped band edges.
SosFilter design_bandpass(const FilterSpec& spec);

std::complex<double> frequency_response(const SosFilter& filter, double freq_hz, double fs);

/// One causal pass starting from the given per-section state.
void sos_filter_inplace(const SosFilter& filter, std::span<double> x,
                        std::vector<std::array<double, 2>> state);

/// Zero-phase forward/backward application with odd-reflection padding and
/// steady-state initial conditions. Output length equals input length.
std::vector<double> filter_signal(std::span<const double> samples, const FilterSpec& spec);

/// Filters the samples of a record; annotations are left untouched.
EcgRecordBundle preprocess_record(const EcgRecordBundle& record, const FilterSpec& spec);

}  // namespace beatrisk
