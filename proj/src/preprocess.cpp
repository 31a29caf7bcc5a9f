#include "beatrisk/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "beatrisk/error.hpp"

namespace beatrisk {

using cplx = std::complex<double>;

void validate(const FilterSpec& spec) {
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << "invalid filter spec (low=" << spec.low_hz << ", high=" << spec.high_hz << ", order=" << spec.order
       << ", fs=" << spec.fs << "): " << what;
    throw Error(os.str());
  };
  if (!(spec.fs > 0.0)) fail("fs must be positive");
  if (!(spec.low_hz > 0.0)) fail("low_hz must be > 0");
  if (!(spec.low_hz < spec.high_hz)) fail("low_hz must be < high_hz");
  if (!(spec.high_hz < spec.fs / 2.0)) fail("high_hz must be < fs/2");
  if (spec.order < 1) fail("order must be >= 1");
}

SosFilter design_bandpass(const FilterSpec& spec) {
  validate(spec);
  const int n = spec.order;
  const double fs2 = 2.0 * spec.fs;
  const double w1 = fs2 * std::tan(M_PI * spec.low_hz / spec.fs);
  const double w2 = fs2 * std::tan(M_PI * spec.high_hz / spec.fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Analog bandpass poles grouped into conjugate pairs (or real pairs).
  std::vector<std::pair<cplx, cplx>> pairs;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, M_PI * (2.0 * k + n + 1) / (2.0 * n));
    const cplx a = p * bw / 2.0;
    const cplx d = std::sqrt(a * a - w0sq);
    const cplx s1 = a + d;
    const cplx s2 = a - d;
    if (p.imag() > 1e-12) {
      pairs.emplace_back(s1, std::conj(s1));
      pairs.emplace_back(s2, std::conj(s2));
    } else if (std::abs(p.imag()) <= 1e-12) {
      pairs.emplace_back(s1, s2);
    }
  }

  auto bilinear = [fs2](cplx s) { return (fs2 + s) / (fs2 - s); };
  // N zeros at s=0 map to z=1, N zeros at infinity map to z=-1.
  cplx gain = std::pow(bw * fs2, n);
  SosFilter out;
  for (const auto& [pa, pb] : pairs) {
    gain /= (fs2 - pa) * (fs2 - pb);
    const cplx za = bilinear(pa);
    const cplx zb = bilinear(pb);
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;
    q.a1 = -(za + zb).real();
    q.a2 = (za * zb).real();
    out.sections.push_back(q);
  }
  const double k = gain.real();
  out.sections.front().b0 *= k;
  out.sections.front().b1 *= k;
  out.sections.front().b2 *= k;
  return out;
}

cplx frequency_response(const SosFilter& filter, double freq_hz, double fs) {
  const cplx zinv = std::polar(1.0, -2.0 * M_PI * freq_hz / fs);
  cplx h = 1.0;
  for (const auto& q : filter.sections) {
    h *= (q.b0 + zinv * (q.b1 + zinv * q.b2)) / (1.0 + zinv * (q.a1 + zinv * q.a2));
  }
  return h;
}

void sos_filter_inplace(const SosFilter& filter, std::span<double> x, std::vector<std::array<double, 2>> state) {
  state.resize(filter.sections.size(), {0.0, 0.0});
  for (std::size_t s = 0; s < filter.sections.size(); ++s) {
    const Biquad& q = filter.sections[s];
    double z1 = state[s][0];
    double z2 = state[s][1];
    for (double& v : x) {
      const double in = v;
      const double y = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * y + z2;
      z2 = q.b2 * in - q.a2 * y;
      v = y;
    }
  }
}

namespace {

// Steady-state section states for a constant input of value `level`.
std::vector<std::array<double, 2>> steady_state(const SosFilter& filter, double level) {
  std::vector<std::array<double, 2>> out;
  double u = level;
  for (const auto& q : filter.sections) {
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double z2 = (q.b2 - q.a2 * g) * u;
    const double z1 = (q.b1 - q.a1 * g) * u + z2;
    out.push_back({z1, z2});
    u *= g;
  }
  return out;
}

}  // namespace

std::vector<double> filter_signal(std::span<const double> samples, const FilterSpec& spec) {
  if (samples.empty()) throw Error("filter_signal: empty input");
  const SosFilter filter = design_bandpass(spec);
  const std::size_t n = samples.size();
  std::size_t pad = 3 * (2 * filter.sections.size() + 1);
  if (pad >= n) pad = n - 1;

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * samples[0] - samples[pad - i];
    ext[pad + n + i] = 2.0 * samples[n - 1] - samples[n - 2 - i];
  }
  std::copy(samples.begin(), samples.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  sos_filter_inplace(filter, ext, steady_state(filter, ext.front()));
  std::reverse(ext.begin(), ext.end());
  sos_filter_inplace(filter, ext, steady_state(filter, ext.front()));
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

EcgRecordBundle preprocess_record(const EcgRecordBundle& record, const FilterSpec& spec) {
  EcgRecordBundle out = record;
  if (record.samples.empty()) return out;
  FilterSpec s = spec;
  s.fs = record.fs;
  const std::vector<double> x(record.samples.begin(), record.samples.end());
  const auto y = filter_signal(x, s);
  for (std::size_t i = 0; i < y.size(); ++i) out.samples[i] = static_cast<float>(y[i]);
  return out;
}

}  // namespace beatrisk
