#include "vibealign/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace vibealign {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

void require_window(size_t num_frames) {
  if (num_frames < 2) {
    std::ostringstream msg;
    msg << "signal window too short: " << num_frames << " frames (need >= 2)";
    throw InputError(msg.str());
  }
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    double re = 0.0, im = 0.0;
    for (size_t t = 0; t < n; ++t) {
      const double a = kTwoPi * static_cast<double>(k) * static_cast<double>(t) / n;
      re += x[t] * std::cos(a);
      im -= x[t] * std::sin(a);
    }
    out[k] = {re, im};
  }
  return out;
}

// The DC bin is always outside the passband, so removing the temporal mean
// changes nothing analytically; it keeps constant signals at exactly zero
// energy instead of leaving cancellation residue.
std::vector<double> mean_removed(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> out(x.size());
  for (size_t t = 0; t < x.size(); ++t) out[t] = x[t] - mean;
  return out;
}

}  // namespace

void validate_band(const BandpassSpec& band, double frame_rate) {
  if (!(frame_rate > 0.0)) {
    throw ConfigError("frame rate must be positive");
  }
  if (!(band.f_low > 0.0) || !(band.f_low < band.f_high) || !(band.f_high < frame_rate / 2.0)) {
    std::ostringstream msg;
    msg << "passband (" << band.f_low << ", " << band.f_high
        << ") Hz invalid for frame rate " << frame_rate << " Hz (need 0 < f_low < f_high < "
        << frame_rate / 2.0 << ")";
    throw ConfigError(msg.str());
  }
}

std::vector<int> passband_bins(int num_frames, double frame_rate, const BandpassSpec& band) {
  require_window(static_cast<size_t>(std::max(num_frames, 0)));
  validate_band(band, frame_rate);
  std::vector<int> bins;
  // k and its mirror T-k share the folded frequency k*fs/T; only 1..ceil(T/2)-1
  // can fall inside an open band below Nyquist.
  for (int k = 1; 2 * k < num_frames; ++k) {
    const double f = static_cast<double>(k) * frame_rate / num_frames;
    if (f > band.f_low && f < band.f_high) {
      bins.push_back(k);
    }
  }
  return bins;
}

std::vector<double> bandpass_filter_pixel(std::span<const double> signal, double frame_rate,
                                          const BandpassSpec& band) {
  require_window(signal.size());
  const int n = static_cast<int>(signal.size());
  const std::vector<int> keep = passband_bins(n, frame_rate, band);

  const std::vector<std::complex<double>> spectrum = dft(mean_removed(signal));

  // Inverse transform over the kept bins only; the mirror bin T-k carries the
  // conjugate coefficient, so the pair sums to a purely real contribution.
  std::vector<double> out(signal.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k : keep) {
      const double a = kTwoPi * static_cast<double>(k) * static_cast<double>(t) / n;
      acc += 2.0 * (spectrum[k].real() * std::cos(a) - spectrum[k].imag() * std::sin(a));
    }
    out[t] = acc / n;
  }
  return out;
}

double pixel_energy(std::span<const double> filtered) {
  double e = 0.0;
  for (double v : filtered) e += v * v;
  return e;
}

double pixel_band_energy(std::span<const double> signal, double frame_rate,
                         const BandpassSpec& band) {
  require_window(signal.size());
  const int n = static_cast<int>(signal.size());
  const std::vector<int> keep = passband_bins(n, frame_rate, band);
  const std::vector<double> centered = mean_removed(signal);

  double e = 0.0;
  for (int k : keep) {
    double re = 0.0, im = 0.0;
    for (int t = 0; t < n; ++t) {
      const double a = kTwoPi * static_cast<double>(k) * static_cast<double>(t) / n;
      re += centered[t] * std::cos(a);
      im -= centered[t] * std::sin(a);
    }
    e += 2.0 * (re * re + im * im);  // bin k plus its conjugate mirror
  }
  return e / n;
}

EnergyMap energy_map(const FrameSequence& seq, const BandpassSpec& band) {
  const int frames = seq.frame_count();
  require_window(static_cast<size_t>(std::max(frames, 0)));
  const std::vector<int> keep = passband_bins(frames, seq.frame_rate, band);

  const size_t px = static_cast<size_t>(seq.height) * seq.width;
  EnergyMap map;
  map.height = seq.height;
  map.width = seq.width;
  map.source_frames = frames;
  map.source_frame_rate = seq.frame_rate;
  map.values.assign(px, 0.0);

  // Per-pixel temporal means, removed before the projections (the DC bin is
  // outside the band; this keeps constant pixels at exactly zero energy).
  std::vector<double> mean(px, 0.0);
  for (int t = 0; t < frames; ++t) {
    const std::span<const float> f = seq.frame(t);
    for (size_t p = 0; p < px; ++p) mean[p] += f[p];
  }
  for (size_t p = 0; p < px; ++p) mean[p] /= frames;

  // Frame-major accumulation: one pass over the cube per kept bin keeps the
  // inner loop contiguous in memory.
  std::vector<double> re(px), im(px);
  for (int k : keep) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (int t = 0; t < frames; ++t) {
      const double a = kTwoPi * static_cast<double>(k) * static_cast<double>(t) / frames;
      const double c = std::cos(a);
      const double s = -std::sin(a);
      const std::span<const float> f = seq.frame(t);
      for (size_t p = 0; p < px; ++p) {
        re[p] += c * (f[p] - mean[p]);
        im[p] += s * (f[p] - mean[p]);
      }
    }
    for (size_t p = 0; p < px; ++p) {
      map.values[p] += 2.0 * (re[p] * re[p] + im[p] * im[p]) / frames;
    }
  }
  return map;
}

EnergyMetric average_energy(const EnergyMap& map) {
  double sum = 0.0;
  for (double v : map.values) sum += v;
  const size_t n = map.values.size();
  return EnergyMetric{n == 0 ? 0.0 : sum / static_cast<double>(n)};
}

Image heatmap_for_display(const EnergyMap& map, double floor_percentile) {
  if (!(floor_percentile >= 0.0) || !(floor_percentile < 1.0)) {
    throw ConfigError("floor_percentile must lie in [0, 1)");
  }
  Image out(map.height, map.width);
  if (map.values.empty()) return out;

  const double peak = *std::max_element(map.values.begin(), map.values.end());
  if (!(peak > 0.0)) return out;  // all-zero map stays all-zero

  std::vector<double> sorted(map.values);
  const size_t idx = std::min(static_cast<size_t>(floor_percentile * sorted.size()),
                              sorted.size() - 1);
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  const double floor = sorted[idx];

  for (size_t p = 0; p < map.values.size(); ++p) {
    const double v = map.values[p];
    out.pixels[p] = v < floor ? 0.0f : static_cast<float>(v / peak);
  }
  return out;
}

}  // namespace vibealign
