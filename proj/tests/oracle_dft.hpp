#pragma once

// Test-side brute-force reference for the spectral pipeline. Kept independent
// of the library implementation on purpose: full complex DFT over all bins,
// explicit mask on the folded frequency, full complex inverse.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace oracle {

inline std::vector<std::complex<double>> full_dft(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t t = 0; t < n; ++t) {
      const double a = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                       static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<std::complex<double>> full_idft(std::span<const std::complex<double>> x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t t = 0; t < n; ++t) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t k = 0; k < n; ++k) {
      const double a = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                       static_cast<double>(n);
      acc += x[k] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[t] = acc / static_cast<double>(n);
  }
  return out;
}

/// Masked spectrum: keep every bin (including mirrors) whose folded frequency
/// lies strictly inside (f_low, f_high).
inline std::vector<std::complex<double>> masked_spectrum(std::span<const double> signal,
                                                         double frame_rate, double f_low,
                                                         double f_high) {
  const size_t n = signal.size();
  std::vector<std::complex<double>> spec = full_dft(signal);
  for (size_t k = 0; k < n; ++k) {
    const size_t folded = std::min(k, n - k);
    const double f = static_cast<double>(folded) * frame_rate / static_cast<double>(n);
    if (!(f > f_low && f < f_high)) {
      spec[k] = {0.0, 0.0};
    }
  }
  return spec;
}

/// Literal pipeline: iDFT(mask * DFT(signal)), then sum of squared magnitudes.
struct FilteredSignal {
  std::vector<std::complex<double>> samples;  // complex so the imaginary residue is visible
  double energy = 0.0;
  double max_imag = 0.0;
};

inline FilteredSignal bandpass_and_energy(std::span<const double> signal, double frame_rate,
                                          double f_low, double f_high) {
  FilteredSignal out;
  const auto spec = masked_spectrum(signal, frame_rate, f_low, f_high);
  out.samples = full_idft(spec);
  for (const std::complex<double>& s : out.samples) {
    out.energy += std::norm(s);
    out.max_imag = std::max(out.max_imag, std::abs(s.imag()));
  }
  return out;
}

/// Frequency-domain energy by Parseval: (1/T) * sum |masked spectrum|^2.
inline double parseval_energy(std::span<const double> signal, double frame_rate, double f_low,
                              double f_high) {
  const auto spec = masked_spectrum(signal, frame_rate, f_low, f_high);
  double acc = 0.0;
  for (const std::complex<double>& s : spec) acc += std::norm(s);
  return acc / static_cast<double>(spec.size());
}

}  // namespace oracle
