#pragma once

#include <span>
#include <vector>

#include "vibealign/types.hpp"

namespace vibealign {

/// How band edges are treated. Only the strict open interval is implemented;
/// the enum keeps a half-open variant a local change.
enum class BoundaryRule { Exclusive };

/// Temporal passband. Bins with f_low < f < f_high (strict open interval,
/// DC and Nyquist always excluded) are kept; everything else is zeroed.
struct BandpassSpec {
  double f_low = 1.5;   // [Hz]
  double f_high = 2.5;  // [Hz]
  BoundaryRule boundary_rule = BoundaryRule::Exclusive;
};

/// Throws ConfigError unless 0 < f_low < f_high < frame_rate / 2.
void validate_band(const BandpassSpec& band, double frame_rate);

/// Per-pixel passband signal energies for one measurement window.
struct EnergyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // height * width, all >= 0
  int source_frames = 0;
  double source_frame_rate = 0.0;

  double at(int i, int j) const { return values[static_cast<size_t>(i) * width + j]; }
};

/// Scalar image-wide feedback signal: mean per-pixel passband energy.
struct EnergyMetric {
  double e_avg = 0.0;
};

/// Positive-frequency DFT bin indices k (1 <= k < T/2) whose frequency
/// k * frame_rate / T lies strictly inside the passband.
std::vector<int> passband_bins(int num_frames, double frame_rate, const BandpassSpec& band);

/// Literal filtering path: real part of iDFT(mask * DFT(signal)), with the
/// mask keeping in-band bins and their conjugate mirrors.
std::vector<double> bandpass_filter_pixel(std::span<const double> signal, double frame_rate,
                                          const BandpassSpec& band);

/// Sum of squared samples of a filtered series.
double pixel_energy(std::span<const double> filtered);

/// Frequency-domain fast path: passband energy of one pixel series without
/// the inverse transform, (2/T) * sum_k |X_k|^2 over in-band bins.
/// Agrees with pixel_energy(bandpass_filter_pixel(...)) by Parseval.
double pixel_band_energy(std::span<const double> signal, double frame_rate,
                         const BandpassSpec& band);

/// Per-pixel passband energy over the whole sequence (fast path).
EnergyMap energy_map(const FrameSequence& seq, const BandpassSpec& band);

/// Mean of all map entries.
EnergyMetric average_energy(const EnergyMap& map);

/// Display post-processing: entries below the floor_percentile quantile are
/// zeroed, the rest divided by the map maximum. All-zero maps stay zero.
Image heatmap_for_display(const EnergyMap& map, double floor_percentile);

}  // namespace vibealign
