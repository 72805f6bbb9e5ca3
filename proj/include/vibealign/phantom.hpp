#pragma once

#include <cstdint>
#include <vector>

#include "vibealign/types.hpp"

namespace vibealign {

enum class MotionMode { Translation, Rotation };

/// Ground-truth misalignment of the simulated probe relative to the needle
/// plane. Exactly the field matching `mode` is live; the other stays zero.
struct ProbeState {
  MotionMode mode = MotionMode::Translation;
  double delta_p_mm = 0.0;      // lateral offset, Translation mode
  double delta_theta_deg = 0.0; // yaw about the probe centerline, Rotation mode

  static ProbeState translation(double delta_p_mm);
  static ProbeState rotation(double delta_theta_deg);

  double offset() const {
    return mode == MotionMode::Translation ? delta_p_mm : delta_theta_deg;
  }
};

struct PhantomConfig {
  int image_height = 256;                        // [px]
  int image_width = 256;                         // [px]
  double mm_per_pixel = 0.2;                     // [mm]
  double frame_rate_hz = 30.0;                   // [Hz]
  int needle_depth_px = 120;                     // row of the needle axis
  int needle_span_begin = 48;                    // first needle column (inclusive)
  int needle_span_end = 208;                     // last needle column (exclusive)
  double vibration_frequency_hz = 2.0;           // [Hz]
  double vibration_intensity_amplitude = 0.15;   // peak intensity modulation, (0, 1]
  double visibility_sigma_mm = 1.2;              // needle-brightness out-of-plane decay
  double vibration_sigma_translation_mm = 2.0;   // modulation decay scale vs delta_p
  double vibration_sigma_rotation_deg = 8.0;     // modulation decay scale vs delta_theta
  double tissue_halo_lambda_px = 12.0;           // lateral decay of vibration into tissue
  double speckle_level = 0.1;                    // lognormal sigma, 0 disables
  double additive_noise_level = 0.02;            // gaussian sigma, 0 disables
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError on any violated invariant (Nyquist, ranges, span).
  void validate() const;
};

/// Same defaults with both noise sources switched off.
PhantomConfig noiseless(PhantomConfig cfg);

// Deterministic synthetic B-mode generator. Each frame is composed as
//   tissue(i,j) + V * needle(i,j) + A(col) * halo(i,j) * gain(i,j) * sin(2*pi*f*t) + noise
// where V and A decay as the imaging plane leaves the needle plane:
//   translation: V = exp(-(dp/vis_sigma)^2),  A = amp * exp(-dp^2 / (2*sigma_t^2))
//   rotation:    per-column local offset d(c) = tan(dtheta) * (c - pivot) * mm_per_pixel
//                V(c) = exp(-(d(c)/vis_sigma)^2)
//                A(c) = amp * exp(-dtheta^2 / (2*sigma_r^2)) * exp(-d(c)^2 / (2*sigma_t^2))
// halo(i,j) = exp(-r/lambda) spreads the modulation into tissue at pixel
// distance r from the needle segment; gain is a fixed per-pixel factor in
// [0.5, 1.5]. Rendering is a pure function of (config, pose, t, noise stream).
class Phantom {
 public:
  explicit Phantom(PhantomConfig cfg);

  const PhantomConfig& config() const { return cfg_; }

  /// One frame at absolute time t. noise_stream selects the realization of
  /// the (speckle, additive) noise; identical inputs give identical frames.
  Image render_frame(const ProbeState& pose, double t_seconds,
                     std::uint64_t noise_stream) const;

  /// Frames at t = t0 + k / frame_rate, k = 0..num_frames-1; the vibration
  /// phase is continuous across frames. num_frames >= 2.
  FrameSequence generate_sequence(const ProbeState& pose, int num_frames, double t0 = 0.0,
                                  std::uint64_t noise_stream = 0) const;

  /// Closed-form expected E_Avg of the noiseless phantom over a window of
  /// num_frames with the vibration tone on a DFT bin:
  /// sum of squared modulation amplitudes * T/2 / (H*W).
  /// Strictly decreasing in the magnitude of the pose offset.
  double ground_truth_energy(const ProbeState& pose, int num_frames) const;

  /// Needle brightness decay factor V at this pose (rotation: mean over the
  /// needle span). 1 when aligned, ~0 when far out of plane.
  double visibility_factor(const ProbeState& pose) const;

 private:
  std::vector<double> amplitude_profile(const ProbeState& pose) const;  // A per column
  std::vector<double> visibility_profile(const ProbeState& pose) const; // V per column

  PhantomConfig cfg_;
  std::vector<float> tissue_;      // fixed smooth texture B
  std::vector<float> needle_;      // needle brightness mask (peak baked in)
  std::vector<float> halo_gain_;   // halo * gain, the spatial modulation field
  std::vector<double> hg2_colsum_; // per-column sum of (halo * gain)^2
  std::vector<float> speckle_table_;  // lognormal factors indexed by uniform draw
  std::vector<float> gauss_table_;    // standard normal quantiles
};

}  // namespace vibealign
