#include "vibealign/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vibealign/rng.hpp"

namespace vibealign {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;
constexpr double kDegToRad = std::numbers::pi_v<double> / 180.0;
constexpr double kNeedleBrightness = 0.26;
constexpr double kNeedleRowSigmaPx = 0.9;
constexpr double kTissueBase = 0.36;
constexpr int kNoiseTableBits = 12;  // 4096-entry quantile tables
constexpr std::uint64_t kTissueTag = 0x7469737375ULL;
constexpr std::uint64_t kGainTag = 0x6761696eULL;
constexpr std::uint64_t kShaftTag = 0x7368616674ULL;

// Acklam's rational approximation of the standard normal quantile,
// |relative error| < 1.15e-9. Used once to build the sampling tables.
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Table lookup with linear interpolation; u in [0,1).
inline float sample_table(const std::vector<float>& table, double u) {
  const double x = u * static_cast<double>(table.size() - 1);
  const size_t i = std::min(static_cast<size_t>(x), table.size() - 2);
  const double frac = x - static_cast<double>(i);
  return static_cast<float>(table[i] + frac * (table[i + 1] - table[i]));
}

}  // namespace

ProbeState ProbeState::translation(double delta_p_mm) {
  ProbeState s;
  s.mode = MotionMode::Translation;
  s.delta_p_mm = delta_p_mm;
  return s;
}

ProbeState ProbeState::rotation(double delta_theta_deg) {
  ProbeState s;
  s.mode = MotionMode::Rotation;
  s.delta_theta_deg = delta_theta_deg;
  return s;
}

void PhantomConfig::validate() const {
  std::ostringstream msg;
  if (image_height < 2 || image_width < 2) {
    msg << "image size " << image_height << "x" << image_width << " too small";
  } else if (!(mm_per_pixel > 0.0)) {
    msg << "mm_per_pixel must be positive";
  } else if (!(vibration_frequency_hz > 0.0)) {
    msg << "vibration_frequency must be positive";
  } else if (!(frame_rate_hz > 2.0 * vibration_frequency_hz)) {
    msg << "frame_rate " << frame_rate_hz << " Hz violates the Nyquist requirement (> "
        << 2.0 * vibration_frequency_hz << " Hz for a " << vibration_frequency_hz
        << " Hz vibration)";
  } else if (!(vibration_intensity_amplitude > 0.0) || vibration_intensity_amplitude > 1.0) {
    msg << "vibration_intensity_amplitude must lie in (0, 1]";
  } else if (!(visibility_sigma_mm > 0.0) || !(vibration_sigma_translation_mm > 0.0) ||
             !(vibration_sigma_rotation_deg > 0.0) || !(tissue_halo_lambda_px > 0.0)) {
    msg << "all decay scales must be strictly positive";
  } else if (speckle_level < 0.0 || additive_noise_level < 0.0) {
    msg << "noise levels must be non-negative";
  } else if (needle_depth_px < 0 || needle_depth_px >= image_height) {
    msg << "needle_depth_px " << needle_depth_px << " outside image rows";
  } else if (needle_span_begin < 0 || needle_span_begin >= needle_span_end ||
             needle_span_end > image_width) {
    msg << "needle span [" << needle_span_begin << ", " << needle_span_end
        << ") outside image columns";
  } else {
    return;
  }
  throw ConfigError("phantom config: " + msg.str());
}

PhantomConfig noiseless(PhantomConfig cfg) {
  cfg.speckle_level = 0.0;
  cfg.additive_noise_level = 0.0;
  return cfg;
}

Phantom::Phantom(PhantomConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int h = cfg_.image_height;
  const int w = cfg_.image_width;
  const size_t px = static_cast<size_t>(h) * w;

  // Tissue texture: a few low-frequency gratings around the base level.
  tissue_.resize(px);
  {
    RandomStream rng(RandomStream::mix(cfg_.rng_seed, kTissueTag));
    constexpr int kGratings = 4;
    const double amp[kGratings] = {0.03, 0.025, 0.015, 0.01};
    double kx[kGratings], ky[kGratings], phase[kGratings];
    for (int m = 0; m < kGratings; ++m) {
      const double wavelength = rng.next_in(40.0, 120.0);
      const double dir = rng.next_in(0.0, std::numbers::pi_v<double>);
      kx[m] = std::cos(dir) / wavelength;
      ky[m] = std::sin(dir) / wavelength;
      phase[m] = rng.next_in(0.0, kTwoPi);
    }
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double v = kTissueBase;
        for (int m = 0; m < kGratings; ++m) {
          v += amp[m] * std::cos(kTwoPi * (i * ky[m] + j * kx[m]) + phase[m]);
        }
        tissue_[static_cast<size_t>(i) * w + j] = static_cast<float>(v);
      }
    }
  }

  // Needle brightness mask: a thin horizontal segment.
  needle_.assign(px, 0.0f);
  for (int i = std::max(0, cfg_.needle_depth_px - 3);
       i <= std::min(h - 1, cfg_.needle_depth_px + 3); ++i) {
    const double di = i - cfg_.needle_depth_px;
    const double profile = std::exp(-di * di / (2.0 * kNeedleRowSigmaPx * kNeedleRowSigmaPx));
    for (int j = cfg_.needle_span_begin; j < cfg_.needle_span_end; ++j) {
      needle_[static_cast<size_t>(i) * w + j] = static_cast<float>(kNeedleBrightness * profile);
    }
  }

  // Vibration amplitude profile along the shaft, fixed per insertion. The
  // leading wave spans exactly one period over the needle, so a full-span
  // average (translation) cancels it while the narrower column window seen
  // under rotation does not; that gives rotational energy readings the
  // larger seed-to-seed spread observed at matched decay.
  std::vector<double> shaft(w);
  {
    RandomStream rng(RandomStream::mix(cfg_.rng_seed, kShaftTag));
    constexpr int kWaves = 3;
    const double span = cfg_.needle_span_end - cfg_.needle_span_begin;
    const double amp[kWaves] = {0.15, 0.08, 0.04};
    double freq[kWaves], phase[kWaves];
    freq[0] = 1.0 / span;
    phase[0] = rng.next_in(0.0, kTwoPi);
    for (int m = 1; m < kWaves; ++m) {
      freq[m] = 1.0 / rng.next_in(span / 5.0, span / 2.0);
      phase[m] = rng.next_in(0.0, kTwoPi);
    }
    for (int j = 0; j < w; ++j) {
      double v = 1.0;
      for (int m = 0; m < kWaves; ++m) {
        v += amp[m] * std::cos(kTwoPi * freq[m] * j + phase[m]);
      }
      shaft[j] = v;
    }
  }

  // Vibration field: halo decay from the needle segment times the fixed
  // per-pixel gain and the shaft profile.
  halo_gain_.resize(px);
  hg2_colsum_.assign(w, 0.0);
  {
    RandomStream rng(RandomStream::mix(cfg_.rng_seed, kGainTag));
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double dx = j < cfg_.needle_span_begin ? cfg_.needle_span_begin - j
                          : j >= cfg_.needle_span_end ? j - (cfg_.needle_span_end - 1)
                                                      : 0;
        const double dy = i - cfg_.needle_depth_px;
        const double r = std::hypot(dx, dy);
        const double halo = std::exp(-r / cfg_.tissue_halo_lambda_px);
        const double gain = rng.next_in(0.5, 1.5);
        const double hg = halo * gain * shaft[j];
        halo_gain_[static_cast<size_t>(i) * w + j] = static_cast<float>(hg);
        hg2_colsum_[j] += hg * hg;
      }
    }
  }

  // Noise quantile tables (shared normal table, lognormal baked with sigma).
  const size_t n = (size_t{1} << kNoiseTableBits) + 1;
  gauss_table_.resize(n);
  speckle_table_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n + 1);
    const double z = inverse_normal_cdf(u);
    gauss_table_[i] = static_cast<float>(z);
    speckle_table_[i] = static_cast<float>(std::exp(cfg_.speckle_level * z));
  }
}

std::vector<double> Phantom::amplitude_profile(const ProbeState& pose) const {
  const int w = cfg_.image_width;
  const double amp = cfg_.vibration_intensity_amplitude;
  const double sigma_t = cfg_.vibration_sigma_translation_mm;
  std::vector<double> a(w);
  if (pose.mode == MotionMode::Translation) {
    const double dp = pose.delta_p_mm;
    std::fill(a.begin(), a.end(), amp * std::exp(-dp * dp / (2.0 * sigma_t * sigma_t)));
    return a;
  }
  const double theta = pose.delta_theta_deg;
  if (std::abs(theta) >= 90.0) {
    throw InputError("rotation offset beyond +/-90 degrees");
  }
  const double sigma_r = cfg_.vibration_sigma_rotation_deg;
  const double yaw = amp * std::exp(-theta * theta / (2.0 * sigma_r * sigma_r));
  const double slope = std::tan(theta * kDegToRad) * cfg_.mm_per_pixel;
  const double pivot = (w - 1) / 2.0;
  for (int j = 0; j < w; ++j) {
    const double d = slope * (j - pivot);  // local out-of-plane offset [mm]
    a[j] = yaw * std::exp(-d * d / (2.0 * sigma_t * sigma_t));
  }
  return a;
}

std::vector<double> Phantom::visibility_profile(const ProbeState& pose) const {
  const int w = cfg_.image_width;
  const double vs = cfg_.visibility_sigma_mm;
  std::vector<double> v(w);
  if (pose.mode == MotionMode::Translation) {
    const double dp = pose.delta_p_mm;
    std::fill(v.begin(), v.end(), std::exp(-(dp * dp) / (vs * vs)));
    return v;
  }
  const double theta = pose.delta_theta_deg;
  if (std::abs(theta) >= 90.0) {
    throw InputError("rotation offset beyond +/-90 degrees");
  }
  const double slope = std::tan(theta * kDegToRad) * cfg_.mm_per_pixel;
  const double pivot = (w - 1) / 2.0;
  for (int j = 0; j < w; ++j) {
    const double d = slope * (j - pivot);
    v[j] = std::exp(-(d * d) / (vs * vs));
  }
  return v;
}

Image Phantom::render_frame(const ProbeState& pose, double t_seconds,
                            std::uint64_t noise_stream) const {
  if (t_seconds < 0.0) {
    throw InputError("frame time must be non-negative");
  }
  const int h = cfg_.image_height;
  const int w = cfg_.image_width;
  const std::vector<double> a_col = amplitude_profile(pose);
  const std::vector<double> v_col = visibility_profile(pose);
  const float s_t = static_cast<float>(std::sin(kTwoPi * cfg_.vibration_frequency_hz * t_seconds));

  Image frame(h, w);
  const bool speckle = cfg_.speckle_level > 0.0;
  const bool additive = cfg_.additive_noise_level > 0.0;
  RandomStream rng(RandomStream::mix(cfg_.rng_seed, noise_stream));
  const float add_sigma = static_cast<float>(cfg_.additive_noise_level);

  for (int i = 0; i < h; ++i) {
    const size_t row = static_cast<size_t>(i) * w;
    for (int j = 0; j < w; ++j) {
      const size_t p = row + j;
      float v = tissue_[p] + static_cast<float>(v_col[j]) * needle_[p] +
                static_cast<float>(a_col[j]) * halo_gain_[p] * s_t;
      if (speckle) {
        v *= sample_table(speckle_table_, rng.next_unit());
      }
      if (additive) {
        v += add_sigma * sample_table(gauss_table_, rng.next_unit());
      }
      frame.pixels[p] = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return frame;
}

FrameSequence Phantom::generate_sequence(const ProbeState& pose, int num_frames, double t0,
                                         std::uint64_t noise_stream) const {
  if (num_frames < 2) {
    std::ostringstream msg;
    msg << "sequence needs at least 2 frames, got " << num_frames;
    throw InputError(msg.str());
  }
  FrameSequence seq;
  seq.height = cfg_.image_height;
  seq.width = cfg_.image_width;
  seq.frame_rate = cfg_.frame_rate_hz;
  seq.timestamp_origin = t0;
  seq.data.reserve(static_cast<size_t>(num_frames) * cfg_.image_height * cfg_.image_width);
  for (int k = 0; k < num_frames; ++k) {
    const Image frame = render_frame(pose, t0 + k / cfg_.frame_rate_hz,
                                     RandomStream::mix(noise_stream, k));
    seq.data.insert(seq.data.end(), frame.pixels.begin(), frame.pixels.end());
  }
  return seq;
}

double Phantom::ground_truth_energy(const ProbeState& pose, int num_frames) const {
  if (num_frames < 2) {
    throw InputError("ground truth window needs at least 2 frames");
  }
  const std::vector<double> a_col = amplitude_profile(pose);
  double sum = 0.0;
  for (int j = 0; j < cfg_.image_width; ++j) {
    sum += a_col[j] * a_col[j] * hg2_colsum_[j];
  }
  const double pixels = static_cast<double>(cfg_.image_height) * cfg_.image_width;
  return sum * (num_frames / 2.0) / pixels;
}

double Phantom::visibility_factor(const ProbeState& pose) const {
  const std::vector<double> v_col = visibility_profile(pose);
  if (pose.mode == MotionMode::Translation) {
    return v_col.front();
  }
  double sum = 0.0;
  for (int j = cfg_.needle_span_begin; j < cfg_.needle_span_end; ++j) {
    sum += v_col[j];
  }
  return sum / (cfg_.needle_span_end - cfg_.needle_span_begin);
}

}  // namespace vibealign
