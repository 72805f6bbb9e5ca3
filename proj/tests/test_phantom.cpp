#include "vibealign/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "vibealign/rng.hpp"
#include "vibealign/spectral.hpp"

using namespace vibealign;

namespace {

double measured_e_avg(const Phantom& phantom, const ProbeState& pose, int frames,
                      std::uint64_t stream = 0) {
  const FrameSequence seq = phantom.generate_sequence(pose, frames, 0.0, stream);
  return average_energy(energy_map(seq, BandpassSpec{})).e_avg;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n = xs.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<int> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  double d2 = 0.0;
  for (size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (static_cast<double>(n) * (n * n - 1.0));
}

}  // namespace

TEST_CASE("config validation") {
  PhantomConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  SUBCASE("Nyquist guard") {
    cfg.frame_rate_hz = 4.0;  // exactly 2 * vibration frequency, still too low
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.frame_rate_hz = 3.9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("span bounds") {
    cfg.needle_span_end = cfg.image_width + 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("decay scales") {
    cfg.visibility_sigma_mm = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("amplitude range") {
    cfg.vibration_intensity_amplitude = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("rendering is deterministic") {
  const Phantom phantom{PhantomConfig{}};
  const ProbeState pose = ProbeState::translation(1.0);
  const Image a = phantom.render_frame(pose, 0.4, 77);
  const Image b = phantom.render_frame(pose, 0.4, 77);
  CHECK(a.pixels == b.pixels);
  const Image c = phantom.render_frame(pose, 0.4, 78);
  CHECK(a.pixels != c.pixels);

  const FrameSequence s1 = phantom.generate_sequence(pose, 8, 0.0, 5);
  const FrameSequence s2 = phantom.generate_sequence(pose, 8, 0.0, 5);
  CHECK(s1.data == s2.data);
}

TEST_CASE("sequence preconditions and timing") {
  const Phantom phantom{PhantomConfig{}};
  CHECK_THROWS_AS(phantom.generate_sequence(ProbeState::translation(0.0), 1), InputError);
  CHECK_THROWS_AS(phantom.render_frame(ProbeState::translation(0.0), -0.1, 0), InputError);

  // 60 frames at 30 Hz: 2 s, so the 2 Hz vibration completes 4 full cycles
  // and frame k matches a fresh render at t = k / 30.
  const Phantom quiet{noiseless(PhantomConfig{})};
  const ProbeState pose = ProbeState::translation(0.5);
  const FrameSequence seq = quiet.generate_sequence(pose, 60);
  CHECK(seq.frame_count() == 60);
  const Image mid = quiet.render_frame(pose, 31.0 / 30.0, 0);
  for (int j = 0; j < seq.width; ++j) {
    CHECK(seq.at(31, 100, j) == mid.at(100, j));
  }
}

TEST_CASE("in-plane needle is bright, out-of-plane needle vanishes") {
  const PhantomConfig cfg = noiseless(PhantomConfig{});
  const Phantom phantom(cfg);

  // Aligned, t = 0 (vibration term zero): needle row >= 0.8 * peak brightness.
  const Image aligned = phantom.render_frame(ProbeState::translation(0.0), 0.0, 0);
  for (int j = cfg.needle_span_begin; j < cfg.needle_span_end; ++j) {
    CHECK(aligned.at(cfg.needle_depth_px, j) >= 0.8f * 0.26f);
  }

  // 3 mm out of plane with visibility_sigma 1.2 mm: brightness factor
  // exp(-(3/1.2)^2) ~ 0.002, invisible against the tissue.
  const double v3 = phantom.visibility_factor(ProbeState::translation(3.0));
  CHECK(v3 == doctest::Approx(std::exp(-std::pow(3.0 / 1.2, 2))).epsilon(1e-12));
  CHECK(v3 < 0.01);

  // At t = 0 the vibration term vanishes, so aligned minus far on the needle
  // row isolates the brightness loss: (1 - v3) * peak.
  const Image far = phantom.render_frame(ProbeState::translation(3.0), 0.0, 0);
  for (int j = cfg.needle_span_begin; j < cfg.needle_span_end; ++j) {
    const double drop = aligned.at(cfg.needle_depth_px, j) - far.at(cfg.needle_depth_px, j);
    CHECK(drop == doctest::Approx((1.0 - v3) * 0.26).epsilon(1e-4));
  }

  // The vibration term survives the same offset: a quarter-period frame
  // differs from the t = 0 frame by the full modulation amplitude.
  const Image crest = phantom.render_frame(ProbeState::translation(3.0), 0.125, 0);
  float max_modulation = 0.0f;
  for (int j = cfg.needle_span_begin; j < cfg.needle_span_end; ++j) {
    max_modulation = std::max(
        max_modulation, std::abs(crest.at(cfg.needle_depth_px, j) - far.at(cfg.needle_depth_px, j)));
  }
  CHECK(max_modulation > 0.02f);
}

TEST_CASE("temporal variance on the needle row drops with offset") {
  const Phantom phantom{noiseless(PhantomConfig{})};
  const PhantomConfig& cfg = phantom.config();
  auto row_variance = [&](double offset) {
    const FrameSequence seq = phantom.generate_sequence(ProbeState::translation(offset), 60);
    double total = 0.0;
    for (int j = 0; j < cfg.image_width; ++j) {
      double mean = 0.0;
      for (int t = 0; t < 60; ++t) mean += seq.at(t, cfg.needle_depth_px, j);
      mean /= 60.0;
      double var = 0.0;
      for (int t = 0; t < 60; ++t) {
        const double d = seq.at(t, cfg.needle_depth_px, j) - mean;
        var += d * d;
      }
      total += var / 60.0;
    }
    return total;
  };
  CHECK(row_variance(0.0) > row_variance(5.0));
}

TEST_CASE("ground truth energy closed form") {
  const Phantom phantom{noiseless(PhantomConfig{})};
  const double sigma_t = phantom.config().vibration_sigma_translation_mm;

  SUBCASE("global maximum at zero offset, monotone decay") {
    double prev = phantom.ground_truth_energy(ProbeState::translation(0.0), 60);
    for (double off = 0.5; off <= 5.01; off += 0.5) {
      const double e = phantom.ground_truth_energy(ProbeState::translation(off), 60);
      CHECK(e < prev);
      prev = e;
    }
    CHECK(phantom.ground_truth_energy(ProbeState::translation(1.0), 60) >
          phantom.ground_truth_energy(ProbeState::translation(2.0), 60));
    CHECK(phantom.ground_truth_energy(ProbeState::translation(2.0), 60) >
          phantom.ground_truth_energy(ProbeState::translation(3.0), 60));
  }
  SUBCASE("offset = sigma gives exactly 1/e of the aligned value") {
    const double at_zero = phantom.ground_truth_energy(ProbeState::translation(0.0), 60);
    const double at_sigma = phantom.ground_truth_energy(ProbeState::translation(sigma_t), 60);
    CHECK(at_sigma / at_zero == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SUBCASE("rotation decay is monotone") {
    double prev = phantom.ground_truth_energy(ProbeState::rotation(0.0), 60);
    for (double off = 2.5; off <= 12.51; off += 2.5) {
      const double e = phantom.ground_truth_energy(ProbeState::rotation(off), 60);
      CHECK(e < prev);
      prev = e;
    }
  }
  SUBCASE("rotation beyond 90 degrees is rejected") {
    CHECK_THROWS_AS(phantom.ground_truth_energy(ProbeState::rotation(95.0), 60), InputError);
  }
}

TEST_CASE("noiseless measured energy matches the analytic value within 2%") {
  const Phantom phantom{noiseless(PhantomConfig{})};
  for (double off : {0.0, 1.0, 2.0, 3.0}) {
    const ProbeState pose = ProbeState::translation(off);
    const double measured = measured_e_avg(phantom, pose, 60);
    const double expected = phantom.ground_truth_energy(pose, 60);
    CHECK(std::abs(measured - expected) / expected < 0.02);
  }
  for (double off : {0.0, 5.0, 10.0}) {
    const ProbeState pose = ProbeState::rotation(off);
    const double measured = measured_e_avg(phantom, pose, 60);
    const double expected = phantom.ground_truth_energy(pose, 60);
    CHECK(std::abs(measured - expected) / expected < 0.02);
  }
}

TEST_CASE("noiseless measured sweep is strictly decreasing") {
  const Phantom phantom{noiseless(PhantomConfig{})};
  double prev = measured_e_avg(phantom, ProbeState::translation(0.0), 60);
  for (double off = 0.5; off <= 5.01; off += 0.5) {
    const double e = measured_e_avg(phantom, ProbeState::translation(off), 60);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("noisy rank correlation versus offset (smoke, 3 seeds)") {
  std::vector<double> offsets;
  for (double off = 0.0; off <= 5.01; off += 0.5) offsets.push_back(off);
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    PhantomConfig cfg;
    cfg.rng_seed = seed;
    const Phantom phantom(cfg);
    std::vector<double> energies;
    for (size_t i = 0; i < offsets.size(); ++i) {
      energies.push_back(measured_e_avg(phantom, ProbeState::translation(offsets[i]), 60,
                                        RandomStream::mix(seed, i)));
    }
    CHECK(spearman(offsets, energies) <= -0.95);
  }
}

TEST_CASE("visibility factor in rotation averages the per-column decay") {
  const Phantom phantom{noiseless(PhantomConfig{})};
  CHECK(phantom.visibility_factor(ProbeState::rotation(0.0)) == doctest::Approx(1.0));
  const double v_small = phantom.visibility_factor(ProbeState::rotation(0.9));
  const double v_large = phantom.visibility_factor(ProbeState::rotation(12.5));
  CHECK(v_small > 0.8);
  CHECK(v_large < 0.5);
  CHECK(v_large > 0.0);
}
