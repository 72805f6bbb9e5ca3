#include "vibealign/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "vibealign/rng.hpp"

namespace vibealign {
namespace {

constexpr double kTranslationTravelLimitMm = 25.0;
constexpr double kRotationTravelLimitDeg = 75.0;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std (n-1), 0 when n < 2
  double max = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
    out.max = std::max(out.max, x);
  }
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(MotionMode mode) {
  return mode == MotionMode::Translation ? "translation" : "rotation";
}

MotionMode mode_from_string(const std::string& name) {
  if (name == "translation") return MotionMode::Translation;
  if (name == "rotation") return MotionMode::Rotation;
  throw ConfigError("unknown motion mode '" + name + "' (translation|rotation)");
}

SimulatedProbe::SimulatedProbe(const Phantom& phantom, ProbeState initial,
                               std::uint64_t noise_seed)
    : phantom_(phantom), pose_(initial), noise_seed_(noise_seed) {}

void SimulatedProbe::move(double delta) {
  if (pose_.mode == MotionMode::Translation) {
    pose_.delta_p_mm =
        std::clamp(pose_.delta_p_mm + delta, -kTranslationTravelLimitMm, kTranslationTravelLimitMm);
  } else {
    pose_.delta_theta_deg =
        std::clamp(pose_.delta_theta_deg + delta, -kRotationTravelLimitDeg, kRotationTravelLimitDeg);
  }
}

FrameSequence SimulatedProbe::acquire(int num_frames) {
  const FrameSequence seq = phantom_.generate_sequence(
      pose_, num_frames, time_, RandomStream::mix(noise_seed_, acquisitions_));
  ++acquisitions_;
  time_ += num_frames / phantom_.config().frame_rate_hz;
  return seq;
}

void SweepSpec::validate() const {
  if (offsets.empty() || seeds.empty() || repeats < 1) {
    throw ConfigError("sweep needs offsets, seeds and repeats >= 1");
  }
  for (size_t i = 1; i < offsets.size(); ++i) {
    if (!(offsets[i] > offsets[i - 1])) {
      throw ConfigError("sweep offsets must be strictly increasing");
    }
  }
  phantom.validate();
  validate_band(band, phantom.frame_rate_hz);
}

std::vector<SweepPoint> run_attenuation_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepPoint> table(spec.offsets.size());

  for (size_t oi = 0; oi < spec.offsets.size(); ++oi) {
    std::vector<double> energies;
    energies.reserve(spec.seeds.size() * static_cast<size_t>(spec.repeats));
    for (size_t si = 0; si < spec.seeds.size(); ++si) {
      PhantomConfig cfg = spec.phantom;
      cfg.rng_seed = spec.seeds[si];
      const Phantom phantom(cfg);
      const ProbeState pose = spec.mode == MotionMode::Translation
                                  ? ProbeState::translation(spec.offsets[oi])
                                  : ProbeState::rotation(spec.offsets[oi]);
      for (int rep = 0; rep < spec.repeats; ++rep) {
        const std::uint64_t stream =
            RandomStream::mix(RandomStream::mix(spec.seeds[si], oi), rep);
        const FrameSequence seq =
            phantom.generate_sequence(pose, spec.frames_per_measurement, 0.0, stream);
        energies.push_back(average_energy(energy_map(seq, spec.band)).e_avg);
      }
    }
    const MeanStd ms = mean_std(energies);
    table[oi] = {spec.offsets[oi], ms.mean, ms.std, 0.0, 0.0,
                 static_cast<int>(energies.size())};
  }

  double peak_mean = 0.0;
  for (const SweepPoint& p : table) peak_mean = std::max(peak_mean, p.mean_energy);
  for (SweepPoint& p : table) {
    p.normalized_mean = peak_mean > 0.0 ? p.mean_energy / peak_mean : 0.0;
    p.normalized_std = peak_mean > 0.0 ? p.std_energy / peak_mean : 0.0;
  }
  return table;
}

void RestorationExperiment::validate() const {
  if (initial_offsets.empty() || trials_per_offset < 1) {
    throw ConfigError("restoration experiment needs offsets and trials_per_offset >= 1");
  }
  for (double off : initial_offsets) {
    if (off == 0.0) throw ConfigError("restoration offsets must be nonzero");
  }
  phantom.validate();
  controller.validate();
  if (controller.mode != mode) {
    throw ConfigError("controller mode does not match the experiment mode");
  }
}

ExperimentOutcome run_restoration_experiment(const RestorationExperiment& exp) {
  exp.validate();
  ExperimentOutcome out;
  std::vector<double> pooled;

  for (size_t oi = 0; oi < exp.initial_offsets.size(); ++oi) {
    const double offset = exp.initial_offsets[oi];
    std::vector<double> errors;
    for (int trial = 0; trial < exp.trials_per_offset; ++trial) {
      const std::uint64_t seed = RandomStream::mix(exp.base_seed, oi * 1000 + trial);
      PhantomConfig cfg = exp.phantom;
      cfg.rng_seed = seed;
      const Phantom phantom(cfg);
      const ProbeState initial = exp.mode == MotionMode::Translation
                                     ? ProbeState::translation(offset)
                                     : ProbeState::rotation(offset);
      SimulatedProbe probe(phantom, initial, RandomStream::mix(seed, 0x6e6f697365ULL));

      RestorationResult result = run_alignment(probe, probe, exp.controller);
      result.final_true_offset = probe.pose().offset();

      const double error = std::abs(result.final_true_offset);
      errors.push_back(error);
      pooled.push_back(error);
      out.trials.push_back(
          {exp.mode, offset, seed, error, result.iterations, result.termination,
           std::move(result)});
    }
    const MeanStd ms = mean_std(errors);
    out.stats.per_offset.push_back(
        {offset, ms.mean, ms.std, ms.max, static_cast<int>(errors.size())});
  }

  const MeanStd ms = mean_std(pooled);
  out.stats.pooled_mean = ms.mean;
  out.stats.pooled_std = ms.std;
  out.stats.pooled_max = ms.max;
  out.stats.n = static_cast<int>(pooled.size());
  return out;
}

ControllerConfig default_controller(const PhantomConfig& phantom, MotionMode mode,
                                    int frames_per_measurement) {
  const Phantom oracle(noiseless(phantom));
  ControllerConfig cfg;
  cfg.mode = mode;
  cfg.frames_per_measurement = frames_per_measurement;

  if (mode == MotionMode::Translation) {
    cfg.direction_step = 0.5;          // [mm]
    cfg.step_clamp = {0.1, 1.0};       // [mm]
    cfg.max_iterations = 50;
    // Gain from the energy curve's slope mid-range. The target step keeps
    // k_p below the overshoot-contraction bound 4 / (peak_energy * max_step);
    // a hotter gain can lock into a max-step bounce around the peak.
    const double drop =
        oracle.ground_truth_energy(ProbeState::translation(2.5), frames_per_measurement) -
        oracle.ground_truth_energy(ProbeState::translation(3.0), frames_per_measurement);
    cfg.k_p = 0.375 / std::abs(drop);
  } else {
    cfg.direction_step = 1.0;          // [deg]
    cfg.step_clamp = {0.25, 2.5};      // [deg]
    // The rotational curve is flatter, so the march in from large offsets
    // runs near the minimum step; allow more iterations.
    cfg.max_iterations = 100;
    const double drop =
        oracle.ground_truth_energy(ProbeState::rotation(7.5), frames_per_measurement) -
        oracle.ground_truth_energy(ProbeState::rotation(8.5), frames_per_measurement);
    cfg.k_p = 0.8 / std::abs(drop);
  }
  return cfg;
}

SnapshotRun snapshot_sequence(const Phantom& phantom, ProbeState initial,
                              const ControllerConfig& cfg, std::uint64_t noise_seed,
                              double heatmap_floor_percentile) {
  // Wrap the source so every acquisition is also rendered into a snapshot.
  struct RecordingProbe final : ProbeActuator, ImageSource {
    SimulatedProbe inner;
    const Phantom& phantom;
    const BandpassSpec& band;
    double floor;
    std::vector<Snapshot>* out;

    RecordingProbe(const Phantom& ph, ProbeState init, std::uint64_t seed,
                   const BandpassSpec& b, double fl, std::vector<Snapshot>* o)
        : inner(ph, init, seed), phantom(ph), band(b), floor(fl), out(o) {}

    void move(double delta) override { inner.move(delta); }
    FrameSequence acquire(int num_frames) override {
      const ProbeState pose = inner.pose();
      FrameSequence seq = inner.acquire(num_frames);
      Snapshot snap;
      snap.measurement_index = static_cast<int>(out->size());
      snap.true_offset = pose.offset();
      snap.visibility = phantom.visibility_factor(pose);
      const EnergyMap map = energy_map(seq, band);
      snap.e_avg = average_energy(map).e_avg;
      snap.heatmap = heatmap_for_display(map, floor);
      snap.frame = Image(seq.height, seq.width);
      const std::span<const float> first = seq.frame(0);
      std::copy(first.begin(), first.end(), snap.frame.pixels.begin());
      out->push_back(std::move(snap));
      return seq;
    }
  };

  SnapshotRun run;
  RecordingProbe probe(phantom, initial, noise_seed, cfg.passband, heatmap_floor_percentile,
                       &run.snapshots);
  run.result = run_alignment(probe, probe, cfg);
  run.result.final_true_offset = probe.inner.pose().offset();
  for (size_t i = 0; i < run.snapshots.size() && i < run.result.trajectory.size(); ++i) {
    run.snapshots[i].cumulative_displacement = run.result.trajectory[i].cumulative_displacement;
  }
  return run;
}

void write_sweep_csv(const std::vector<SweepPoint>& table, std::ostream& out) {
  out << "offset,mean_e_avg,std_e_avg,normalized_mean,normalized_std,samples\n";
  for (const SweepPoint& p : table) {
    out << fmt(p.offset) << ',' << fmt(p.mean_energy) << ',' << fmt(p.std_energy) << ','
        << fmt(p.normalized_mean) << ',' << fmt(p.normalized_std) << ',' << p.samples << '\n';
  }
}

std::vector<SweepPoint> read_sweep_csv(std::istream& in) {
  std::vector<SweepPoint> table;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SweepPoint p;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    if (!(row >> p.offset >> p.mean_energy >> p.std_energy >> p.normalized_mean >>
          p.normalized_std >> p.samples)) {
      throw IoError(IoError::Code::BadHeader, "malformed sweep CSV row: " + line);
    }
    table.push_back(p);
  }
  return table;
}

void write_trials_csv(const std::vector<TrialRecord>& trials, std::ostream& out) {
  out << "mode,initial_offset,seed,final_error,iterations,termination\n";
  for (const TrialRecord& t : trials) {
    out << to_string(t.mode) << ',' << fmt(t.initial_offset) << ',' << t.seed << ','
        << fmt(t.final_error) << ',' << t.iterations << ',' << to_string(t.termination) << '\n';
  }
}

void write_stats_csv(const ErrorStatistics& stats, std::ostream& out) {
  out << "group,mean_error,std_error,max_error,n\n";
  for (const OffsetStats& s : stats.per_offset) {
    out << fmt(s.offset) << ',' << fmt(s.mean_error) << ',' << fmt(s.std_error) << ','
        << fmt(s.max_error) << ',' << s.n << '\n';
  }
  out << "pooled," << fmt(stats.pooled_mean) << ',' << fmt(stats.pooled_std) << ','
      << fmt(stats.pooled_max) << ',' << stats.n << '\n';
}

}  // namespace vibealign
