#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "vibealign/controller.hpp"
#include "vibealign/phantom.hpp"
#include "vibealign/spectral.hpp"

namespace vibealign {

/// Phantom-backed actuator + image source for closed-loop runs. Each
/// acquisition advances time (continuous vibration phase) and draws a fresh
/// noise realization from the per-trial stream.
class SimulatedProbe final : public ProbeActuator, public ImageSource {
 public:
  SimulatedProbe(const Phantom& phantom, ProbeState initial, std::uint64_t noise_seed);

  void move(double delta) override;
  FrameSequence acquire(int num_frames) override;

  const ProbeState& pose() const { return pose_; }
  int acquisitions() const { return acquisitions_; }

 private:
  const Phantom& phantom_;
  ProbeState pose_;
  std::uint64_t noise_seed_;
  int acquisitions_ = 0;
  double time_ = 0.0;
};

/// Attenuation sweep protocol: E_Avg versus misalignment offset.
struct SweepSpec {
  MotionMode mode = MotionMode::Translation;
  std::vector<double> offsets;            // strictly increasing [mm or deg]
  int repeats = 1;                        // noise realizations per seed
  std::vector<std::uint64_t> seeds;       // one phantom instance per seed
  PhantomConfig phantom;
  BandpassSpec band;
  int frames_per_measurement = 60;

  void validate() const;
};

struct SweepPoint {
  double offset = 0.0;
  double mean_energy = 0.0;       // raw E_Avg mean over seeds x repeats
  double std_energy = 0.0;
  double normalized_mean = 0.0;   // divided by the sweep's maximum mean
  double normalized_std = 0.0;
  int samples = 0;
};

std::vector<SweepPoint> run_attenuation_sweep(const SweepSpec& spec);

/// Restoration-error grid protocol: offset the probe, run the controller,
/// record the residual ground-truth misalignment.
struct RestorationExperiment {
  MotionMode mode = MotionMode::Translation;
  std::vector<double> initial_offsets;    // all nonzero [mm or deg]
  int trials_per_offset = 4;
  ControllerConfig controller;
  PhantomConfig phantom;
  std::uint64_t base_seed = 1;

  void validate() const;
};

struct TrialRecord {
  MotionMode mode;
  double initial_offset;
  std::uint64_t seed;
  double final_error;             // |final true offset|
  int iterations;
  Termination termination;
  RestorationResult result;
};

struct OffsetStats {
  double offset;
  double mean_error;
  double std_error;               // sample std, 0 for a single trial
  double max_error;
  int n;
};

struct ErrorStatistics {
  std::vector<OffsetStats> per_offset;
  double pooled_mean = 0.0;
  double pooled_std = 0.0;
  double pooled_max = 0.0;
  int n = 0;
};

struct ExperimentOutcome {
  ErrorStatistics stats;
  std::vector<TrialRecord> trials;
};

ExperimentOutcome run_restoration_experiment(const RestorationExperiment& exp);

/// Controller defaults tuned against the phantom's analytic energy curve:
/// the gain follows the curve's slope at a mid-range offset pair, the other
/// parameters take the per-mode defaults.
ControllerConfig default_controller(const PhantomConfig& phantom, MotionMode mode,
                                    int frames_per_measurement = 60);

/// (frame, heatmap, pose) capture at one controller measurement.
struct Snapshot {
  int measurement_index = 0;
  double cumulative_displacement = 0.0;
  double true_offset = 0.0;
  double visibility = 0.0;        // phantom needle visibility factor at this pose
  double e_avg = 0.0;
  Image frame;                    // first frame of the acquisition
  Image heatmap;
};

struct SnapshotRun {
  std::vector<Snapshot> snapshots;
  RestorationResult result;
};

/// Runs one alignment trial while capturing a snapshot per measurement.
SnapshotRun snapshot_sequence(const Phantom& phantom, ProbeState initial,
                              const ControllerConfig& cfg, std::uint64_t noise_seed,
                              double heatmap_floor_percentile = 0.7);

// CSV emitters (%.17g, so values round-trip exactly).
void write_sweep_csv(const std::vector<SweepPoint>& table, std::ostream& out);
void write_trials_csv(const std::vector<TrialRecord>& trials, std::ostream& out);
void write_stats_csv(const ErrorStatistics& stats, std::ostream& out);

std::vector<SweepPoint> read_sweep_csv(std::istream& in);

const char* to_string(MotionMode mode);
MotionMode mode_from_string(const std::string& name);

}  // namespace vibealign
