#pragma once

#include <iosfwd>
#include <vector>

#include "vibealign/phantom.hpp"
#include "vibealign/spectral.hpp"
#include "vibealign/types.hpp"

namespace vibealign {

struct StepClamp {
  double min_step = 0.1;  // [mm or deg]
  double max_step = 1.0;  // [mm or deg]
};

struct ControllerConfig {
  MotionMode mode = MotionMode::Translation;
  double k_p = 0.0;                   // proportional gain [mm-or-deg per energy unit]
  double direction_step = 0.5;        // phase-1 probe step S [mm or deg]
  double energy_threshold = 0.0;      // absolute termination threshold; 0 = relative rule
  double energy_threshold_fraction = 0.005;  // relative rule: fraction of the running max energy
  double low_energy_fraction = 0.20;  // local-maximum guard, fraction of the running max
  BandpassSpec passband;
  int frames_per_measurement = 60;
  StepClamp step_clamp;
  int max_iterations = 50;

  void validate() const;  // throws ConfigError
};

/// Moves the probe along the single configured axis; returns once settled.
class ProbeActuator {
 public:
  virtual ~ProbeActuator() = default;
  virtual void move(double delta) = 0;  // signed [mm or deg]
};

/// Blocking frame acquisition at the current probe pose.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual FrameSequence acquire(int num_frames) = 0;
};

enum class Termination { Converged, MaxIterations };

const char* to_string(Termination t);

/// One measurement in the trajectory log. commanded_step is the move executed
/// before this measurement (0 for the starting one); e_diff is the energy
/// difference that produced that step.
struct TrajectoryPoint {
  int iteration = 0;                  // measurement index, 0-based
  int phase = 1;                      // 1 = direction determination, 2 = elimination
  double commanded_step = 0.0;        // signed [mm or deg]
  double cumulative_displacement = 0.0;
  double e_avg = 0.0;
  double e_diff = 0.0;
  int direction = 0;                  // sign of the commanded step
  bool low_energy_hold = false;       // threshold met but the low-energy filter blocked exit
};

struct RestorationResult {
  std::vector<TrajectoryPoint> trajectory;  // size = iterations + 2
  int iterations = 0;                       // phase-2 moves executed
  Termination termination = Termination::MaxIterations;
  double energy_threshold_used = 0.0;       // threshold in force at termination
  double low_energy_reference = 0.0;        // running max E_Avg at termination
  double final_true_offset = 0.0;           // filled by the simulation harness
};

/// Controller failure (actuator refusal, acquisition error); carries the
/// measurements collected before the failure.
class ControllerAbort : public std::runtime_error {
 public:
  ControllerAbort(const std::string& msg, RestorationResult partial)
      : std::runtime_error(msg), partial_result(std::move(partial)) {}
  RestorationResult partial_result;
};

struct DirectionDecision {
  int direction = 1;        // +1 = same sense as the probe step, -1 = reverse
  double energy_before = 0.0;
  double energy_after = 0.0;
};

/// Phase 1: measure, step by +direction_step, measure again. Returns +1 when
/// the energy rose (or tied), -1 when it fell.
DirectionDecision determine_direction(ProbeActuator& actuator, ImageSource& source,
                                      const ControllerConfig& cfg);

/// Phase 2 alone, bootstrapping its own initial measurement pair.
RestorationResult eliminate_misalignment(ProbeActuator& actuator, ImageSource& source,
                                         const ControllerConfig& cfg, int direction);

/// Full alignment restoration: phase 1 then phase 2, sharing measurements.
RestorationResult run_alignment(ProbeActuator& actuator, ImageSource& source,
                                const ControllerConfig& cfg);

/// Trajectory log as CSV with header:
/// iteration,phase,commanded_step,cumulative_displacement,e_avg,e_diff,direction,terminated,flag
void write_trajectory_csv(const RestorationResult& result, std::ostream& out);

}  // namespace vibealign
