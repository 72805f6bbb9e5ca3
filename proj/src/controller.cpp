#include "vibealign/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace vibealign {
namespace {

// Shared phase machinery. Every acquisition goes through measure() so the
// trajectory log and the running maximum stay consistent.
class Session {
 public:
  Session(ProbeActuator& actuator, ImageSource& source, const ControllerConfig& cfg)
      : actuator_(actuator), source_(source), cfg_(cfg) {
    cfg_.validate();
  }

  double measure() {
    double e = 0.0;
    try {
      const FrameSequence seq = source_.acquire(cfg_.frames_per_measurement);
      e = average_energy(energy_map(seq, cfg_.passband)).e_avg;
    } catch (const ControllerAbort&) {
      throw;
    } catch (const std::exception& ex) {
      abort(std::string("acquisition failed: ") + ex.what());
    }
    low_energy_reference_ = std::max(low_energy_reference_, e);
    return e;
  }

  void move(double delta) {
    try {
      actuator_.move(delta);
    } catch (const std::exception& ex) {
      abort(std::string("actuator refused move: ") + ex.what());
    }
    cumulative_ += delta;
  }

  void log(int phase, double commanded_step, double e_avg, double e_diff, int direction,
           bool hold) {
    result_.trajectory.push_back({static_cast<int>(result_.trajectory.size()), phase,
                                  commanded_step, cumulative_, e_avg, e_diff, direction, hold});
  }

  [[noreturn]] void abort(const std::string& why) {
    const int moves = std::max(0, static_cast<int>(result_.trajectory.size()) - 2);
    throw ControllerAbort(why, finalize(Termination::MaxIterations, moves));
  }

  double threshold() const {
    return cfg_.energy_threshold > 0.0
               ? cfg_.energy_threshold
               : cfg_.energy_threshold_fraction * low_energy_reference_;
  }

  double low_energy_filter() const { return cfg_.low_energy_fraction * low_energy_reference_; }

  // Phase 1. Exact ties keep the probe-step sense (+1).
  DirectionDecision determine_direction() {
    const double e0 = measure();
    log(1, 0.0, e0, 0.0, 0, false);
    move(cfg_.direction_step);
    const double e1 = measure();
    log(1, cfg_.direction_step, e1, 0.0, 1, false);
    const double e_diff = e0 - e1;
    return {e_diff > 0.0 ? -1 : 1, e0, e1};
  }

  // Phase 2. prev/last are the two most recent measurements (prev older).
  RestorationResult eliminate(int direction, double prev, double last) {
    int iterations = 0;
    while (true) {
      const double e_diff = prev - last;
      if (std::abs(e_diff) < threshold()) {
        if (last > low_energy_filter()) {
          return finalize(Termination::Converged, iterations);
        }
        hold_next_ = true;  // local-maximum guard: keep moving
      }
      if (iterations >= cfg_.max_iterations) {
        return finalize(Termination::MaxIterations, iterations);
      }
      const double step =
          std::clamp(cfg_.k_p * std::abs(e_diff), cfg_.step_clamp.min_step,
                     cfg_.step_clamp.max_step);
      move(direction * step);
      const double e_new = measure();
      log(2, direction * step, e_new, e_diff, direction, hold_next_);
      hold_next_ = false;
      ++iterations;
      if (e_new < last) {
        direction = -direction;  // the step lost energy: overshoot, reverse
      }
      prev = last;
      last = e_new;
    }
  }

  RestorationResult finalize(Termination t, int iterations) {
    result_.iterations = iterations;
    result_.termination = t;
    result_.energy_threshold_used = threshold();
    result_.low_energy_reference = low_energy_reference_;
    return std::move(result_);
  }

 private:
  ProbeActuator& actuator_;
  ImageSource& source_;
  ControllerConfig cfg_;
  RestorationResult result_;
  double cumulative_ = 0.0;
  double low_energy_reference_ = 0.0;
  bool hold_next_ = false;
};

}  // namespace

void ControllerConfig::validate() const {
  std::ostringstream msg;
  if (!(k_p > 0.0)) {
    msg << "k_p must be positive (got " << k_p << ")";
  } else if (!(direction_step > 0.0)) {
    msg << "direction_step must be positive";
  } else if (energy_threshold < 0.0) {
    msg << "energy_threshold must be non-negative";
  } else if (energy_threshold == 0.0 &&
             (!(energy_threshold_fraction > 0.0) || energy_threshold_fraction >= 1.0)) {
    msg << "energy_threshold_fraction must lie in (0, 1)";
  } else if (!(low_energy_fraction > 0.0) || low_energy_fraction >= 1.0) {
    msg << "low_energy_fraction must lie in (0, 1)";
  } else if (frames_per_measurement < 2) {
    msg << "frames_per_measurement must be at least 2";
  } else if (!(step_clamp.min_step > 0.0) || step_clamp.min_step > step_clamp.max_step) {
    msg << "step clamp needs 0 < min_step <= max_step";
  } else if (max_iterations < 1) {
    msg << "max_iterations must be at least 1";
  } else {
    return;
  }
  throw ConfigError("controller config: " + msg.str());
}

const char* to_string(Termination t) {
  return t == Termination::Converged ? "Converged" : "MaxIterations";
}

DirectionDecision determine_direction(ProbeActuator& actuator, ImageSource& source,
                                      const ControllerConfig& cfg) {
  Session session(actuator, source, cfg);
  return session.determine_direction();
}

RestorationResult eliminate_misalignment(ProbeActuator& actuator, ImageSource& source,
                                         const ControllerConfig& cfg, int direction) {
  Session session(actuator, source, cfg);
  // Bootstrap the measurement pair phase 1 would otherwise provide.
  const double e0 = session.measure();
  session.log(2, 0.0, e0, 0.0, 0, false);
  session.move(direction * cfg.direction_step);
  const double e1 = session.measure();
  session.log(2, direction * cfg.direction_step, e1, 0.0, direction, false);
  return session.eliminate(direction, e0, e1);
}

RestorationResult run_alignment(ProbeActuator& actuator, ImageSource& source,
                                const ControllerConfig& cfg) {
  Session session(actuator, source, cfg);
  const DirectionDecision decision = session.determine_direction();
  return session.eliminate(decision.direction, decision.energy_before, decision.energy_after);
}

void write_trajectory_csv(const RestorationResult& result, std::ostream& out) {
  out << "iteration,phase,commanded_step,cumulative_displacement,e_avg,e_diff,direction,"
         "terminated,flag\n";
  char buf[128];
  for (const TrajectoryPoint& p : result.trajectory) {
    const bool is_last = p.iteration == static_cast<int>(result.trajectory.size()) - 1;
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%d,", p.iteration, p.phase,
                  p.commanded_step, p.cumulative_displacement, p.e_avg, p.e_diff, p.direction);
    out << buf << (is_last ? to_string(result.termination) : "") << ','
        << (p.low_energy_hold ? "low_energy_hold" : "") << '\n';
  }
}

}  // namespace vibealign
