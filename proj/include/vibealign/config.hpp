#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "vibealign/controller.hpp"
#include "vibealign/harness.hpp"
#include "vibealign/phantom.hpp"
#include "vibealign/spectral.hpp"

namespace vibealign {

/// Controller keys present in the config file; anything absent falls back to
/// the per-mode defaults derived from the phantom energy curve.
struct ControllerOverrides {
  std::optional<double> k_p;
  std::optional<double> direction_step;
  std::optional<double> energy_threshold;
  std::optional<double> energy_threshold_fraction;
  std::optional<double> low_energy_fraction;
  std::optional<int> frames_per_measurement;
  std::optional<double> min_step;
  std::optional<double> max_step;
  std::optional<int> max_iterations;
};

struct SweepSection {
  std::vector<double> translation_offsets = {0.5, 1.0, 1.5, 2.0, 2.5,
                                             3.0, 3.5, 4.0, 4.5, 5.0};  // [mm]
  std::vector<double> rotation_offsets = {2.5, 5.0, 7.5, 10.0, 12.5};   // [deg]
  int repeats = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

struct RestoreSection {
  std::vector<double> translation_offsets = {1.0, 1.5, 2.0, 2.5, 3.0};  // [mm]
  std::vector<double> rotation_offsets = {2.5, 5.0, 7.5, 10.0, 12.5};   // [deg]
  int trials_per_offset = 4;
};

struct RunConfig {
  PhantomConfig phantom;
  BandpassSpec band;
  ControllerOverrides controller;
  SweepSection sweep;
  RestoreSection restore;
  double heatmap_floor_percentile = 0.7;
};

/// Parses the key=value section format. Unknown sections or keys are
/// rejected; missing keys keep their defaults.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

/// Per-mode controller defaults with the file overrides applied on top.
ControllerConfig resolve_controller(const RunConfig& cfg, MotionMode mode);

/// Echoes the fully resolved configuration (re-parseable).
void write_effective_config(const RunConfig& cfg, const ControllerConfig& controller,
                            MotionMode mode, std::ostream& out);

}  // namespace vibealign
