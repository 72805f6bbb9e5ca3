// Command-line frontend: phantom simulation, recorded-sequence analysis, the
// closed-loop alignment controller, and the attenuation / restoration
// experiment protocols. One binary, one subcommand per task.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vibealign/config.hpp"
#include "vibealign/controller.hpp"
#include "vibealign/frame_cube.hpp"
#include "vibealign/harness.hpp"
#include "vibealign/image_io.hpp"
#include "vibealign/phantom.hpp"
#include "vibealign/rng.hpp"
#include "vibealign/spectral.hpp"

namespace fs = std::filesystem;
using namespace vibealign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;
constexpr int kExitInternal = 5;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string mode_name = "translation";
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_mode) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value sections)");
  cmd->add_option("--out-dir", opts.out_dir, "output directory (created if missing)");
  cmd->add_option("--seed", opts.seed, "overrides the phantom seed / experiment base seed");
  if (with_mode) {
    cmd->add_option("--mode", opts.mode_name, "translation | rotation")
        ->check(CLI::IsMember({"translation", "rotation"}));
  }
}

RunConfig load_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_run_config(opts.config_path);
  if (opts.seed) cfg.phantom.rng_seed = *opts.seed;
  return cfg;
}

fs::path prepare_out_dir(const CommonOptions& opts) {
  fs::path dir(opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError(IoError::Code::WriteFailed,
                  "cannot create output directory " + dir.string() + ": " + ec.message());
  }
  return dir;
}

void echo_config(const RunConfig& cfg, const ControllerConfig& controller, MotionMode mode,
                 const fs::path& dir) {
  std::ofstream out(dir / "effective_config.ini");
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "cannot write effective_config.ini");
  }
  write_effective_config(cfg, controller, mode, out);
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fill) {
  std::ofstream out(path);
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "cannot open " + path.string() + " for writing");
  }
  fill(out);
  if (!out) {
    throw IoError(IoError::Code::WriteFailed, "write failed for " + path.string());
  }
}

int cmd_simulate(const CommonOptions& opts, double offset, int frames, double t0,
                 const std::string& name) {
  const RunConfig cfg = load_config(opts);
  const MotionMode mode = mode_from_string(opts.mode_name);
  const fs::path dir = prepare_out_dir(opts);
  const Phantom phantom(cfg.phantom);
  const ProbeState pose = mode == MotionMode::Translation ? ProbeState::translation(offset)
                                                          : ProbeState::rotation(offset);
  const FrameSequence seq = phantom.generate_sequence(pose, frames, t0);
  write_frame_cube(seq, dir / name);
  echo_config(cfg, resolve_controller(cfg, mode), mode, dir);
  std::cout << "wrote " << (dir / name).string() << ": " << seq.height << 'x' << seq.width << 'x'
            << seq.frame_count() << " @ " << fmt(seq.frame_rate) << " Hz\n";
  return kExitOk;
}

int cmd_analyze(const CommonOptions& opts, const std::string& cube_path,
                std::optional<double> f_low, std::optional<double> f_high,
                std::optional<double> floor_percentile) {
  RunConfig cfg = load_config(opts);
  if (f_low) cfg.band.f_low = *f_low;
  if (f_high) cfg.band.f_high = *f_high;
  const double floor = floor_percentile.value_or(cfg.heatmap_floor_percentile);
  const fs::path dir = prepare_out_dir(opts);

  const FrameSequence seq = read_frame_cube(cube_path);
  const EnergyMap map = energy_map(seq, cfg.band);
  const EnergyMetric metric = average_energy(map);

  write_raw_float_grid(map, dir / "energy.f32");
  write_pgm(heatmap_for_display(map, floor), dir / "heatmap.pgm");
  std::cout << "e_avg=" << fmt(metric.e_avg) << " height=" << map.height
            << " width=" << map.width << " frames=" << map.source_frames
            << " frame_rate=" << fmt(map.source_frame_rate) << '\n';
  return kExitOk;
}

int cmd_align(const CommonOptions& opts, double offset, bool snapshots) {
  const RunConfig cfg = load_config(opts);
  const MotionMode mode = mode_from_string(opts.mode_name);
  const fs::path dir = prepare_out_dir(opts);
  const ControllerConfig controller = resolve_controller(cfg, mode);
  echo_config(cfg, controller, mode, dir);

  const Phantom phantom(cfg.phantom);
  const ProbeState initial = mode == MotionMode::Translation ? ProbeState::translation(offset)
                                                             : ProbeState::rotation(offset);
  const std::uint64_t noise_seed = RandomStream::mix(cfg.phantom.rng_seed, 0x6e6f697365ULL);

  RestorationResult result;
  if (snapshots) {
    SnapshotRun run =
        snapshot_sequence(phantom, initial, controller, noise_seed, cfg.heatmap_floor_percentile);
    result = std::move(run.result);
    const fs::path snap_dir = dir / "snapshots";
    fs::create_directories(snap_dir);
    char name[64];
    for (const Snapshot& s : run.snapshots) {
      std::snprintf(name, sizeof(name), "%03d_frame.pgm", s.measurement_index);
      write_pgm(s.frame, snap_dir / name);
      std::snprintf(name, sizeof(name), "%03d_heatmap.pgm", s.measurement_index);
      write_pgm(s.heatmap, snap_dir / name);
    }
  } else {
    SimulatedProbe probe(phantom, initial, noise_seed);
    result = run_alignment(probe, probe, controller);
    result.final_true_offset = probe.pose().offset();
  }

  write_file(dir / "trajectory.csv", [&](std::ostream& out) { write_trajectory_csv(result, out); });
  std::cout << "termination=" << to_string(result.termination)
            << " iterations=" << result.iterations
            << " final_true_offset=" << fmt(result.final_true_offset)
            << " e_avg_final=" << fmt(result.trajectory.back().e_avg) << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonOptions& opts, bool noiseless_run) {
  const RunConfig cfg = load_config(opts);
  const MotionMode mode = mode_from_string(opts.mode_name);
  const fs::path dir = prepare_out_dir(opts);
  const ControllerConfig controller = resolve_controller(cfg, mode);
  echo_config(cfg, controller, mode, dir);

  SweepSpec spec;
  spec.mode = mode;
  spec.offsets = mode == MotionMode::Translation ? cfg.sweep.translation_offsets
                                                 : cfg.sweep.rotation_offsets;
  spec.repeats = cfg.sweep.repeats;
  spec.seeds = cfg.sweep.seeds;
  spec.phantom = noiseless_run ? noiseless(cfg.phantom) : cfg.phantom;
  spec.band = cfg.band;
  spec.frames_per_measurement = controller.frames_per_measurement;

  const std::vector<SweepPoint> table = run_attenuation_sweep(spec);
  write_file(dir / "sweep.csv", [&](std::ostream& out) { write_sweep_csv(table, out); });
  for (const SweepPoint& p : table) {
    std::cout << "offset=" << fmt(p.offset) << " normalized_mean=" << fmt(p.normalized_mean)
              << " normalized_std=" << fmt(p.normalized_std) << " samples=" << p.samples << '\n';
  }
  return kExitOk;
}

int cmd_restore_exp(const CommonOptions& opts) {
  const RunConfig cfg = load_config(opts);
  const MotionMode mode = mode_from_string(opts.mode_name);
  const fs::path dir = prepare_out_dir(opts);
  const ControllerConfig controller = resolve_controller(cfg, mode);
  echo_config(cfg, controller, mode, dir);

  RestorationExperiment exp;
  exp.mode = mode;
  exp.initial_offsets = mode == MotionMode::Translation ? cfg.restore.translation_offsets
                                                        : cfg.restore.rotation_offsets;
  exp.trials_per_offset = cfg.restore.trials_per_offset;
  exp.controller = controller;
  exp.phantom = cfg.phantom;
  exp.base_seed = cfg.phantom.rng_seed;

  const ExperimentOutcome outcome = run_restoration_experiment(exp);
  write_file(dir / "trials.csv",
             [&](std::ostream& out) { write_trials_csv(outcome.trials, out); });
  write_file(dir / "stats.csv", [&](std::ostream& out) { write_stats_csv(outcome.stats, out); });

  for (const OffsetStats& s : outcome.stats.per_offset) {
    std::cout << "offset=" << fmt(s.offset) << " mean_error=" << fmt(s.mean_error)
              << " std_error=" << fmt(s.std_error) << " max_error=" << fmt(s.max_error)
              << " n=" << s.n << '\n';
  }
  std::cout << "pooled mean_error=" << fmt(outcome.stats.pooled_mean)
            << " std_error=" << fmt(outcome.stats.pooled_std)
            << " max_error=" << fmt(outcome.stats.pooled_max) << " n=" << outcome.stats.n << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vibration-based needle alignment toolkit"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  double sim_offset = 0.0;
  int sim_frames = 60;
  double sim_t0 = 0.0;
  std::string sim_name = "frames.vibe";
  CLI::App* sim = app.add_subcommand("simulate", "render a phantom sequence to a frame cube");
  add_common(sim, sim_opts, true);
  sim->add_option("--offset", sim_offset, "misalignment offset [mm or deg]");
  sim->add_option("--frames", sim_frames, "frames to render")->check(CLI::PositiveNumber);
  sim->add_option("--t0", sim_t0, "acquisition start time [s]");
  sim->add_option("--name", sim_name, "output cube file name");

  CommonOptions ana_opts;
  std::string ana_cube;
  std::optional<double> ana_flow, ana_fhigh, ana_floor;
  CLI::App* ana = app.add_subcommand("analyze", "energy map + heatmap + E_Avg of a frame cube");
  add_common(ana, ana_opts, false);
  ana->add_option("--cube", ana_cube, "frame cube file")->required();
  ana->add_option("--f-low", ana_flow, "passband low edge [Hz]");
  ana->add_option("--f-high", ana_fhigh, "passband high edge [Hz]");
  ana->add_option("--floor", ana_floor, "heatmap floor percentile [0,1)");

  CommonOptions align_opts;
  double align_offset = 3.0;
  bool align_snapshots = false;
  CLI::App* align = app.add_subcommand("align", "run the repositioning controller in simulation");
  add_common(align, align_opts, true);
  align->add_option("--offset", align_offset, "initial misalignment [mm or deg]");
  align->add_flag("--snapshots", align_snapshots, "save frame + heatmap per measurement");

  CommonOptions sweep_opts;
  bool sweep_noiseless = false;
  CLI::App* sweep = app.add_subcommand("sweep", "energy attenuation sweep over offsets");
  add_common(sweep, sweep_opts, true);
  sweep->add_flag("--noiseless", sweep_noiseless, "disable speckle and additive noise");

  CommonOptions rest_opts;
  CLI::App* rest = app.add_subcommand("restore-exp", "restoration error grid + statistics");
  add_common(rest, rest_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    std::cerr << "error: usage: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_opts, sim_offset, sim_frames, sim_t0, sim_name);
    if (ana->parsed()) return cmd_analyze(ana_opts, ana_cube, ana_flow, ana_fhigh, ana_floor);
    if (align->parsed()) return cmd_align(align_opts, align_offset, align_snapshots);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_noiseless);
    if (rest->parsed()) return cmd_restore_exp(rest_opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "error: input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
