// End-to-end checks of the command-line binary: exit codes, artifact layout,
// and the simulate -> analyze pipeline. Uses a compact phantom so each
// invocation stays fast.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <doctest.h>

#include "vibealign/frame_cube.hpp"
#include "vibealign/harness.hpp"
#include "vibealign/rng.hpp"

using namespace vibealign;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("vibealign_cli_" + std::to_string(RandomStream(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "stdout.txt";
  const std::string cmd = std::string(VIBEALIGN_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + (dir / "stderr.txt").string();
  const int raw = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(raw);
  std::ifstream in(out_file);
  std::stringstream buf;
  buf << in.rdbuf();
  result.stdout_text = buf.str();
  return result;
}

// 64x64 phantom, 30 frames at 30 Hz (the 2 Hz tone stays on a DFT bin).
void write_small_config(const fs::path& file, bool noiseless_phantom) {
  std::ofstream out(file);
  out << "[phantom]\n"
      << "image_height = 64\nimage_width = 64\n"
      << "needle_depth_px = 30\nneedle_span = 12, 52\n";
  if (noiseless_phantom) {
    out << "speckle_level = 0\nadditive_noise_level = 0\n";
  }
  out << "[controller]\nframes_per_measurement = 30\n";
  out << "[sweep]\ntranslation_offsets = 0.5, 1.5, 2.5, 3.5\nseeds = 1, 2\n";
}

}  // namespace

TEST_CASE("exit codes distinguish usage, config and io failures") {
  TempDir tmp;
  CHECK(run_cli("--bogus-flag", tmp.path).exit_code == 2);
  CHECK(run_cli("analyze", tmp.path).exit_code == 2);  // missing required --cube
  CHECK(run_cli("analyze --cube " + (tmp.path / "missing.vibe").string() + " --out-dir " +
                    tmp.path.string(),
                tmp.path)
            .exit_code == 4);

  const fs::path bad_cfg = tmp.path / "bad.ini";
  std::ofstream(bad_cfg) << "[phantom]\nimage_heigth = 10\n";
  CHECK(run_cli("simulate --config " + bad_cfg.string() + " --out-dir " + tmp.path.string(),
                tmp.path)
            .exit_code == 3);
}

TEST_CASE("simulate then analyze round trip") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  write_small_config(cfg, true);
  const std::string out_dir = (tmp.path / "out").string();

  const RunResult sim = run_cli("simulate --config " + cfg.string() + " --offset 0 --frames 30" +
                                    " --out-dir " + out_dir,
                                tmp.path);
  REQUIRE(sim.exit_code == 0);
  CHECK(fs::exists(fs::path(out_dir) / "frames.vibe"));
  CHECK(fs::exists(fs::path(out_dir) / "effective_config.ini"));

  const RunResult ana = run_cli("analyze --cube " + out_dir + "/frames.vibe --out-dir " + out_dir,
                                tmp.path);
  REQUIRE(ana.exit_code == 0);
  CHECK(fs::exists(fs::path(out_dir) / "energy.f32"));
  CHECK(fs::exists(fs::path(out_dir) / "heatmap.pgm"));
  CHECK(ana.stdout_text.find("e_avg=") == 0);

  // An all-constant cube reports exactly zero average energy.
  FrameSequence flat;
  flat.height = 8;
  flat.width = 8;
  flat.frame_rate = 30.0;
  flat.data.assign(30 * 64, 0.25f);
  write_frame_cube(flat, tmp.path / "flat.vibe");
  const RunResult flat_run = run_cli(
      "analyze --cube " + (tmp.path / "flat.vibe").string() + " --out-dir " + out_dir, tmp.path);
  REQUIRE(flat_run.exit_code == 0);
  CHECK(flat_run.stdout_text.find("e_avg=0 ") == 0);
}

TEST_CASE("align emits a converged trajectory") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  write_small_config(cfg, true);
  const std::string out_dir = (tmp.path / "out").string();

  const RunResult res = run_cli("align --config " + cfg.string() +
                                    " --mode translation --offset 2.0 --out-dir " + out_dir,
                                tmp.path);
  REQUIRE(res.exit_code == 0);
  CHECK(res.stdout_text.find("termination=Converged") == 0);

  std::ifstream csv(fs::path(out_dir) / "trajectory.csv");
  std::string line, last;
  std::getline(csv, line);
  CHECK(line.find("iteration,phase,") == 0);
  while (std::getline(csv, line)) {
    if (!line.empty()) last = line;
  }
  CHECK(last.find("Converged") != std::string::npos);
}

TEST_CASE("sweep CSV is strictly decreasing in the noiseless case") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  write_small_config(cfg, true);
  const std::string out_dir = (tmp.path / "out").string();

  const RunResult res = run_cli("sweep --config " + cfg.string() +
                                    " --mode translation --noiseless --out-dir " + out_dir,
                                tmp.path);
  REQUIRE(res.exit_code == 0);

  std::ifstream csv(fs::path(out_dir) / "sweep.csv");
  const std::vector<SweepPoint> table = read_sweep_csv(csv);
  REQUIRE(table.size() == 4);
  for (size_t i = 1; i < table.size(); ++i) {
    CHECK(table[i].normalized_mean < table[i - 1].normalized_mean);
  }
}

TEST_CASE("restore-exp reproduces identical CSVs for identical seeds") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  {
    std::ofstream out(cfg);
    out << "[phantom]\nimage_height = 64\nimage_width = 64\n"
        << "needle_depth_px = 30\nneedle_span = 12, 52\n"
        << "[controller]\nframes_per_measurement = 30\n"
        << "[restore]\ntranslation_offsets = 1.5, 3.0\ntrials_per_offset = 1\n";
  }
  auto read_all = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  const std::string out_a = (tmp.path / "a").string();
  const std::string out_b = (tmp.path / "b").string();
  const std::string args = "restore-exp --config " + cfg.string() +
                           " --mode translation --seed 42 --out-dir ";
  const RunResult ra = run_cli(args + out_a, tmp.path);
  const RunResult rb = run_cli(args + out_b, tmp.path);
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
  CHECK(read_all(fs::path(out_a) / "trials.csv") == read_all(fs::path(out_b) / "trials.csv"));
  CHECK(read_all(fs::path(out_a) / "stats.csv") == read_all(fs::path(out_b) / "stats.csv"));
  CHECK(ra.stdout_text == rb.stdout_text);

  // The console pooled line carries the same %.17g values as stats.csv.
  const std::string stats = read_all(fs::path(out_a) / "stats.csv");
  const size_t pooled_pos = stats.find("pooled,");
  REQUIRE(pooled_pos != std::string::npos);
  std::istringstream pooled_row(stats.substr(pooled_pos + 7));
  std::string mean_text;
  std::getline(pooled_row, mean_text, ',');
  CHECK(ra.stdout_text.find("pooled mean_error=" + mean_text) != std::string::npos);
}
