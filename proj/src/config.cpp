#include "vibealign/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace vibealign {
namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an unsigned integer");
  }
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(value)) out.push_back(parse_u64(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt(xs[i]);
  }
  return out;
}

std::string fmt_list(const std::vector<std::uint64_t>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  // section -> key -> setter
  std::map<std::string, std::map<std::string, Setter>> schema;

  auto& phantom = schema["phantom"];
  phantom["image_height"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.image_height = parse_int(k, v);
  };
  phantom["image_width"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.image_width = parse_int(k, v);
  };
  phantom["mm_per_pixel"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.mm_per_pixel = parse_double(k, v);
  };
  phantom["frame_rate"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.frame_rate_hz = parse_double(k, v);
  };
  phantom["needle_depth_px"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.needle_depth_px = parse_int(k, v);
  };
  phantom["needle_span"] = [&](const std::string& k, const std::string& v) {
    const std::vector<double> span = parse_double_list(k, v);
    if (span.size() != 2) throw ConfigError("key 'needle_span': expected 'begin, end'");
    cfg.phantom.needle_span_begin = static_cast<int>(span[0]);
    cfg.phantom.needle_span_end = static_cast<int>(span[1]);
  };
  phantom["vibration_frequency"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.vibration_frequency_hz = parse_double(k, v);
  };
  phantom["vibration_intensity_amplitude"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.vibration_intensity_amplitude = parse_double(k, v);
  };
  phantom["visibility_sigma"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.visibility_sigma_mm = parse_double(k, v);
  };
  phantom["vibration_sigma_translation"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.vibration_sigma_translation_mm = parse_double(k, v);
  };
  phantom["vibration_sigma_rotation"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.vibration_sigma_rotation_deg = parse_double(k, v);
  };
  phantom["tissue_halo_lambda"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.tissue_halo_lambda_px = parse_double(k, v);
  };
  phantom["speckle_level"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.speckle_level = parse_double(k, v);
  };
  phantom["additive_noise_level"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.additive_noise_level = parse_double(k, v);
  };
  phantom["rng_seed"] = [&](const std::string& k, const std::string& v) {
    cfg.phantom.rng_seed = parse_u64(k, v);
  };

  auto& band = schema["band"];
  band["f_low"] = [&](const std::string& k, const std::string& v) {
    cfg.band.f_low = parse_double(k, v);
  };
  band["f_high"] = [&](const std::string& k, const std::string& v) {
    cfg.band.f_high = parse_double(k, v);
  };

  auto& ctl = schema["controller"];
  ctl["k_p"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.k_p = parse_double(k, v);
  };
  ctl["direction_step"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.direction_step = parse_double(k, v);
  };
  ctl["energy_threshold"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.energy_threshold = parse_double(k, v);
  };
  ctl["energy_threshold_fraction"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.energy_threshold_fraction = parse_double(k, v);
  };
  ctl["low_energy_fraction"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.low_energy_fraction = parse_double(k, v);
  };
  ctl["frames_per_measurement"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.frames_per_measurement = parse_int(k, v);
  };
  ctl["min_step"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.min_step = parse_double(k, v);
  };
  ctl["max_step"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.max_step = parse_double(k, v);
  };
  ctl["max_iterations"] = [&](const std::string& k, const std::string& v) {
    cfg.controller.max_iterations = parse_int(k, v);
  };

  auto& sweep = schema["sweep"];
  sweep["translation_offsets"] = [&](const std::string& k, const std::string& v) {
    cfg.sweep.translation_offsets = parse_double_list(k, v);
  };
  sweep["rotation_offsets"] = [&](const std::string& k, const std::string& v) {
    cfg.sweep.rotation_offsets = parse_double_list(k, v);
  };
  sweep["repeats"] = [&](const std::string& k, const std::string& v) {
    cfg.sweep.repeats = parse_int(k, v);
  };
  sweep["seeds"] = [&](const std::string& k, const std::string& v) {
    cfg.sweep.seeds = parse_u64_list(k, v);
  };

  auto& restore = schema["restore"];
  restore["translation_offsets"] = [&](const std::string& k, const std::string& v) {
    cfg.restore.translation_offsets = parse_double_list(k, v);
  };
  restore["rotation_offsets"] = [&](const std::string& k, const std::string& v) {
    cfg.restore.rotation_offsets = parse_double_list(k, v);
  };
  restore["trials_per_offset"] = [&](const std::string& k, const std::string& v) {
    cfg.restore.trials_per_offset = parse_int(k, v);
  };

  auto& output = schema["output"];
  output["heatmap_floor_percentile"] = [&](const std::string& k, const std::string& v) {
    cfg.heatmap_floor_percentile = parse_double(k, v);
  };

  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.resize(comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!schema.count(section)) {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section +
                          "]");
      }
      continue;
    }

    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' outside any section");
    }
    const auto& keys = schema.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key +
                        "' in section [" + section + "]");
    }
    it->second(key, value);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(IoError::Code::OpenFailed, "cannot open config file " + path.string());
  }
  return parse_run_config(in);
}

ControllerConfig resolve_controller(const RunConfig& cfg, MotionMode mode) {
  const int frames = cfg.controller.frames_per_measurement.value_or(60);
  ControllerConfig out = default_controller(cfg.phantom, mode, frames);
  out.passband = cfg.band;
  if (cfg.controller.k_p) out.k_p = *cfg.controller.k_p;
  if (cfg.controller.direction_step) out.direction_step = *cfg.controller.direction_step;
  if (cfg.controller.energy_threshold) out.energy_threshold = *cfg.controller.energy_threshold;
  if (cfg.controller.energy_threshold_fraction) {
    out.energy_threshold_fraction = *cfg.controller.energy_threshold_fraction;
  }
  if (cfg.controller.low_energy_fraction) {
    out.low_energy_fraction = *cfg.controller.low_energy_fraction;
  }
  if (cfg.controller.min_step) out.step_clamp.min_step = *cfg.controller.min_step;
  if (cfg.controller.max_step) out.step_clamp.max_step = *cfg.controller.max_step;
  if (cfg.controller.max_iterations) out.max_iterations = *cfg.controller.max_iterations;
  out.validate();
  return out;
}

void write_effective_config(const RunConfig& cfg, const ControllerConfig& controller,
                            MotionMode mode, std::ostream& out) {
  const PhantomConfig& ph = cfg.phantom;
  out << "# effective configuration (" << to_string(mode) << " mode)\n";
  out << "[phantom]\n";
  out << "image_height = " << ph.image_height << '\n';
  out << "image_width = " << ph.image_width << '\n';
  out << "mm_per_pixel = " << fmt(ph.mm_per_pixel) << '\n';
  out << "frame_rate = " << fmt(ph.frame_rate_hz) << '\n';
  out << "needle_depth_px = " << ph.needle_depth_px << '\n';
  out << "needle_span = " << ph.needle_span_begin << ", " << ph.needle_span_end << '\n';
  out << "vibration_frequency = " << fmt(ph.vibration_frequency_hz) << '\n';
  out << "vibration_intensity_amplitude = " << fmt(ph.vibration_intensity_amplitude) << '\n';
  out << "visibility_sigma = " << fmt(ph.visibility_sigma_mm) << '\n';
  out << "vibration_sigma_translation = " << fmt(ph.vibration_sigma_translation_mm) << '\n';
  out << "vibration_sigma_rotation = " << fmt(ph.vibration_sigma_rotation_deg) << '\n';
  out << "tissue_halo_lambda = " << fmt(ph.tissue_halo_lambda_px) << '\n';
  out << "speckle_level = " << fmt(ph.speckle_level) << '\n';
  out << "additive_noise_level = " << fmt(ph.additive_noise_level) << '\n';
  out << "rng_seed = " << ph.rng_seed << '\n';
  out << "\n[band]\n";
  out << "f_low = " << fmt(cfg.band.f_low) << '\n';
  out << "f_high = " << fmt(cfg.band.f_high) << '\n';
  out << "\n[controller]\n";
  out << "k_p = " << fmt(controller.k_p) << '\n';
  out << "direction_step = " << fmt(controller.direction_step) << '\n';
  out << "energy_threshold = " << fmt(controller.energy_threshold) << '\n';
  out << "energy_threshold_fraction = " << fmt(controller.energy_threshold_fraction) << '\n';
  out << "low_energy_fraction = " << fmt(controller.low_energy_fraction) << '\n';
  out << "frames_per_measurement = " << controller.frames_per_measurement << '\n';
  out << "min_step = " << fmt(controller.step_clamp.min_step) << '\n';
  out << "max_step = " << fmt(controller.step_clamp.max_step) << '\n';
  out << "max_iterations = " << controller.max_iterations << '\n';
  out << "\n[sweep]\n";
  out << "translation_offsets = " << fmt_list(cfg.sweep.translation_offsets) << '\n';
  out << "rotation_offsets = " << fmt_list(cfg.sweep.rotation_offsets) << '\n';
  out << "repeats = " << cfg.sweep.repeats << '\n';
  out << "seeds = " << fmt_list(cfg.sweep.seeds) << '\n';
  out << "\n[restore]\n";
  out << "translation_offsets = " << fmt_list(cfg.restore.translation_offsets) << '\n';
  out << "rotation_offsets = " << fmt_list(cfg.restore.rotation_offsets) << '\n';
  out << "trials_per_offset = " << cfg.restore.trials_per_offset << '\n';
  out << "\n[output]\n";
  out << "heatmap_floor_percentile = " << fmt(cfg.heatmap_floor_percentile) << '\n';
}

}  // namespace vibealign
