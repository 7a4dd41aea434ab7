// Copyright 2026 The colibri-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scenario files describe one reproducible run. Units are part of the key
// names. Relative paths resolve against the scenario file's directory.
//
//   name = moving_bar
//   seed = 42
//
//   [stimulus]
//   kind = moving_bar            # moving_bar | moving_disk | pgm_dir
//   frames = 48                  # event frames after the reference image
//   velocity_x_px_per_s = 20000
//   contrast = 1.5
//
//   [dvs]        theta_on, theta_off, sample_rate_hz, suppression_enabled,
//                flicker_window, epsilon_lum
//   [clock]      system_clock_hz, cycles_per_word
//   [network]    source = reference | file, seed, description_path,
//                kernel_memory_budget
//   [preprocess] frames_per_timestep
//   [budget]     window_ms, frames_per_window, preprocessing_latency_ms, ...

#ifndef COLIBRI_SCENARIO_HPP
#define COLIBRI_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "colibri/dvs_model.hpp"
#include "colibri/keyvalue.hpp"
#include "colibri/pipeline_budget.hpp"
#include "colibri/saer_codec.hpp"
#include "colibri/stimulus.hpp"

namespace colibri {

struct StimulusSpec {
  enum class Kind { Synthetic, PgmDir };
  Kind kind = Kind::Synthetic;
  SyntheticStimulus synthetic;
  std::filesystem::path pgm_dir;
  /// Event frames to produce; for PGM input, at most images - 1.
  std::optional<std::uint64_t> frames;
};

struct NetworkSpec {
  bool reference = true;
  std::uint64_t seed = 1;
  std::filesystem::path description_path;
  std::optional<std::size_t> kernel_memory_budget;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  StimulusSpec stimulus;
  DvsConfig dvs;
  ClockConfig clock;
  NetworkSpec network;
  std::uint32_t frames_per_timestep = 1;
  BudgetParams budget;
};

inline Scenario load_scenario(const std::filesystem::path& path) {
  const auto doc = KeyValueDocument::load(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  Scenario sc;
  const auto& root = doc.root();
  sc.name = root.string_or("name", path.stem().string());
  sc.seed = root.unsigned_or("seed", 0);

  const auto* stim = doc.section("stimulus");
  if (!stim) throw ConfigError(doc.source() + ": missing section [stimulus]");
  const std::string kind = stim->string("kind");
  auto& syn = sc.stimulus.synthetic;
  if (kind == "moving_bar" || kind == "moving_disk") {
    sc.stimulus.kind = StimulusSpec::Kind::Synthetic;
    syn.shape = kind == "moving_bar" ? StimulusShape::MovingBar : StimulusShape::MovingDisk;
    syn.background_lum = stim->real_or("background_lum", syn.background_lum);
    syn.contrast = stim->real_or("contrast", syn.contrast);
    syn.velocity_x_px_per_s = stim->real_or("velocity_x_px_per_s", syn.velocity_x_px_per_s);
    syn.velocity_y_px_per_s = stim->real_or("velocity_y_px_per_s", syn.velocity_y_px_per_s);
    syn.start_x_px = stim->real_or("start_x_px", syn.start_x_px);
    syn.start_y_px = stim->real_or("start_y_px", syn.start_y_px);
    syn.bar_width_px = stim->real_or("bar_width_px", syn.bar_width_px);
    syn.disk_radius_px = stim->real_or("disk_radius_px", syn.disk_radius_px);
    syn.jitter_log = stim->real_or("jitter_log", syn.jitter_log);
    sc.stimulus.frames = stim->unsigned_value("frames");
    if (!(syn.background_lum >= 0.0)) throw stim->invalid("background_lum", std::to_string(syn.background_lum), "non-negative");
    if (!(syn.contrast >= -1.0)) throw stim->invalid("contrast", std::to_string(syn.contrast), "at least -1");
    if (!(syn.jitter_log >= 0.0)) throw stim->invalid("jitter_log", std::to_string(syn.jitter_log), "non-negative");
  } else if (kind == "pgm_dir") {
    sc.stimulus.kind = StimulusSpec::Kind::PgmDir;
    sc.stimulus.pgm_dir = resolve(stim->string("pgm_dir"));
    if (!std::filesystem::is_directory(sc.stimulus.pgm_dir)) {
      throw ConfigError(doc.source() + ": field 'stimulus.pgm_dir': directory not found " + sc.stimulus.pgm_dir.string());
    }
    if (stim->has("frames")) sc.stimulus.frames = stim->unsigned_value("frames");
  } else {
    throw stim->invalid("kind", kind, "one of moving_bar, moving_disk, pgm_dir");
  }

  if (const auto* s = doc.section("dvs")) {
    sc.dvs.theta_on = s->real_or("theta_on", sc.dvs.theta_on);
    sc.dvs.theta_off = s->real_or("theta_off", sc.dvs.theta_off);
    sc.dvs.sample_rate_hz = s->real_or("sample_rate_hz", sc.dvs.sample_rate_hz);
    sc.dvs.suppression_enabled = s->boolean_or("suppression_enabled", sc.dvs.suppression_enabled);
    sc.dvs.flicker_window = static_cast<std::uint32_t>(s->unsigned_or("flicker_window", sc.dvs.flicker_window));
    sc.dvs.epsilon_lum = s->real_or("epsilon_lum", sc.dvs.epsilon_lum);
  }
  try {
    sc.dvs.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(doc.source() + ": " + e.what());
  }

  if (const auto* s = doc.section("clock")) {
    sc.clock.system_clock_hz = s->real_or("system_clock_hz", sc.clock.system_clock_hz);
    sc.clock.cycles_per_word = static_cast<std::uint32_t>(s->unsigned_or("cycles_per_word", sc.clock.cycles_per_word));
  }
  try {
    sc.clock.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(doc.source() + ": " + e.what());
  }

  if (const auto* s = doc.section("network")) {
    const std::string source = s->string_or("source", "reference");
    if (source == "reference") {
      sc.network.reference = true;
      sc.network.seed = s->unsigned_or("seed", sc.network.seed);
    } else if (source == "file") {
      sc.network.reference = false;
      sc.network.description_path = resolve(s->string("description_path"));
      if (!std::filesystem::is_regular_file(sc.network.description_path)) {
        throw ConfigError(doc.source() + ": field 'network.description_path': file not found " +
                          sc.network.description_path.string());
      }
    } else {
      throw s->invalid("source", source, "'reference' or 'file'");
    }
    if (s->has("kernel_memory_budget")) sc.network.kernel_memory_budget = s->unsigned_value("kernel_memory_budget");
  }

  if (const auto* s = doc.section("preprocess")) {
    sc.frames_per_timestep = static_cast<std::uint32_t>(s->unsigned_or("frames_per_timestep", 1));
    if (sc.frames_per_timestep == 0) throw s->invalid("frames_per_timestep", "0", "positive");
  }

  auto& b = sc.budget;
  b.clock = sc.clock;
  b.interface.saer_sample_rate_hz = sc.dvs.sample_rate_hz;
  if (const auto* s = doc.section("budget")) {
    b.window_ms = s->real_or("window_ms", b.window_ms);
    b.frames_per_window = s->unsigned_or("frames_per_window", b.frames_per_window);
    b.preprocessing_latency_ms = s->real_or("preprocessing_latency_ms", b.preprocessing_latency_ms);
    b.preprocessing_power_mw = s->real_or("preprocessing_power_mw", b.preprocessing_power_mw);
    b.inference_latency_ms = s->real_or("inference_latency_ms", b.inference_latency_ms);
    b.inference_power_mw = s->real_or("inference_power_mw", b.inference_power_mw);
    b.avg_compute_power_mw = s->real_or("avg_compute_power_mw", b.avg_compute_power_mw);
    b.interface.saer_host_power_mw = s->real_or("saer_host_power_mw", b.interface.saer_host_power_mw);
    b.camera.analog_mw = s->real_or("camera_analog_mw", b.camera.analog_mw);
    b.camera.digital_mw_max = s->real_or("camera_digital_mw_max", b.camera.digital_mw_max);
    b.pwm.power_mw = s->real_or("pwm_power_mw", b.pwm.power_mw);
    b.pwm.duty = s->real_or("pwm_duty", b.pwm.duty);
    b.pwm.clock_hz = s->real_or("pwm_clock_hz", b.pwm.clock_hz);
  }
  try {
    b.pwm.validate();
    for (const auto& stage : make_budget(b).stages) stage.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(doc.source() + ": budget: " + e.what());
  }

  doc.reject_unused({"stimulus", "dvs", "clock", "network", "preprocess", "budget"});
  return sc;
}

}  // namespace colibri

#endif  // COLIBRI_SCENARIO_HPP
