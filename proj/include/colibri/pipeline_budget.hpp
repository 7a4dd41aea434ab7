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

#ifndef COLIBRI_PIPELINE_BUDGET_HPP
#define COLIBRI_PIPELINE_BUDGET_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "colibri/dvs_model.hpp"
#include "colibri/saer_codec.hpp"

namespace colibri {

enum class StageRole { Sensing, Preprocessing, Inference, Actuation, Other };

struct StageBudget {
  std::string name;
  double latency_ms = 0.0;
  double power_mw = 0.0;
  /// Overlaps with compute, so it adds energy but no loop latency.
  bool parallel_with_compute = false;
  StageRole role = StageRole::Other;

  void validate() const {
    if (!(latency_ms >= 0.0) || !(power_mw >= 0.0)) {
      throw std::invalid_argument("stage '" + name + "': latency and power must be non-negative");
    }
  }
};

struct PwmConfig {
  double clock_hz = 50e6;
  double duty = 0.5;
  double power_mw = 0.3;
  /// Output carrier frequency; only shapes the waveform descriptor.
  double pwm_frequency_hz = 400.0;

  void validate() const {
    if (!(clock_hz > 0.0)) throw std::invalid_argument("pwm: clock_hz must be positive");
    if (!(duty >= 0.0 && duty <= 1.0)) throw std::invalid_argument("pwm: duty must lie in [0, 1]");
    if (!(power_mw >= 0.0)) throw std::invalid_argument("pwm: power_mw must be non-negative");
    if (!(pwm_frequency_hz > 0.0 && pwm_frequency_hz <= clock_hz)) {
      throw std::invalid_argument("pwm: pwm_frequency_hz must lie in (0, clock_hz]");
    }
  }
};

/// One cycle to latch the command, one to write the duty register.
inline double pwm_latency_us(const PwmConfig& cfg) {
  cfg.validate();
  return 2.0 / cfg.clock_hz * 1e6;
}

struct PwmWaveform {
  std::uint64_t period_cycles = 0;
  std::uint64_t high_cycles = 0;

  double high_fraction() const {
    return period_cycles == 0 ? 0.0 : static_cast<double>(high_cycles) / static_cast<double>(period_cycles);
  }
};

inline PwmWaveform pwm_waveform(const PwmConfig& cfg) {
  cfg.validate();
  PwmWaveform w;
  w.period_cycles = static_cast<std::uint64_t>(std::llround(cfg.clock_hz / cfg.pwm_frequency_hz));
  w.high_cycles = static_cast<std::uint64_t>(std::llround(cfg.duty * static_cast<double>(w.period_cycles)));
  return w;
}

struct PipelineBudget {
  std::vector<StageBudget> stages;
  double window_ms = 300.0;
  std::uint64_t frames_per_window = 4350;
  /// Measured SoC average while inferring; a parameter, not derived from
  /// the per-stage powers.
  double avg_compute_power_mw = 35.6;
};

inline double stage_energy_mj(const StageBudget& stage) {
  stage.validate();
  return stage.power_mw * stage.latency_ms / 1000.0;
}

inline double closed_loop_latency_ms(const PipelineBudget& budget) {
  double total = 0.0;
  for (const auto& s : budget.stages) {
    s.validate();
    if (!s.parallel_with_compute) total += s.latency_ms;
  }
  return total;
}

inline double closed_loop_energy_mj(const PipelineBudget& budget) {
  double total = 0.0;
  for (const auto& s : budget.stages) total += stage_energy_mj(s);
  return total;
}

/// SoC compute average + sensing interface + PWM generation.
inline double closed_loop_power_mw(const PipelineBudget& budget) {
  double total = budget.avg_compute_power_mw;
  for (const auto& s : budget.stages) {
    if (s.role == StageRole::Sensing || s.role == StageRole::Actuation) total += s.power_mw;
  }
  return total;
}

inline std::uint64_t window_frames(const PipelineBudget& budget, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !(budget.window_ms >= 0.0)) {
    throw std::invalid_argument("window_frames: rates must be positive");
  }
  return static_cast<std::uint64_t>(std::floor(budget.window_ms * sample_rate_hz / 1000.0));
}

/// Parameters the default closed-loop budget is composed from.
struct BudgetParams {
  DvsPowerModel camera;
  InterfaceParams interface;
  ClockConfig clock;
  PwmConfig pwm;
  double window_ms = 300.0;
  std::uint64_t frames_per_window = 4350;
  double preprocessing_latency_ms = 131.0;
  double preprocessing_power_mw = 34.0;
  double inference_latency_ms = 32.0;
  double inference_power_mw = 44.0;
  double avg_compute_power_mw = 35.6;
};

/// Sensing power: SAER host fetch plus the camera at full-frame load.
inline double sensing_power_mw(const BudgetParams& p) {
  const double full_rate_meps = SensorGeometry::pixels * p.interface.saer_sample_rate_hz / 1e6;
  return p.interface.saer_host_power_mw + sensor_power_mw(p.camera, full_rate_meps);
}

/// Closed-loop budget: sensing window (parallel), preprocessing, inference, PWM.
inline PipelineBudget make_budget(const BudgetParams& p = {}) {
  PipelineBudget b;
  b.window_ms = p.window_ms;
  b.frames_per_window = p.frames_per_window;
  b.avg_compute_power_mw = p.avg_compute_power_mw;
  b.stages = {
      {"DVS and SAER (one window / " + std::to_string(p.frames_per_window) + " event frames)", p.window_ms,
       sensing_power_mw(p), true, StageRole::Sensing},
      {"Preprocessing (Cluster)", p.preprocessing_latency_ms, p.preprocessing_power_mw, false, StageRole::Preprocessing},
      {"Inference (SNE)", p.inference_latency_ms, p.inference_power_mw, false, StageRole::Inference},
      {"PWM (" + std::to_string(static_cast<int>(std::lround(p.pwm.duty * 100))) + "% duty)",
       pwm_latency_us(p.pwm) / 1000.0, p.pwm.power_mw, false, StageRole::Actuation},
  };
  return b;
}

/// Readout of one event frame; a sub-row of the sensing window shown for
/// reference and excluded from the totals.
inline StageBudget single_frame_stage(const BudgetParams& p = {}) {
  return {"DVS and SAER (single event-frame)", saer_frame_time_us(p.clock) / 1000.0, sensing_power_mw(p), true,
          StageRole::Sensing};
}

/// Fixed-point text with trailing zeros dropped; keeps CSV output stable.
inline std::string format_number(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

/// `module,latency_ms,power_mw,energy_mj` rows followed by a Total row.
inline void write_budget_csv(std::ostream& os, const PipelineBudget& budget, const StageBudget* detail_row = nullptr) {
  auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
  os << "module,latency_ms,power_mw,energy_mj\n";
  if (detail_row) {
    os << quoted(detail_row->name) << ',' << format_number(detail_row->latency_ms) << ','
       << format_number(detail_row->power_mw) << ',' << format_number(stage_energy_mj(*detail_row), 8) << '\n';
  }
  for (const auto& s : budget.stages) {
    os << quoted(s.name) << ',' << format_number(s.latency_ms) << ',' << format_number(s.power_mw) << ','
       << format_number(stage_energy_mj(s), 8) << '\n';
  }
  os << "Total," << format_number(closed_loop_latency_ms(budget)) << ',' << format_number(closed_loop_power_mw(budget))
     << ',' << format_number(closed_loop_energy_mj(budget)) << '\n';
}

/// `interface,throughput_efps,power_mw` for USB, FPGA SAER and on-chip SAER.
/// A leading '>' marks a lower bound.
inline void write_interface_csv(std::ostream& os, const InterfaceParams& p = {}) {
  os << "interface,throughput_efps,power_mw\n";
  const struct {
    const char* label;
    Interface iface;
  } rows[] = {{"USB", Interface::Usb}, {"SAER on FPGA", Interface::SaerFpga}, {"SAER on ColibriUAV", Interface::SaerColibri}};
  for (const auto& r : rows) {
    const auto power = interface_power_mw(r.iface, p);
    os << r.label << ',' << std::llround(interface_throughput_efps(r.iface, p)) << ','
       << (power.lower_bound ? ">" : "") << format_number(power.mw) << '\n';
  }
}

}  // namespace colibri

#endif  // COLIBRI_PIPELINE_BUDGET_HPP
