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

#ifndef COLIBRI_DVS_MODEL_HPP
#define COLIBRI_DVS_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "colibri/event_core.hpp"

namespace colibri {

/// Log-brightness remembered by a pixel since its last event.
struct PixelState {
  double memorized_log = 0.0;
};

struct DvsConfig {
  double theta_on = 0.2;
  double theta_off = 0.2;
  double sample_rate_hz = 7200.0;
  bool suppression_enabled = false;
  /// Frames of history a pixel must alternate polarity through to count as
  /// flicker. Zero disables flicker suppression.
  std::uint32_t flicker_window = 4;
  double epsilon_lum = 1e-3;

  void validate() const {
    if (!(theta_on > 0.0)) throw std::invalid_argument("dvs: theta_on must be positive");
    if (!(theta_off > 0.0)) throw std::invalid_argument("dvs: theta_off must be positive");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("dvs: sample_rate_hz must be positive");
    if (!(epsilon_lum > 0.0)) throw std::invalid_argument("dvs: epsilon_lum must be positive");
  }
};

/// One luminance image, row-major, SensorGeometry::pixels entries.
using LuminanceImage = std::vector<double>;

inline double log_luminance(double lum, double epsilon_lum) {
  return std::log(std::max(lum, epsilon_lum));
}

/// Pixel memories initialised to the scene's current log-brightness.
inline std::vector<PixelState> initial_state(std::span<const double> brightness,
                                             const DvsConfig& cfg) {
  if (brightness.size() != SensorGeometry::pixels) {
    throw std::invalid_argument("dvs: brightness image has " + std::to_string(brightness.size()) +
                                " pixels, expected 13728");
  }
  std::vector<PixelState> state(SensorGeometry::pixels);
  for (std::size_t i = 0; i < state.size(); ++i) {
    state[i].memorized_log = log_luminance(brightness[i], cfg.epsilon_lum);
  }
  return state;
}

/// Signed number of threshold crossings between two log-brightness values.
inline std::int64_t pending_event_crossings(double old_log, double new_log, double theta_on,
                                            double theta_off) {
  if (!(theta_on > 0.0) || !(theta_off > 0.0)) {
    throw std::invalid_argument("dvs: thresholds must be positive");
  }
  if (new_log >= old_log) {
    return static_cast<std::int64_t>(std::floor((new_log - old_log) / theta_on));
  }
  return -static_cast<std::int64_t>(std::floor((old_log - new_log) / theta_off));
}

/// Captures one event frame. Each pixel whose log-brightness moved by at least
/// one threshold since its memory emits a single bit of the matching
/// polarity, and its memory absorbs every whole crossing.
inline EventFrame sample(std::span<PixelState> state, const DvsConfig& cfg,
                         std::span<const double> brightness, std::uint64_t sample_index) {
  if (state.size() != SensorGeometry::pixels) {
    throw std::invalid_argument("dvs: pixel state has " + std::to_string(state.size()) +
                                " entries, expected 13728");
  }
  if (brightness.size() != SensorGeometry::pixels) {
    throw std::invalid_argument("dvs: brightness image has " + std::to_string(brightness.size()) +
                                " pixels, expected 13728");
  }
  EventFrame frame(sample_index);
  for (std::uint32_t y = 0; y < SensorGeometry::height; ++y) {
    for (std::uint32_t x = 0; x < SensorGeometry::width; ++x) {
      const auto i = SensorGeometry::index(x, y);
      auto& memory = state[i].memorized_log;
      const double d = log_luminance(brightness[i], cfg.epsilon_lum) - memory;
      if (d >= cfg.theta_on) {
        frame.set(x, y, Polarity::On);
        memory += cfg.theta_on * std::floor(d / cfg.theta_on);
      } else if (d <= -cfg.theta_off) {
        frame.set(x, y, Polarity::Off);
        memory -= cfg.theta_off * std::floor(-d / cfg.theta_off);
      }
    }
  }
  return frame;
}

/// Readout filter: drops isolated events (no active 8-neighbour) and events at
/// pixels that alternated polarity through the whole history window.
/// `history` is ordered oldest first and holds unfiltered frames.
inline EventFrame suppress(const EventFrame& frame, std::span<const EventFrame> history,
                           const DvsConfig& cfg) {
  if (!cfg.suppression_enabled) return frame;
  if (history.size() > cfg.flicker_window) {
    throw std::invalid_argument("dvs: suppression history longer than flicker_window");
  }
  const bool full_window = cfg.flicker_window > 0 && history.size() == cfg.flicker_window;

  EventFrame out = frame;
  for (std::uint32_t y = 0; y < SensorGeometry::height; ++y) {
    for (std::uint32_t x = 0; x < SensorGeometry::width; ++x) {
      const auto current = frame.at(x, y);
      if (!current) continue;

      bool isolated = true;
      for (int dy = -1; dy <= 1 && isolated; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = static_cast<int>(x) + dx;
          const int ny = static_cast<int>(y) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<int>(SensorGeometry::width) ||
              ny >= static_cast<int>(SensorGeometry::height)) {
            continue;
          }
          if (frame.active(SensorGeometry::index(static_cast<std::uint32_t>(nx),
                                                 static_cast<std::uint32_t>(ny)))) {
            isolated = false;
            break;
          }
        }
      }

      bool flicker = full_window;
      if (flicker) {
        // Walk backwards from the current frame; every step must flip polarity.
        Polarity next = *current;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
          const auto past = it->at(x, y);
          if (!past || *past == next) {
            flicker = false;
            break;
          }
          next = *past;
        }
      }

      if (isolated || flicker) out.clear(x, y);
    }
  }
  return out;
}

/// DVS132S supply power: constant analog part plus an event-rate dependent
/// digital part that saturates at digital_mw_max.
struct DvsPowerModel {
  double analog_mw = 0.36;
  double digital_mw_max = 0.06;
  /// Reaches the cap at full frames (13728 events) sampled at 7.2 kHz.
  double digital_mw_per_meps = 0.06 / (13728.0 * 7200.0 / 1e6);
};

inline double sensor_power_mw(const DvsPowerModel& model, double event_rate_meps) {
  if (!(event_rate_meps >= 0.0)) {
    throw std::invalid_argument("dvs: event rate must be non-negative");
  }
  return model.analog_mw +
         std::min(model.digital_mw_max, model.digital_mw_per_meps * event_rate_meps);
}

/// Event rate at which the digital part of `model` saturates.
inline double saturating_rate_meps(const DvsPowerModel& model) {
  return model.digital_mw_max / model.digital_mw_per_meps;
}

}  // namespace colibri

#endif  // COLIBRI_DVS_MODEL_HPP
