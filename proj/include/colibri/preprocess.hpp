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

// Spike preprocessing: maps event frames (or timestamped events) onto the
// timestep grid the spiking network consumes. Channel 0 carries ON events,
// channel 1 OFF events.

#ifndef COLIBRI_PREPROCESS_HPP
#define COLIBRI_PREPROCESS_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "colibri/event_core.hpp"
#include "colibri/snn_engine.hpp"

namespace colibri {

inline std::uint32_t polarity_channel(Polarity p) { return p == Polarity::On ? 0u : 1u; }

inline std::uint32_t binned_steps(std::size_t n_frames, std::uint32_t frames_per_timestep) {
  if (frames_per_timestep == 0) throw std::invalid_argument("preprocess: frames_per_timestep must be positive");
  return static_cast<std::uint32_t>((n_frames + frames_per_timestep - 1) / frames_per_timestep);
}

/// Frame k lands in timestep k / frames_per_timestep; repeated pixels within a
/// bin collapse to one spike per polarity.
inline SpikeTensor bin_frames(std::span<const EventFrame> frames, std::uint32_t frames_per_timestep = 1) {
  SpikeTensor out(kDvsInputShape, binned_steps(frames.size(), frames_per_timestep));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto t = static_cast<std::uint32_t>(k / frames_per_timestep);
    for (std::uint32_t p = 0; p < 2; ++p) {
      const auto& bits = p == 0 ? frames[k].on_bits() : frames[k].off_bits();
      for (std::uint32_t y = 0; y < SensorGeometry::height; ++y) {
        for (std::uint32_t x = 0; x < SensorGeometry::width; ++x) {
          if (bits.test(SensorGeometry::index(x, y))) out.add(t, {p, y, x});
        }
      }
    }
  }
  return out;
}

/// Bins a timestamped event list: timestep = t_us / bin_us. Events at or past
/// `steps * bin_us` are rejected.
inline SpikeTensor bin_events(std::span<const Event> events, std::uint64_t bin_us, std::uint32_t steps) {
  if (bin_us == 0) throw std::invalid_argument("preprocess: bin_us must be positive");
  SpikeTensor out(kDvsInputShape, steps);
  for (const auto& e : events) {
    const std::uint64_t t = e.t_us / bin_us;
    if (t >= steps) {
      throw std::invalid_argument("preprocess: event at " + std::to_string(e.t_us) + " us falls outside " +
                                  std::to_string(steps) + " bins");
    }
    out.add(static_cast<std::uint32_t>(t), {polarity_channel(e.polarity), e.y, e.x});
  }
  return out;
}

}  // namespace colibri

#endif  // COLIBRI_PREPROCESS_HPP
