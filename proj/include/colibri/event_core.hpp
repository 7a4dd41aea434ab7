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

#ifndef COLIBRI_EVENT_CORE_HPP
#define COLIBRI_EVENT_CORE_HPP

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace colibri {

/// DVS132S pixel array. Pixels are read out in 2x2 quads.
struct SensorGeometry {
  static constexpr std::uint32_t width = 132;
  static constexpr std::uint32_t height = 104;
  static constexpr std::uint32_t quad_cols = 66;
  static constexpr std::uint32_t quad_rows = 52;
  static constexpr std::size_t pixels = std::size_t{width} * height;
  static constexpr std::size_t quads = std::size_t{quad_cols} * quad_rows;

  static constexpr std::size_t index(std::uint32_t x, std::uint32_t y) {
    return std::size_t{y} * width + x;
  }
  static constexpr bool contains(std::uint32_t x, std::uint32_t y) {
    return x < width && y < height;
  }
};

static_assert(SensorGeometry::width == 2 * SensorGeometry::quad_cols);
static_assert(SensorGeometry::height == 2 * SensorGeometry::quad_rows);
static_assert(SensorGeometry::pixels == 13728);
static_assert(SensorGeometry::quads == 3432);

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

struct Event {
  std::uint64_t t_us = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Polarity polarity = Polarity::On;

  friend bool operator==(const Event&, const Event&) = default;
};

using PixelBitmap = std::bitset<SensorGeometry::pixels>;
using QuadByte = std::uint8_t;

/// Snapshot of the pending ON/OFF bits of every pixel at one sample instant.
/// A pixel carries at most one polarity.
class EventFrame {
 public:
  EventFrame() = default;
  explicit EventFrame(std::uint64_t sample_index) : sample_index_(sample_index) {}

  std::uint64_t sample_index() const { return sample_index_; }
  void set_sample_index(std::uint64_t index) { sample_index_ = index; }

  /// Sets the pixel to `p`, replacing any opposite polarity already there.
  void set(std::uint32_t x, std::uint32_t y, Polarity p) {
    const auto i = checked_index(x, y);
    on_.set(i, p == Polarity::On);
    off_.set(i, p == Polarity::Off);
  }

  void clear(std::uint32_t x, std::uint32_t y) {
    const auto i = checked_index(x, y);
    on_.reset(i);
    off_.reset(i);
  }

  bool on(std::uint32_t x, std::uint32_t y) const { return on_.test(checked_index(x, y)); }
  bool off(std::uint32_t x, std::uint32_t y) const { return off_.test(checked_index(x, y)); }

  std::optional<Polarity> at(std::uint32_t x, std::uint32_t y) const {
    const auto i = checked_index(x, y);
    if (on_.test(i)) return Polarity::On;
    if (off_.test(i)) return Polarity::Off;
    return std::nullopt;
  }

  bool active(std::size_t pixel) const { return on_.test(pixel) || off_.test(pixel); }

  const PixelBitmap& on_bits() const { return on_; }
  const PixelBitmap& off_bits() const { return off_; }

  std::size_t on_count() const { return on_.count(); }
  std::size_t off_count() const { return off_.count(); }

  /// Row-major list of the frame's events, all stamped with `t_us`.
  std::vector<Event> events(std::uint64_t t_us) const {
    std::vector<Event> out;
    out.reserve(on_.count() + off_.count());
    for (std::uint32_t y = 0; y < SensorGeometry::height; ++y) {
      for (std::uint32_t x = 0; x < SensorGeometry::width; ++x) {
        const auto i = SensorGeometry::index(x, y);
        if (on_.test(i)) {
          out.push_back({t_us, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                         Polarity::On});
        } else if (off_.test(i)) {
          out.push_back({t_us, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                         Polarity::Off});
        }
      }
    }
    return out;
  }

  /// Bitmap equality; the sample index is metadata and does not participate.
  bool same_events(const EventFrame& other) const {
    return on_ == other.on_ && off_ == other.off_;
  }

  friend bool operator==(const EventFrame& a, const EventFrame& b) {
    return a.sample_index_ == b.sample_index_ && a.same_events(b);
  }

 private:
  static std::size_t checked_index(std::uint32_t x, std::uint32_t y) {
    if (!SensorGeometry::contains(x, y)) {
      throw std::out_of_range("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                              ") outside 132x104 array");
    }
    return SensorGeometry::index(x, y);
  }

  std::uint64_t sample_index_ = 0;
  PixelBitmap on_;
  PixelBitmap off_;
};

inline std::size_t event_count(const EventFrame& frame) {
  return frame.on_count() + frame.off_count();
}

/// Packs the 2x2 block whose top-left pixel is (2qx, 2qy). Pixels are taken in
/// row-major order, each contributing an ON bit then an OFF bit, MSB first.
inline QuadByte quad_events(const EventFrame& frame, std::uint32_t qx, std::uint32_t qy) {
  if (qx >= SensorGeometry::quad_cols || qy >= SensorGeometry::quad_rows) {
    throw std::out_of_range("quad (" + std::to_string(qx) + "," + std::to_string(qy) +
                            ") outside 66x52 quad grid");
  }
  const auto& on = frame.on_bits();
  const auto& off = frame.off_bits();
  unsigned byte = 0;
  int shift = 7;
  for (std::uint32_t dy = 0; dy < 2; ++dy) {
    for (std::uint32_t dx = 0; dx < 2; ++dx) {
      const auto i = SensorGeometry::index(2 * qx + dx, 2 * qy + dy);
      byte |= (on.test(i) ? 1u : 0u) << shift--;
      byte |= (off.test(i) ? 1u : 0u) << shift--;
    }
  }
  return static_cast<QuadByte>(byte);
}

/// Inverse of quad_events for one block; used by the SAER decoder.
/// Throws if a pixel has both polarity bits set.
inline void apply_quad(EventFrame& frame, std::uint32_t qx, std::uint32_t qy, QuadByte byte) {
  int shift = 7;
  for (std::uint32_t dy = 0; dy < 2; ++dy) {
    for (std::uint32_t dx = 0; dx < 2; ++dx) {
      const bool on = (byte >> shift--) & 1u;
      const bool off = (byte >> shift--) & 1u;
      if (on && off) {
        throw std::invalid_argument("quad byte sets both ON and OFF for one pixel");
      }
      if (on) frame.set(2 * qx + dx, 2 * qy + dy, Polarity::On);
      if (off) frame.set(2 * qx + dx, 2 * qy + dy, Polarity::Off);
    }
  }
}

// Event list text format: one `t_us,x,y,p` record per line, p = 1 (ON) / 0 (OFF).

inline void write_events(std::ostream& os, const std::vector<Event>& events) {
  for (const auto& e : events) {
    os << e.t_us << ',' << e.x << ',' << e.y << ',' << (e.polarity == Polarity::On ? 1 : 0)
       << '\n';
  }
}

inline std::vector<Event> read_events(std::istream& is) {
  std::vector<Event> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    unsigned long long t = 0, x = 0, y = 0, p = 0;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%llu,%llu%c", &t, &x, &y, &p, &trailing) != 4 ||
        line.front() == '-' || p > 1 || x >= SensorGeometry::width ||
        y >= SensorGeometry::height) {
      throw std::invalid_argument("event list line " + std::to_string(line_no) +
                                  ": expected t_us,x,y,p within the sensor array");
    }
    out.push_back({t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                   p == 1 ? Polarity::On : Polarity::Off});
  }
  return out;
}

}  // namespace colibri

#endif  // COLIBRI_EVENT_CORE_HPP
