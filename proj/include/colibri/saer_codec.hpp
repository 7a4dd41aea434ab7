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

#ifndef COLIBRI_SAER_CODEC_HPP
#define COLIBRI_SAER_CODEC_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "colibri/event_core.hpp"

namespace colibri {

/// One SAER clock: the quad column address and the packed 2x2 event byte.
/// The quad row is implicit in scan order.
struct SaerWord {
  std::uint8_t addr_byte = 0;
  QuadByte event_byte = 0;

  friend bool operator==(const SaerWord&, const SaerWord&) = default;
};

/// Words of one frame in row-major quad scan order. encode() always yields
/// SensorGeometry::quads words; decode() validates streams from elsewhere.
struct SaerStream {
  std::vector<SaerWord> words;

  friend bool operator==(const SaerStream&, const SaerStream&) = default;
};

inline constexpr std::size_t kSaerWordsPerFrame = SensorGeometry::quads;
inline constexpr std::size_t kSaerBytesPerFrame = 2 * kSaerWordsPerFrame;

class MalformedStream : public std::runtime_error {
 public:
  MalformedStream(std::size_t word_index, const std::string& what)
      : std::runtime_error("malformed SAER stream at word " + std::to_string(word_index) + ": " +
                           what),
        word_index_(word_index) {}

  std::size_t word_index() const { return word_index_; }

 private:
  std::size_t word_index_;
};

inline SaerStream encode(const EventFrame& frame) {
  SaerStream stream;
  stream.words.reserve(kSaerWordsPerFrame);
  for (std::uint32_t qy = 0; qy < SensorGeometry::quad_rows; ++qy) {
    for (std::uint32_t qx = 0; qx < SensorGeometry::quad_cols; ++qx) {
      stream.words.push_back({static_cast<std::uint8_t>(qx), quad_events(frame, qx, qy)});
    }
  }
  return stream;
}

inline EventFrame decode(const SaerStream& stream, std::uint64_t sample_index = 0) {
  const auto& words = stream.words;
  const std::size_t checked = std::min(words.size(), kSaerWordsPerFrame);
  EventFrame frame(sample_index);
  for (std::size_t k = 0; k < checked; ++k) {
    const auto qx = static_cast<std::uint32_t>(k % SensorGeometry::quad_cols);
    const auto qy = static_cast<std::uint32_t>(k / SensorGeometry::quad_cols);
    if (words[k].addr_byte != qx) {
      throw MalformedStream(k, "address " + std::to_string(words[k].addr_byte) + ", expected " +
                                   std::to_string(qx));
    }
    try {
      apply_quad(frame, qx, qy, words[k].event_byte);
    } catch (const std::invalid_argument& e) {
      throw MalformedStream(k, e.what());
    }
  }
  if (words.size() != kSaerWordsPerFrame) {
    throw MalformedStream(checked, "stream has " + std::to_string(words.size()) +
                                       " words, expected 3432");
  }
  return frame;
}

// Fixture wire format: addr_byte, event_byte per word, no header.

inline std::vector<std::uint8_t> to_bytes(const SaerStream& stream) {
  std::vector<std::uint8_t> out;
  out.reserve(2 * stream.words.size());
  for (const auto& w : stream.words) {
    out.push_back(w.addr_byte);
    out.push_back(w.event_byte);
  }
  return out;
}

inline SaerStream from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 2 != 0) {
    throw MalformedStream(bytes.size() / 2, "odd byte count " + std::to_string(bytes.size()));
  }
  SaerStream stream;
  stream.words.reserve(bytes.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); i += 2) {
    stream.words.push_back({bytes[i], bytes[i + 1]});
  }
  return stream;
}

/// FNV-1a over the wire bytes; stable across platforms.
inline std::uint64_t stream_digest(const SaerStream& stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : stream.words) {
    for (std::uint8_t b : {w.addr_byte, w.event_byte}) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

struct ClockConfig {
  double system_clock_hz = 50e6;
  std::uint32_t cycles_per_word = 1;

  void validate() const {
    if (!(system_clock_hz > 0.0)) throw std::invalid_argument("clock: system_clock_hz must be positive");
    if (cycles_per_word == 0) throw std::invalid_argument("clock: cycles_per_word must be positive");
  }
};

/// Readout time of one frame; fixed regardless of how many events it holds.
/// Sparse auxiliary clocks are not counted.
inline double saer_frame_time_us(const ClockConfig& clk) {
  clk.validate();
  return static_cast<double>(kSaerWordsPerFrame) * clk.cycles_per_word * 1e6 / clk.system_clock_hz;
}

/// 32-bit event words over USB 2.0 at 480 Mbit/s, rounded as commonly quoted.
inline constexpr double kUsbEventTimeUs = 0.067;

inline double usb_frame_time_us(std::size_t n_events) {
  if (n_events > SensorGeometry::pixels) {
    throw std::invalid_argument("usb: " + std::to_string(n_events) +
                                " events exceed a full frame of 13728");
  }
  return static_cast<double>(n_events) * kUsbEventTimeUs;
}

enum class Interface { SaerColibri, SaerFpga, Usb };

inline Interface parse_interface(std::string_view tag) {
  if (tag == "saer_colibri") return Interface::SaerColibri;
  if (tag == "saer_fpga") return Interface::SaerFpga;
  if (tag == "usb") return Interface::Usb;
  throw std::invalid_argument("unknown interface '" + std::string(tag) +
                              "' (expected saer_colibri, saer_fpga or usb)");
}

struct InterfaceParams {
  /// Event-frame sample rate programmed on the SoC.
  double saer_sample_rate_hz = 7200.0;
  /// Host power while fetching over SAER (camera excluded).
  double saer_host_power_mw = 10.656;
  /// Low-power FPGA reader operating point.
  double fpga_efps = 874.0;
  double fpga_power_mw = 17.6;
  /// USB hosts run at watt level; this is a lower bound, not a measurement.
  double usb_power_floor_mw = 1000.0;
};

/// Event-frame throughput assuming fully populated frames.
inline double interface_throughput_efps(Interface iface, const InterfaceParams& p = {}) {
  switch (iface) {
    case Interface::SaerColibri:
      return p.saer_sample_rate_hz;
    case Interface::SaerFpga:
      return p.fpga_efps;
    case Interface::Usb:
      return 1e6 / usb_frame_time_us(SensorGeometry::pixels);
  }
  throw std::invalid_argument("unknown interface");
}

struct InterfacePower {
  double mw = 0.0;
  bool lower_bound = false;
};

inline InterfacePower interface_power_mw(Interface iface, const InterfaceParams& p = {}) {
  switch (iface) {
    case Interface::SaerColibri:
      return {p.saer_host_power_mw, false};
    case Interface::SaerFpga:
      return {p.fpga_power_mw, false};
    case Interface::Usb:
      return {p.usb_power_floor_mw, true};
  }
  throw std::invalid_argument("unknown interface");
}

}  // namespace colibri

#endif  // COLIBRI_SAER_CODEC_HPP
