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

#ifndef COLIBRI_STIMULUS_HPP
#define COLIBRI_STIMULUS_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "colibri/dvs_model.hpp"
#include "colibri/event_core.hpp"

namespace colibri {

// Counter-based generator so any (seed, sample, pixel) draw is reproducible
// without replaying a stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double hashed_gaussian(std::uint64_t seed, std::uint64_t sample, std::uint64_t pixel) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(sample ^ splitmix64(pixel)));
  const double u1 = unit_double(splitmix64(key)) + 0x1.0p-54;
  const double u2 = unit_double(splitmix64(key + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

enum class StimulusShape { MovingBar, MovingDisk };

/// Synthetic scene: a bright shape sliding over a uniform background, with
/// optional seeded per-pixel log-brightness jitter.
struct SyntheticStimulus {
  StimulusShape shape = StimulusShape::MovingBar;
  double background_lum = 0.5;
  /// Shape luminance is background * (1 + contrast).
  double contrast = 0.8;
  double velocity_x_px_per_s = 2000.0;
  double velocity_y_px_per_s = 0.0;
  double start_x_px = 0.0;
  double start_y_px = 52.0;
  double bar_width_px = 8.0;
  double disk_radius_px = 12.0;
  double jitter_log = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double wrap(double v, double period) {
  const double r = std::fmod(v, period);
  return r < 0.0 ? r + period : r;
}

// Overlap of [a, a+len) with the pixel column [x, x+1) on a wrapped axis.
inline double bar_coverage(double bar_left, double len, double x, double period) {
  double cover = 0.0;
  for (double shift : {-period, 0.0, period}) {
    const double lo = std::max(bar_left + shift, x);
    const double hi = std::min(bar_left + shift + len, x + 1.0);
    if (hi > lo) cover += hi - lo;
  }
  return std::min(cover, 1.0);
}

}  // namespace detail

/// Luminance image at `sample_index` for a scene sampled at `sample_rate_hz`.
inline LuminanceImage render_stimulus(const SyntheticStimulus& s, std::uint64_t sample_index,
                                      double sample_rate_hz) {
  constexpr double W = SensorGeometry::width;
  constexpr double H = SensorGeometry::height;
  const double t = static_cast<double>(sample_index) / sample_rate_hz;
  const double cx = detail::wrap(s.start_x_px + s.velocity_x_px_per_s * t, W);
  const double cy = detail::wrap(s.start_y_px + s.velocity_y_px_per_s * t, H);

  LuminanceImage img(SensorGeometry::pixels, s.background_lum);
  for (std::uint32_t y = 0; y < SensorGeometry::height; ++y) {
    for (std::uint32_t x = 0; x < SensorGeometry::width; ++x) {
      double coverage = 0.0;
      if (s.shape == StimulusShape::MovingBar) {
        coverage = detail::bar_coverage(cx - s.bar_width_px / 2.0, s.bar_width_px, x, W);
      } else {
        // 4x4 supersampling against the nearest wrapped image of the disk.
        int inside = 0;
        for (int sy = 0; sy < 4; ++sy) {
          for (int sx = 0; sx < 4; ++sx) {
            double dx = x + (sx + 0.5) / 4.0 - cx;
            double dy = y + (sy + 0.5) / 4.0 - cy;
            dx -= W * std::round(dx / W);
            dy -= H * std::round(dy / H);
            if (dx * dx + dy * dy <= s.disk_radius_px * s.disk_radius_px) ++inside;
          }
        }
        coverage = inside / 16.0;
      }
      double lum = s.background_lum * (1.0 + s.contrast * coverage);
      if (s.jitter_log > 0.0) {
        lum *= std::exp(s.jitter_log *
                        hashed_gaussian(s.seed, sample_index, SensorGeometry::index(x, y)));
      }
      img[SensorGeometry::index(x, y)] = lum;
    }
  }
  return img;
}

/// Reads a binary 8-bit PGM (P5) of exactly 132x104 pixels, normalised to [0, 1].
inline LuminanceImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PGM " + path.string());

  auto next_token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
      } else {
        tok.push_back(c);
      }
    }
    return tok;
  };

  const std::string magic = next_token();
  if (magic != "P5") throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed PGM header");
  }
  if (w != static_cast<int>(SensorGeometry::width) ||
      h != static_cast<int>(SensorGeometry::height)) {
    throw std::runtime_error(path.string() + ": image is " + std::to_string(w) + "x" +
                             std::to_string(h) + ", expected 132x104");
  }
  if (maxval <= 0 || maxval > 255) {
    throw std::runtime_error(path.string() + ": only 8-bit PGM is supported");
  }
  std::vector<unsigned char> raw(SensorGeometry::pixels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error(path.string() + ": truncated pixel data");
  }
  LuminanceImage img(SensorGeometry::pixels);
  for (std::size_t i = 0; i < raw.size(); ++i) img[i] = raw[i] / static_cast<double>(maxval);
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const LuminanceImage& img) {
  if (img.size() != SensorGeometry::pixels) {
    throw std::invalid_argument("pgm: image size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PGM " + path.string());
  out << "P5\n" << SensorGeometry::width << ' ' << SensorGeometry::height << "\n255\n";
  for (double v : img) {
    out.put(static_cast<char>(std::clamp(std::lround(v * 255.0), 0L, 255L)));
  }
}

/// Sorted list of *.pgm files in `dir`; one image per sample instant.
inline std::vector<std::filesystem::path> list_pgm_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("PGM directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

/// Brightness sequence: in-memory images, one per sample instant.
class BrightnessField {
 public:
  BrightnessField() = default;

  void push_back(LuminanceImage img) {
    if (img.size() != SensorGeometry::pixels) {
      throw std::invalid_argument("brightness field: image has " + std::to_string(img.size()) +
                                  " pixels, expected 13728");
    }
    for (double v : img) {
      if (!(v >= 0.0)) throw std::invalid_argument("brightness field: negative luminance");
    }
    images_.push_back(std::move(img));
  }

  static BrightnessField from_pgm_dir(const std::filesystem::path& dir) {
    BrightnessField field;
    for (const auto& f : list_pgm_dir(dir)) field.push_back(read_pgm(f));
    return field;
  }

  std::size_t size() const { return images_.size(); }
  const LuminanceImage& operator[](std::size_t i) const { return images_.at(i); }

 private:
  std::vector<LuminanceImage> images_;
};

}  // namespace colibri

#endif  // COLIBRI_STIMULUS_HPP
