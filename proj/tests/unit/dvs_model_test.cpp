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

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "colibri/dvs_model.hpp"
#include "colibri/stimulus.hpp"

namespace colibri {
namespace {

// Crossing count by repeated subtraction.
std::int64_t crossings_oracle(double old_log, double new_log, double theta_on, double theta_off) {
  std::int64_t n = 0;
  if (new_log >= old_log) {
    for (double r = new_log - old_log; r >= theta_on; r -= theta_on) ++n;
    return n;
  }
  for (double r = old_log - new_log; r >= theta_off; r -= theta_off) ++n;
  return -n;
}

int active_neighbours(const EventFrame& f, int x, int y) {
  int n = 0;
  for (int yy = y - 1; yy <= y + 1; ++yy) {
    for (int xx = x - 1; xx <= x + 1; ++xx) {
      if ((xx == x && yy == y) || xx < 0 || yy < 0 || xx >= 132 || yy >= 104) continue;
      if (f.at(static_cast<std::uint32_t>(xx), static_cast<std::uint32_t>(yy))) ++n;
    }
  }
  return n;
}

LuminanceImage uniform(double v) { return LuminanceImage(SensorGeometry::pixels, v); }

TEST(PendingCrossings, Examples) {
  EXPECT_EQ(pending_event_crossings(0.0, 0.65, 0.2, 0.2), 3);
  EXPECT_EQ(pending_event_crossings(0.4, 0.4, 0.2, 0.2), 0);
  const double b = 0.37;
  EXPECT_EQ(pending_event_crossings(std::log(b), std::log(2 * b), 0.2, 0.2),
            pending_event_crossings(std::log(2 * b), std::log(4 * b), 0.2, 0.2));
  EXPECT_EQ(pending_event_crossings(0.0, -0.693, 0.2, 0.3), -2);
}

TEST(PendingCrossings, MatchesSubtractionOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> logs(-5.0, 5.0), th(0.05, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = logs(rng), b = logs(rng), on = th(rng), off = th(rng);
    ASSERT_EQ(pending_event_crossings(a, b, on, off), crossings_oracle(a, b, on, off))
        << a << " -> " << b << " on " << on << " off " << off;
  }
}

TEST(PendingCrossings, RejectsNonPositiveThreshold) {
  EXPECT_THROW(pending_event_crossings(0, 1, 0.0, 0.2), std::invalid_argument);
  EXPECT_THROW(pending_event_crossings(0, 1, 0.2, -1.0), std::invalid_argument);
}

TEST(Sample, ConstantBrightnessGivesEmptyFrames) {
  DvsConfig cfg;
  auto img = uniform(0.4);
  auto state = initial_state(img, cfg);
  EXPECT_EQ(event_count(sample(state, cfg, img, 1)), 0u);
  EXPECT_EQ(event_count(sample(state, cfg, img, 2)), 0u);
}

TEST(Sample, MultipleCrossingsCollapseToOneBit) {
  DvsConfig cfg;
  std::vector<PixelState> state(SensorGeometry::pixels);  // memorized_log = 0
  auto img = uniform(1.0);                                 // log 0: no change elsewhere
  img[SensorGeometry::index(7, 9)] = std::exp(0.65);
  const auto f = sample(state, cfg, img, 1);
  EXPECT_TRUE(f.on(7, 9));
  EXPECT_EQ(event_count(f), 1u);
  // Three whole crossings absorbed: 0.65 -> memory 0.6.
  EXPECT_NEAR(state[SensorGeometry::index(7, 9)].memorized_log, 0.6, 1e-12);
}

TEST(Sample, HalvingBrightnessEmitsOff) {
  DvsConfig cfg;
  auto before = uniform(0.8);
  auto state = initial_state(before, cfg);
  auto after = before;
  after[SensorGeometry::index(3, 4)] = 0.4;
  const auto f = sample(state, cfg, after, 1);
  EXPECT_TRUE(f.off(3, 4));
  EXPECT_EQ(event_count(f), 1u);
  EXPECT_NEAR(state[SensorGeometry::index(3, 4)].memorized_log, std::log(0.8) - 3 * 0.2, 1e-12);
}

TEST(Sample, ZeroBrightnessIsClampedToEpsilon) {
  DvsConfig cfg;
  auto state = initial_state(uniform(0.0), cfg);
  EXPECT_DOUBLE_EQ(state[0].memorized_log, std::log(cfg.epsilon_lum));
  EXPECT_EQ(event_count(sample(state, cfg, uniform(0.0), 1)), 0u);
}

TEST(Sample, RejectsDimensionMismatch) {
  DvsConfig cfg;
  std::vector<PixelState> state(SensorGeometry::pixels);
  LuminanceImage small(100, 1.0);
  EXPECT_THROW(sample(state, cfg, small, 0), std::invalid_argument);
  std::vector<PixelState> wrong(10);
  EXPECT_THROW(sample(wrong, cfg, uniform(1.0), 0), std::invalid_argument);
  EXPECT_THROW(initial_state(small, cfg), std::invalid_argument);
}

TEST(Sample, ResidualsStayBelowThreshold) {
  DvsConfig cfg;
  cfg.theta_on = 0.15;
  cfg.theta_off = 0.25;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> lum(0.01, 1.0);
  auto img = uniform(0.5);
  auto state = initial_state(img, cfg);
  for (int k = 1; k <= 5; ++k) {
    for (auto& v : img) v = lum(rng);
    sample(state, cfg, img, k);
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double residual = std::log(img[i]) - state[i].memorized_log;
      ASSERT_LT(std::abs(residual), std::max(cfg.theta_on, cfg.theta_off)) << "pixel " << i;
      ASSERT_LT(residual, cfg.theta_on);
      ASSERT_GT(residual, -cfg.theta_off);
    }
  }
}

TEST(Sample, DeterministicReplay) {
  DvsConfig cfg;
  SyntheticStimulus s;
  s.jitter_log = 0.05;
  s.seed = 9;
  auto run = [&] {
    auto state = initial_state(render_stimulus(s, 0, cfg.sample_rate_hz), cfg);
    std::vector<EventFrame> frames;
    for (std::uint64_t k = 1; k <= 6; ++k) frames.push_back(sample(state, cfg, render_stimulus(s, k, cfg.sample_rate_hz), k));
    return frames;
  };
  EXPECT_EQ(run(), run());
}

TEST(Sample, GlobalScaleLeavesEventsUnchanged) {
  DvsConfig cfg;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> lum(0.05, 1.0);
  std::vector<LuminanceImage> seq(4, uniform(0));
  for (auto& img : seq) {
    for (auto& v : img) v = lum(rng);
  }
  auto run = [&](double c) {
    std::vector<LuminanceImage> scaled = seq;
    for (auto& img : scaled) {
      for (auto& v : img) v *= c;
    }
    auto state = initial_state(scaled[0], cfg);
    std::vector<EventFrame> frames;
    for (std::size_t k = 1; k < scaled.size(); ++k) frames.push_back(sample(state, cfg, scaled[k], k));
    return frames;
  };
  const auto base = run(1.0);
  EXPECT_GT(event_count(base[0]), 0u);
  for (double c : {0.5, 2.0, 10.0}) EXPECT_EQ(run(c), base) << "scale " << c;
}

TEST(Suppress, DisabledIsIdentity) {
  DvsConfig cfg;
  cfg.suppression_enabled = false;
  EventFrame f(4);
  f.set(10, 10, Polarity::On);
  EXPECT_EQ(suppress(f, {}, cfg), f);
}

TEST(Suppress, IsolatedEventRemoved) {
  DvsConfig cfg;
  cfg.suppression_enabled = true;
  EventFrame f;
  f.set(50, 50, Polarity::On);
  EXPECT_EQ(event_count(suppress(f, {}, cfg)), 0u);
}

TEST(Suppress, BlockRetained) {
  DvsConfig cfg;
  cfg.suppression_enabled = true;
  EventFrame f;
  for (std::uint32_t y = 0; y < 3; ++y) {
    for (std::uint32_t x = 0; x < 3; ++x) f.set(x, y, Polarity::On);
  }
  EXPECT_EQ(suppress(f, {}, cfg), f);
}

TEST(Suppress, MatchesNeighbourOracleAndIsSubset) {
  DvsConfig cfg;
  cfg.suppression_enabled = true;
  cfg.flicker_window = 0;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (double density : {0.01, 0.05, 0.2}) {
    EventFrame f;
    for (std::uint32_t y = 0; y < 104; ++y) {
      for (std::uint32_t x = 0; x < 132; ++x) {
        if (u(rng) < density) f.set(x, y, u(rng) < 0.5 ? Polarity::On : Polarity::Off);
      }
    }
    const auto out = suppress(f, {}, cfg);
    for (std::uint32_t y = 0; y < 104; ++y) {
      for (std::uint32_t x = 0; x < 132; ++x) {
        const auto in_p = f.at(x, y);
        const auto out_p = out.at(x, y);
        if (!in_p) {
          ASSERT_FALSE(out_p);
          continue;
        }
        const bool keep = active_neighbours(f, static_cast<int>(x), static_cast<int>(y)) > 0;
        ASSERT_EQ(out_p.has_value(), keep) << x << "," << y;
        if (out_p) {
          ASSERT_EQ(*out_p, *in_p);
        }
      }
    }
  }
}

TEST(Suppress, FlickeringPixelRemovedOnlyWithFullWindow) {
  DvsConfig cfg;
  cfg.suppression_enabled = true;
  cfg.flicker_window = 3;
  // A 2x2 cluster keeps every pixel non-isolated; pixel (20,20) alternates.
  auto frame_with = [](Polarity p) {
    EventFrame f;
    f.set(20, 20, p);
    f.set(21, 20, Polarity::On);
    f.set(20, 21, Polarity::On);
    f.set(21, 21, Polarity::On);
    return f;
  };
  const std::vector<EventFrame> history = {frame_with(Polarity::Off), frame_with(Polarity::On),
                                           frame_with(Polarity::Off)};
  const auto current = frame_with(Polarity::On);
  const auto out = suppress(current, history, cfg);
  EXPECT_FALSE(out.at(20, 20));
  // Steady pixels are kept.
  EXPECT_TRUE(out.on(21, 20));

  // Partial window: not enough evidence.
  const std::vector<EventFrame> partial(history.begin() + 1, history.end());
  EXPECT_TRUE(suppress(current, partial, cfg).on(20, 20));

  // A repeated polarity breaks the alternation.
  auto broken = history;
  broken[1] = frame_with(Polarity::Off);
  EXPECT_TRUE(suppress(current, broken, cfg).on(20, 20));

  const std::vector<EventFrame> too_long(4, current);
  EXPECT_THROW(suppress(current, too_long, cfg), std::invalid_argument);
}

TEST(SensorPower, AnchorPoints) {
  const DvsPowerModel m;
  EXPECT_DOUBLE_EQ(sensor_power_mw(m, 0.0), 0.36);
  EXPECT_NEAR(sensor_power_mw(m, saturating_rate_meps(m)), 0.42, 1e-12);
  EXPECT_NEAR(sensor_power_mw(m, 1e6), 0.42, 1e-12);
  EXPECT_NEAR(sensor_power_mw(m, saturating_rate_meps(m) / 2), 0.39, 1e-12);
  EXPECT_NEAR(saturating_rate_meps(m), 13728 * 7200 / 1e6, 1e-9);
  EXPECT_THROW(sensor_power_mw(m, -1.0), std::invalid_argument);
}

TEST(SensorPower, MonotoneAndBounded) {
  const DvsPowerModel m;
  double prev = 0.0;
  for (double r = 0.0; r < 300.0; r += 0.7) {
    const double p = sensor_power_mw(m, r);
    ASSERT_GE(p, prev);
    ASSERT_LE(p, m.analog_mw + m.digital_mw_max + 1e-15);
    prev = p;
  }
}

TEST(Stimulus, ZeroContrastProducesNoEvents) {
  DvsConfig cfg;
  SyntheticStimulus s;
  s.contrast = 0.0;
  auto state = initial_state(render_stimulus(s, 0, cfg.sample_rate_hz), cfg);
  for (std::uint64_t k = 1; k < 20; ++k) {
    ASSERT_EQ(event_count(sample(state, cfg, render_stimulus(s, k, cfg.sample_rate_hz), k)), 0u);
  }
}

TEST(Stimulus, MovingBarProducesLeadingOnAndTrailingOff) {
  DvsConfig cfg;
  SyntheticStimulus s;
  s.velocity_x_px_per_s = 14400.0;  // 2 px per sample
  s.start_x_px = 40;
  s.contrast = 1.0;
  auto state = initial_state(render_stimulus(s, 0, cfg.sample_rate_hz), cfg);
  const auto f = sample(state, cfg, render_stimulus(s, 1, cfg.sample_rate_hz), 1);
  EXPECT_GT(f.on_count(), 0u);
  EXPECT_GT(f.off_count(), 0u);
  EXPECT_TRUE(f.on(45, 10));   // leading edge moves from 44 to 46
  EXPECT_TRUE(f.off(36, 10));  // trailing edge leaves 36..37
}

TEST(Stimulus, MovingDiskCoversItsCentre) {
  SyntheticStimulus s;
  s.shape = StimulusShape::MovingDisk;
  s.start_x_px = 60;
  s.start_y_px = 50;
  s.contrast = 1.0;
  const auto img = render_stimulus(s, 0, 7200);
  EXPECT_DOUBLE_EQ(img[SensorGeometry::index(60, 50)], 1.0);
  EXPECT_DOUBLE_EQ(img[SensorGeometry::index(0, 0)], 0.5);
}

TEST(Pgm, RoundTripAndDirectoryOrder) {
  const auto dir = std::filesystem::temp_directory_path() / "colibri_pgm_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  LuminanceImage a = uniform(0.2), b = uniform(1.0);
  a[5] = 1.0;
  write_pgm(dir / "frame_002.pgm", b);
  write_pgm(dir / "frame_001.pgm", a);
  const auto field = BrightnessField::from_pgm_dir(dir);
  ASSERT_EQ(field.size(), 2u);
  EXPECT_NEAR(field[0][0], 51.0 / 255.0, 1e-12);
  EXPECT_DOUBLE_EQ(field[0][5], 1.0);
  EXPECT_DOUBLE_EQ(field[1][0], 1.0);
  std::filesystem::remove_all(dir);
}

TEST(Pgm, RejectsWrongGeometry) {
  const auto path = std::filesystem::temp_directory_path() / "colibri_bad.pgm";
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n10 10\n255\n" << std::string(100, '\0');
  }
  EXPECT_THROW(read_pgm(path), std::runtime_error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace colibri
