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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "colibri/pipeline_budget.hpp"
#include "colibri/saer_codec.hpp"
#include "colibri/simulation.hpp"
#include "colibri/snn_engine.hpp"
#include "colibri/stimulus.hpp"

namespace fs = std::filesystem;
using namespace colibri;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool within_rel(double got, double want, double rel) { return std::fabs(got - want) <= rel * std::fabs(want); }

// A reference figure quoted to `decimals` places matches when our value rounds to it
// or lies within `rel` of it.
bool matches_quoted(double got, double quoted, int decimals, double rel) {
  const double scale = std::pow(10.0, decimals);
  return std::llround(got * scale) == std::llround(quoted * scale) || within_rel(got, quoted, rel);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') {
        quoted = !quoted;
      } else if (ch == ',' && !quoted) {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += ch;
      }
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Outcome interface_table() {
  Outcome o;
  std::ostringstream os;
  cmd_table("interface", os);
  std::map<std::string, std::vector<std::string>> rows;
  for (const auto& r : parse_csv(os.str())) {
    if (r.size() == 3) rows[r[0]] = r;
  }
  o.check(rows.count("USB") && rows["USB"][1] == "1087", "USB efps");
  o.check(rows.count("SAER on FPGA") && rows["SAER on FPGA"][1] == "874", "FPGA efps");
  o.check(rows.count("SAER on ColibriUAV") && rows["SAER on ColibriUAV"][1] == "7200", "SAER efps");
  const double saer_mw = rows.count("SAER on ColibriUAV") ? std::stod(rows["SAER on ColibriUAV"][2]) : -1.0;
  o.check(std::fabs(saer_mw - 10.656) <= 0.001, fmt("SAER power %.6f mW", saer_mw));
  if (o.pass) o.detail = "USB 1087, FPGA 874, SAER 7200 efps at " + fmt("%.3f mW", saer_mw);
  return o;
}

Outcome closed_loop_table() {
  Outcome o;
  std::ostringstream os;
  cmd_table("closed_loop", os);
  const auto rows = parse_csv(os.str());
  auto find = [&](const std::string& prefix) -> std::vector<double> {
    for (const auto& r : rows) {
      if (r.size() == 4 && r[0].rfind(prefix, 0) == 0) return {std::stod(r[1]), std::stod(r[2]), std::stod(r[3])};
    }
    return {};
  };
  const auto total = find("Total");
  const auto frame = find("DVS and SAER (single");
  const auto window = find("DVS and SAER (one window");
  const auto pre = find("Preprocessing");
  const auto inf = find("Inference");
  if (total.empty() || frame.empty() || window.empty() || pre.empty() || inf.empty()) {
    o.check(false, "missing rows in closed_loop table");
    return o;
  }
  o.check(within_rel(total[0], 163.0, 0.005), fmt("total latency %.5f ms", total[0]));
  o.check(within_rel(total[1], 46.98, 0.005), fmt("total power %.4f mW", total[1]));
  o.check(within_rel(total[2], 9.224, 0.005), fmt("total energy %.4f mJ", total[2]));
  o.check(matches_quoted(frame[0], 0.069, 3, 0.005), fmt("single frame %.5f ms", frame[0]));
  o.check(within_rel(window[2], 3.323, 0.005), fmt("window energy %.4f mJ", window[2]));
  o.check(within_rel(pre[0], 131.0, 0.005) && within_rel(pre[1], 34.0, 0.005), "preprocessing row");
  o.check(within_rel(inf[0], 32.0, 0.005) && within_rel(inf[1], 44.0, 0.005), "inference row");
  if (o.pass) {
    o.detail = fmt("total %.5f ms / %.3f mW / %.4f mJ", total[0], total[1], total[2]) +
               fmt(" (energy %+.2f%%); single frame %.5f ms (%+.2f%% vs 0.069)",
                   100.0 * (total[2] / 9.224 - 1.0), frame[0], 100.0 * (frame[0] / 0.069 - 1.0));
  }
  return o;
}

Outcome saer_timing() {
  Outcome o;
  const double one = saer_frame_time_us({50e6, 1});
  const double two = saer_frame_time_us({50e6, 2});
  const double usb = usb_frame_time_us(SensorGeometry::pixels);
  o.check(one == 68.64, fmt("1 cycle/word %.10f us", one));
  o.check(two == 137.28 && within_rel(two, 139.0, 0.02), fmt("2 cycles/word %.10f us", two));
  o.check(std::fabs(usb - 919.8) <= 0.1, fmt("USB %.4f us", usb));
  if (o.pass) {
    o.detail = fmt("%.2f us, %.2f us (%+.2f%% vs 139)", one, two, 100.0 * (two / 139.0 - 1.0)) +
               fmt(", USB %.3f us (%+.3f us vs 920)", usb, usb - 920.0);
  }
  return o;
}

Outcome codec_properties() {
  Outcome o;
  constexpr std::size_t kFrames = 10000;
  std::mt19937_64 rng(20260101);
  std::vector<std::size_t> order(SensorGeometry::pixels);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t failures = 0, bad_structure = 0;
  for (std::size_t k = 0; k < kFrames; ++k) {
    const std::size_t n = k * SensorGeometry::pixels / (kFrames - 1);
    // Partial Fisher-Yates: the first n entries become a random n-subset.
    for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng() % (order.size() - i)]);
    EventFrame f(k);
    for (std::size_t i = 0; i < n; ++i) {
      f.set(static_cast<std::uint32_t>(order[i] % SensorGeometry::width),
            static_cast<std::uint32_t>(order[i] / SensorGeometry::width), (rng() & 1) ? Polarity::On : Polarity::Off);
    }
    const SaerStream s = encode(f);
    bool structure = s.words.size() == 3432;
    for (std::size_t w = 0; structure && w < s.words.size(); ++w) structure = s.words[w].addr_byte == w % 66;
    if (!structure) ++bad_structure;
    const EventFrame back = decode(s, k);
    if (!(back == f) || event_count(back) != n) ++failures;
  }
  o.check(failures == 0, std::to_string(failures) + " round-trip mismatches");
  o.check(bad_structure == 0, std::to_string(bad_structure) + " malformed streams");
  if (o.pass) o.detail = std::to_string(kFrames) + " frames, densities 0..13728, all round-trip";
  return o;
}

// Counts crossings by repeated subtraction.
std::int64_t crossings_oracle(double old_log, double new_log, double on, double off) {
  std::int64_t n = 0;
  double d = new_log - old_log;
  while (d >= on) {
    d -= on;
    ++n;
  }
  while (d <= -off) {
    d += off;
    --n;
  }
  return n;
}

Outcome dvs_oracles() {
  Outcome o;
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> logs(-8.0, 2.0), theta(0.05, 0.6);
  std::size_t mismatches = 0;
  constexpr int kTriples = 5000;
  for (int i = 0; i < kTriples; ++i) {
    const double a = logs(rng), b = logs(rng), on = theta(rng), off = theta(rng);
    if (pending_event_crossings(a, b, on, off) != crossings_oracle(a, b, on, off)) ++mismatches;
  }
  o.check(mismatches == 0, std::to_string(mismatches) + " crossing mismatches");

  std::size_t residual_violations = 0, scale_mismatches = 0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    SyntheticStimulus s;
    s.shape = (trial % 2) ? StimulusShape::MovingDisk : StimulusShape::MovingBar;
    s.background_lum = 0.1 + 0.8 * u(rng);
    s.contrast = -0.8 + 2.8 * u(rng);
    s.velocity_x_px_per_s = -20000 + 40000 * u(rng);
    s.velocity_y_px_per_s = -10000 + 20000 * u(rng);
    s.start_x_px = 132 * u(rng);
    s.start_y_px = 104 * u(rng);
    s.bar_width_px = 2 + 12 * u(rng);
    s.disk_radius_px = 3 + 15 * u(rng);
    s.jitter_log = 0.03 * u(rng);
    s.seed = rng();
    DvsConfig cfg;
    cfg.theta_on = theta(rng);
    cfg.theta_off = theta(rng);

    const auto first = render_stimulus(s, 0, cfg.sample_rate_hz);
    auto base = initial_state(first, cfg);
    std::vector<std::vector<PixelState>> scaled_states;
    const double scales[] = {0.5, 2.0, 10.0};
    for (double c : scales) {
      auto img = first;
      for (auto& v : img) v *= c;
      scaled_states.push_back(initial_state(img, cfg));
    }
    const double bound = std::max(cfg.theta_on, cfg.theta_off);
    for (std::uint64_t k = 1; k <= 6; ++k) {
      const auto img = render_stimulus(s, k, cfg.sample_rate_hz);
      const EventFrame ref = sample(base, cfg, img, k);
      for (std::size_t i = 0; i < img.size(); ++i) {
        if (std::fabs(log_luminance(img[i], cfg.epsilon_lum) - base[i].memorized_log) >= bound) ++residual_violations;
      }
      for (std::size_t j = 0; j < 3; ++j) {
        auto scaled = img;
        for (auto& v : scaled) v *= scales[j];
        if (!sample(scaled_states[j], cfg, scaled, k).same_events(ref)) ++scale_mismatches;
      }
    }
  }
  o.check(residual_violations == 0, std::to_string(residual_violations) + " residual violations");
  o.check(scale_mismatches == 0, std::to_string(scale_mismatches) + " scaled frames differ");
  if (o.pass) o.detail = std::to_string(kTriples) + " crossing triples; 100 stimuli x 6 frames x 3 scales identical";
  return o;
}

SnnLayer random_small_layer(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  SnnLayerConfig c;
  c.name = "random";
  c.kind = pick(0, 4) == 0 ? LayerKind::FullyConnected : LayerKind::Conv;
  c.input = {static_cast<std::uint32_t>(pick(1, 16)), static_cast<std::uint32_t>(pick(3, 16)),
             static_cast<std::uint32_t>(pick(3, 16))};
  c.out_channels = static_cast<std::uint32_t>(pick(1, 16));
  if (c.kind == LayerKind::Conv) {
    c.kernel_h = static_cast<std::uint32_t>(pick(1, 3));
    c.kernel_w = static_cast<std::uint32_t>(pick(1, 3));
    c.stride = static_cast<std::uint32_t>(pick(1, 2));
  }
  c.base_potential = static_cast<Membrane>(pick(-6, 3));
  c.threshold = static_cast<Membrane>(pick(4, 40));
  c.adapt_increment = static_cast<Membrane>(pick(0, 4));
  c.adapt_decay = static_cast<Membrane>(pick(0, 2));
  c.refractory_steps = static_cast<std::uint32_t>(pick(0, 4));
  c.timestep_shift = static_cast<std::uint32_t>(pick(0, 3));
  std::vector<Weight> w(c.weight_count());
  for (auto& v : w) v = static_cast<Weight>(pick(-8, 16));
  return {c, w};
}

Outcome snn_properties() {
  Outcome o;
  std::mt19937_64 rng(777);
  constexpr int kLayers = 250;
  constexpr std::uint32_t kSteps = 12;
  std::size_t tiling_mismatches = 0, refractory_violations = 0, reset_violations = 0;
  std::uint64_t spikes_seen = 0;
  for (int trial = 0; trial < kLayers; ++trial) {
    const SnnLayer layer = random_small_layer(rng);
    const auto& c = layer.config;
    const double density = 0.05 + 0.3 * static_cast<double>(rng() % 1000) / 1000.0;
    SpikeTensor in(c.input, kSteps);
    for (std::uint32_t t = 0; t < kSteps; ++t) {
      for (std::uint32_t ch = 0; ch < c.input.channels; ++ch) {
        for (std::uint32_t y = 0; y < c.input.height; ++y) {
          for (std::uint32_t x = 0; x < c.input.width; ++x) {
            if (static_cast<double>(rng() % 1000000) / 1e6 < density) in.add(t, {ch, y, x});
          }
        }
      }
    }
    const SpikeTensor ref = run_layer(layer, in, kSteps);
    const std::size_t per = c.weights_per_channel();
    const std::size_t budget = per * (1 + rng() % c.out_channels);
    const std::size_t state = (rng() & 1) ? std::numeric_limits<std::size_t>::max() : 1 + rng() % 64;
    if (!(run_layer_tiled(layer, in, kSteps, plan_tiles(c, budget, state)) == ref)) ++tiling_mismatches;

    // Refractory gaps on the emitted trains.
    const Shape3 out = c.output_shape();
    std::vector<std::int64_t> last(out.size(), -1000000);
    for (std::uint32_t t = 0; t < kSteps; ++t) {
      for (const auto& s : ref.at(t)) {
        const auto i = out.index(s.c, s.y, s.x);
        if (static_cast<std::int64_t>(t) - last[i] <= static_cast<std::int64_t>(c.refractory_steps)) {
          ++refractory_violations;
        }
        last[i] = t;
        ++spikes_seen;
      }
    }

    // Neuron-level trace under random drive: reset value and refractory gap.
    NeuronState st = initial_neuron(c);
    std::int64_t last_spike = -1000000;
    for (int t = 0; t < 400; ++t) {
      const auto r = step_neuron(st, c, static_cast<std::int32_t>(rng() % 80) - 20);
      if (r.spiked) {
        if (r.state.membrane != c.base_potential) ++reset_violations;
        if (t - last_spike <= static_cast<std::int64_t>(c.refractory_steps)) ++refractory_violations;
        last_spike = t;
      }
      st = r.state;
    }
  }
  o.check(tiling_mismatches == 0, std::to_string(tiling_mismatches) + " tiled/untiled mismatches");
  o.check(refractory_violations == 0, std::to_string(refractory_violations) + " refractory violations");
  o.check(reset_violations == 0, std::to_string(reset_violations) + " reset violations");

  const NetworkRun empty = run_network(reference_network(1), SpikeTensor(kDvsInputShape, 8), 8);
  std::uint64_t any = 0;
  for (auto v : empty.layer_spikes) any += v;
  o.check(any == 0, "reference network spiked on empty input");
  if (o.pass) {
    o.detail = std::to_string(kLayers) + " layers tiled == untiled (" + std::to_string(spikes_seen) +
               " spikes), 0 refractory/reset violations, empty in -> empty out";
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const fs::path& scenario) {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("colibri_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> digests;
  std::vector<std::map<std::string, std::string>> payloads;
  for (int run = 0; run < 3; ++run) {
    const auto dir = root / ("run" + std::to_string(run));
    digests.push_back(hex64(cmd_run(scenario, dir, std::nullopt).payload_digest));
    std::map<std::string, std::string> files;
    for (const auto& f : trace_payload_files()) files[f] = slurp(dir / f);
    payloads.push_back(std::move(files));
  }
  fs::remove_all(root);
  for (int run = 1; run < 3; ++run) {
    for (const auto& [name, bytes] : payloads[0]) {
      o.check(payloads[run].at(name) == bytes, "run " + std::to_string(run) + " differs in " + name);
    }
  }
  o.check(!payloads[0].at("frames.saer").empty(), "empty SAER payload");
  if (o.pass) o.detail = "3 runs byte-identical, payload digest " + digests[0];
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scenario =
      argc > 1 ? fs::path(argv[1]) : fs::path(COLIBRI_SOURCE_DIR) / "scenarios" / "moving_bar.scn";
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "interface table", 1.0, interface_table},
      {2, "closed-loop table", 1.0, closed_loop_table},
      {3, "SAER timing", 0.0, saer_timing},
      {4, "codec properties", 30.0, codec_properties},
      {5, "event generation oracles", 0.0, dvs_oracles},
      {6, "SNN properties", 60.0, snn_properties},
      {7, "determinism", 0.0, [&] { return determinism(scenario); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0.0) o.check(secs < c.limit_s, fmt("runtime %.2f s over %.0f s", secs, c.limit_s));
    if (!o.pass) ++failed;
    std::printf("criterion %d %-26s %s  %.3f s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
