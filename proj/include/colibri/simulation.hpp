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

// End-to-end runs: stimulus -> DVS -> SAER -> binning -> SNN -> budget, plus
// the table and render commands of the command-line tool.

#ifndef COLIBRI_SIMULATION_HPP
#define COLIBRI_SIMULATION_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "colibri/dvs_model.hpp"
#include "colibri/event_core.hpp"
#include "colibri/network_io.hpp"
#include "colibri/pipeline_budget.hpp"
#include "colibri/preprocess.hpp"
#include "colibri/saer_codec.hpp"
#include "colibri/scenario.hpp"
#include "colibri/snn_engine.hpp"
#include "colibri/stimulus.hpp"

namespace colibri {

/// Bad command-line usage: unknown ids, out-of-range indices.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameRecord {
  std::uint64_t sample_index = 0;
  std::uint64_t t_us = 0;
  std::size_t on_events = 0;
  std::size_t off_events = 0;
  std::uint64_t saer_digest = 0;
};

struct RunTrace {
  std::vector<FrameRecord> frames;
  std::vector<std::string> layer_names;
  std::vector<std::uint64_t> layer_spikes;
  std::vector<std::uint64_t> class_counts;
  PipelineBudget budget;
  StageBudget frame_readout;
  /// FNV-1a over every payload file, in a fixed order.
  std::uint64_t payload_digest = 0;
  double wall_time_ms = 0.0;
};

/// Payload files of a trace directory; meta.json (wall time) is not one of them.
inline const std::vector<std::string>& trace_payload_files() {
  static const std::vector<std::string> files = {"frames.csv", "frames.saer", "events.csv", "layers.csv",
                                                 "classes.csv", "budget.csv", "trace.jsonl"};
  return files;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

class StimulusSource {
 public:
  StimulusSource(const Scenario& sc) : sc_(sc) {
    if (sc.stimulus.kind == StimulusSpec::Kind::PgmDir) {
      field_ = BrightnessField::from_pgm_dir(sc.stimulus.pgm_dir);
      if (field_.size() < 1) throw ConfigError("stimulus.pgm_dir holds no .pgm images: " + sc.stimulus.pgm_dir.string());
      frames_ = field_.size() - 1;
      if (sc.stimulus.frames) {
        if (*sc.stimulus.frames > frames_) {
          throw ConfigError("stimulus.frames = " + std::to_string(*sc.stimulus.frames) + " exceeds the " +
                            std::to_string(frames_) + " frames available in " + sc.stimulus.pgm_dir.string());
        }
        frames_ = *sc.stimulus.frames;
      }
    } else {
      frames_ = sc.stimulus.frames.value_or(0);
    }
  }

  std::uint64_t frames() const { return frames_; }

  LuminanceImage image(std::uint64_t sample_index) const {
    if (sc_.stimulus.kind == StimulusSpec::Kind::PgmDir) return field_[sample_index];
    auto syn = sc_.stimulus.synthetic;
    syn.seed = sc_.seed;
    return render_stimulus(syn, sample_index, sc_.dvs.sample_rate_hz);
  }

 private:
  const Scenario& sc_;
  BrightnessField field_;
  std::uint64_t frames_ = 0;
};

inline std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace detail

inline SnnNetwork load_scenario_network(const Scenario& sc) {
  return sc.network.reference ? reference_network(sc.network.seed) : load_network(sc.network.description_path);
}

/// Runs `sc` and writes the trace files into `out_dir`.
inline RunTrace run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunTrace trace;

  // Load everything that can fail on bad input before producing output.
  const SnnNetwork net = load_scenario_network(sc);
  net.validate();
  if (!(net.input == kDvsInputShape)) {
    throw ConfigError("network input " + to_string(net.input) + " does not match the sensor " + to_string(kDvsInputShape));
  }
  const detail::StimulusSource source(sc);

  // Sensor and readout.
  std::vector<PixelState> pixels;
  try {
    pixels = initial_state(source.image(0), sc.dvs);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("dvs stage: ") + e.what());
  }
  std::deque<EventFrame> history;
  std::vector<EventFrame> decoded;
  std::string saer_bytes;
  std::ostringstream events_csv;
  for (std::uint64_t k = 1; k <= source.frames(); ++k) {
    EventFrame raw;
    try {
      raw = sample(pixels, sc.dvs, source.image(k), k);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("dvs stage, sample " + std::to_string(k) + ": " + e.what());
    }
    const std::vector<EventFrame> window(history.begin(), history.end());
    const EventFrame frame = suppress(raw, window, sc.dvs);
    if (sc.dvs.flicker_window > 0) {
      history.push_back(raw);
      if (history.size() > sc.dvs.flicker_window) history.pop_front();
    }

    const SaerStream stream = encode(frame);
    const auto bytes = to_bytes(stream);
    saer_bytes.append(bytes.begin(), bytes.end());
    EventFrame received = decode(stream, k);

    FrameRecord rec;
    rec.sample_index = k;
    rec.t_us = static_cast<std::uint64_t>(static_cast<double>(k) * 1e6 / sc.dvs.sample_rate_hz);
    rec.on_events = received.on_count();
    rec.off_events = received.off_count();
    rec.saer_digest = stream_digest(stream);
    trace.frames.push_back(rec);
    write_events(events_csv, received.events(rec.t_us));
    decoded.push_back(std::move(received));
  }

  // Preprocessing and inference.
  const SpikeTensor spikes = bin_frames(decoded, sc.frames_per_timestep);
  NetworkRun run;
  try {
    run = run_network(net, spikes, spikes.steps(), sc.network.kernel_memory_budget);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("snn stage: ") + e.what());
  }
  for (const auto& l : net.layers) trace.layer_names.push_back(l.config.name);
  trace.layer_spikes = run.layer_spikes;
  trace.class_counts = run.class_counts;
  trace.budget = make_budget(sc.budget);
  trace.frame_readout = single_frame_stage(sc.budget);

  // Serialise.
  std::ostringstream frames_csv, layers_csv, classes_csv, budget_csv, jsonl;
  frames_csv << "frame,sample_index,t_us,on_events,off_events,saer_digest\n";
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const auto& f = trace.frames[i];
    frames_csv << i << ',' << f.sample_index << ',' << f.t_us << ',' << f.on_events << ',' << f.off_events << ','
               << hex64(f.saer_digest) << '\n';
    jsonl << nlohmann::json{{"type", "frame"},          {"frame", i},
                            {"sample_index", f.sample_index}, {"t_us", f.t_us},
                            {"on_events", f.on_events},   {"off_events", f.off_events},
                            {"saer_digest", hex64(f.saer_digest)}}
                 .dump()
          << '\n';
  }
  layers_csv << "layer,name,spikes\n";
  for (std::size_t i = 0; i < trace.layer_spikes.size(); ++i) {
    layers_csv << i << ',' << trace.layer_names[i] << ',' << trace.layer_spikes[i] << '\n';
    jsonl << nlohmann::json{{"type", "layer"}, {"layer", i}, {"name", trace.layer_names[i]}, {"spikes", trace.layer_spikes[i]}}
                 .dump()
          << '\n';
  }
  classes_csv << "class,spikes\n";
  for (std::size_t i = 0; i < trace.class_counts.size(); ++i) classes_csv << i << ',' << trace.class_counts[i] << '\n';
  write_budget_csv(budget_csv, trace.budget, &trace.frame_readout);
  jsonl << nlohmann::json{{"type", "summary"},
                          {"scenario", sc.name},
                          {"seed", sc.seed},
                          {"frames", trace.frames.size()},
                          {"timesteps", spikes.steps()},
                          {"input_spikes", spikes.total()},
                          {"class_counts", trace.class_counts},
                          {"latency_ms", format_number(closed_loop_latency_ms(trace.budget))},
                          {"power_mw", format_number(closed_loop_power_mw(trace.budget))},
                          {"energy_mj", format_number(closed_loop_energy_mj(trace.budget))}}
               .dump()
        << '\n';

  std::filesystem::create_directories(out_dir);
  const std::vector<std::string> payloads = {frames_csv.str(), saer_bytes,        events_csv.str(), layers_csv.str(),
                                             classes_csv.str(), budget_csv.str(), jsonl.str()};
  std::uint64_t digest = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    detail::write_file(out_dir / trace_payload_files()[i], payloads[i]);
    digest = detail::fnv1a(digest, payloads[i]);
  }
  trace.payload_digest = digest;
  trace.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  detail::write_file(out_dir / "meta.json",
                     nlohmann::json{{"scenario", sc.name}, {"payload_digest", hex64(digest)}, {"wall_time_ms", trace.wall_time_ms}}
                             .dump(2) +
                         "\n");
  return trace;
}

/// Loads and runs a scenario file; `seed` overrides the scenario's seed.
inline RunTrace cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
                        std::optional<std::uint64_t> seed = std::nullopt) {
  Scenario sc = load_scenario(scenario_path);
  if (seed) sc.seed = *seed;
  return run_scenario(sc, out_dir);
}

/// `interface` or `closed_loop`, as CSV with default parameters.
inline void cmd_table(const std::string& table_id, std::ostream& os) {
  if (table_id == "interface") {
    write_interface_csv(os);
  } else if (table_id == "closed_loop") {
    const BudgetParams params;
    const auto readout = single_frame_stage(params);
    write_budget_csv(os, make_budget(params), &readout);
  } else {
    throw UsageError("unknown table '" + table_id + "' (expected interface or closed_loop)");
  }
}

/// Binary PPM (P6) of a frame: ON red, OFF green, background white.
inline std::string render_ppm(const EventFrame& frame) {
  std::string out = "P6\n" + std::to_string(SensorGeometry::width) + " " + std::to_string(SensorGeometry::height) + "\n255\n";
  out.reserve(out.size() + 3 * SensorGeometry::pixels);
  for (std::size_t i = 0; i < SensorGeometry::pixels; ++i) {
    if (frame.on_bits().test(i)) {
      out += {'\xff', '\0', '\0'};
    } else if (frame.off_bits().test(i)) {
      out += {'\0', '\xff', '\0'};
    } else {
      out += {'\xff', '\xff', '\xff'};
    }
  }
  return out;
}

/// Frame `index` of a trace (its directory or its frames.saer file).
inline EventFrame load_trace_frame(const std::filesystem::path& trace_path, std::size_t index) {
  const auto saer = std::filesystem::is_directory(trace_path) ? trace_path / "frames.saer" : trace_path;
  std::ifstream in(saer, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace frames " + saer.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % kSaerBytesPerFrame != 0) {
    throw std::runtime_error(saer.string() + ": size is not a whole number of SAER frames");
  }
  const std::size_t count = bytes.size() / kSaerBytesPerFrame;
  if (index >= count) {
    throw UsageError("frame index " + std::to_string(index) + " out of range (trace holds " + std::to_string(count) +
                     " frames)");
  }
  const std::span<const std::uint8_t> slice(bytes.data() + index * kSaerBytesPerFrame, kSaerBytesPerFrame);
  return decode(from_bytes(slice), index);
}

/// Writes `<out_dir>/frame_<index>.ppm` and returns its path.
inline std::filesystem::path cmd_render(const std::filesystem::path& trace_path, std::size_t index,
                                        const std::filesystem::path& out_dir) {
  const EventFrame frame = load_trace_frame(trace_path, index);
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / ("frame_" + std::to_string(index) + ".ppm");
  detail::write_file(path, render_ppm(frame));
  return path;
}

}  // namespace colibri

#endif  // COLIBRI_SIMULATION_HPP
