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

// colibri_sim run <scenario> [--out DIR] [--seed N]
// colibri_sim table interface|closed_loop
// colibri_sim render <trace> <index> [--out DIR]
//
// Exit status: 0 on success, 1 on a runtime/config failure, 2 on bad usage.
// Failures print one `error: ...` line on stderr.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "colibri/simulation.hpp"

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera to spiking-CNN pipeline simulator"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string scenario_path;
  std::string table_id;
  std::string trace_path;
  std::size_t frame_index = 0;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write its trace");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Trace output directory");
  run->add_option("--seed", seed, "Override the scenario seed");

  auto* table = app.add_subcommand("table", "Print a benchmark table as CSV");
  table->add_option("id", table_id, "interface | closed_loop")->required();

  auto* render = app.add_subcommand("render", "Render a trace frame as PPM");
  render->add_option("trace", trace_path, "Trace directory or frames.saer file")->required();
  render->add_option("index", frame_index, "Frame index")->required();
  render->add_option("--out", out_dir, "Image output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*run) {
      const auto trace = colibri::cmd_run(scenario_path, out_dir, seed);
      std::cout << "frames " << trace.frames.size() << "\n"
                << "payload_digest " << colibri::hex64(trace.payload_digest) << "\n"
                << "trace " << out_dir << "\n";
    } else if (*table) {
      colibri::cmd_table(table_id, std::cout);
    } else if (*render) {
      std::cout << colibri::cmd_render(trace_path, frame_index, out_dir).string() << "\n";
    }
  } catch (const colibri::UsageError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
