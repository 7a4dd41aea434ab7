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

// Network description files.
//
//   input_channels = 2
//   input_height_px = 104
//   input_width_px = 132
//
//   [layer]
//   name = conv1
//   kind = conv            # conv | fc
//   out_channels = 8
//   kernel_h = 3           # conv only
//   kernel_w = 3
//   stride = 2
//   base_potential = 0
//   threshold = 24
//   adapt_increment = 4
//   adapt_decay = 1
//   refractory_steps = 1
//   timestep_shift = 1
//   weights = conv1.w8     # relative to the description file
//
// A weight blob is flat signed bytes in (out_ch, in_ch, kh, kw) order, or
// (out, flattened input) for fc layers. Next to it, `<blob>.shape` holds a
// single `shape = d0,d1,...` line describing those dimensions.

#ifndef COLIBRI_NETWORK_IO_HPP
#define COLIBRI_NETWORK_IO_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "colibri/keyvalue.hpp"
#include "colibri/snn_engine.hpp"

namespace colibri {

inline std::vector<std::size_t> weight_dims(const SnnLayerConfig& cfg) {
  if (cfg.kind == LayerKind::FullyConnected) return {cfg.out_channels, cfg.input.size()};
  return {cfg.out_channels, cfg.input.channels, cfg.kernel_h, cfg.kernel_w};
}

inline std::string format_dims(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s;
}

namespace detail {

template <typename T>
T narrow_field(const KeyValueSection& s, const std::string& key, std::int64_t v, std::int64_t lo, std::int64_t hi) {
  if (v < lo || v > hi) throw s.invalid(key, std::to_string(v), "in range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<T>(v);
}

inline std::vector<Weight> read_weight_blob(const std::filesystem::path& blob, const SnnLayerConfig& cfg) {
  if (!std::filesystem::is_regular_file(blob)) {
    throw ConfigError("layer '" + cfg.name + "': missing weight file " + blob.string());
  }
  std::filesystem::path sidecar = blob;
  sidecar += ".shape";
  if (!std::filesystem::is_regular_file(sidecar)) {
    throw ConfigError("layer '" + cfg.name + "': missing weight shape file " + sidecar.string());
  }
  const auto shape_doc = KeyValueDocument::load(sidecar);
  const std::string declared = shape_doc.root().string("shape");
  shape_doc.reject_unused({});
  const std::string expected = format_dims(weight_dims(cfg));
  if (declared != expected) {
    throw ConfigError(sidecar.string() + ": shape " + declared + " does not match layer '" + cfg.name + "' (" +
                      expected + ")");
  }

  std::ifstream in(blob, std::ios::binary);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() != cfg.weight_count()) {
    throw ConfigError(blob.string() + ": " + std::to_string(raw.size()) + " bytes, expected " +
                      std::to_string(cfg.weight_count()));
  }
  std::vector<Weight> w(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) w[i] = static_cast<Weight>(raw[i]);
  return w;
}

}  // namespace detail

inline SnnNetwork load_network(const std::filesystem::path& description) {
  const auto doc = KeyValueDocument::load(description);
  const auto& root = doc.root();
  SnnNetwork net;
  net.input.channels = static_cast<std::uint32_t>(root.unsigned_or("input_channels", kDvsInputShape.channels));
  net.input.height = static_cast<std::uint32_t>(root.unsigned_or("input_height_px", kDvsInputShape.height));
  net.input.width = static_cast<std::uint32_t>(root.unsigned_or("input_width_px", kDvsInputShape.width));

  const auto base_dir = description.parent_path();
  Shape3 chained = net.input;
  for (const auto* s : doc.sections("layer")) {
    SnnLayerConfig cfg;
    cfg.name = s->string("name");
    const std::string kind = s->string("kind");
    if (kind == "conv") {
      cfg.kind = LayerKind::Conv;
    } else if (kind == "fc") {
      cfg.kind = LayerKind::FullyConnected;
    } else {
      throw s->invalid("kind", kind, "'conv' or 'fc'");
    }
    cfg.input = chained;
    cfg.out_channels = static_cast<std::uint32_t>(s->unsigned_value("out_channels"));
    if (cfg.kind == LayerKind::Conv) {
      cfg.kernel_h = static_cast<std::uint32_t>(s->unsigned_value("kernel_h"));
      cfg.kernel_w = static_cast<std::uint32_t>(s->unsigned_value("kernel_w"));
      cfg.stride = static_cast<std::uint32_t>(s->unsigned_or("stride", 1));
    }
    constexpr std::int64_t lo = std::numeric_limits<Membrane>::min();
    constexpr std::int64_t hi = std::numeric_limits<Membrane>::max();
    cfg.base_potential = detail::narrow_field<Membrane>(*s, "base_potential", s->integer_or("base_potential", 0), lo, hi);
    cfg.threshold = detail::narrow_field<Membrane>(*s, "threshold", s->integer("threshold"), lo, hi);
    cfg.adapt_increment = detail::narrow_field<Membrane>(*s, "adapt_increment", s->integer_or("adapt_increment", 0), 0, hi);
    cfg.adapt_decay = detail::narrow_field<Membrane>(*s, "adapt_decay", s->integer_or("adapt_decay", 0), 0, hi);
    cfg.refractory_steps = detail::narrow_field<std::uint32_t>(*s, "refractory_steps", s->integer_or("refractory_steps", 0), 0, 1 << 20);
    cfg.timestep_shift = detail::narrow_field<std::uint32_t>(*s, "timestep_shift", s->integer_or("timestep_shift", 0), 0, 15);
    const auto blob = base_dir / s->string("weights");
    cfg.validate();
    net.layers.push_back({cfg, detail::read_weight_blob(blob, cfg)});
    chained = cfg.output_shape();
  }
  doc.reject_unused({"layer"});
  net.validate();
  return net;
}

/// Writes `<dir>/<stem>.net` plus one blob and shape sidecar per layer;
/// returns the description path.
inline std::filesystem::path save_network(const SnnNetwork& net, const std::filesystem::path& dir,
                                          const std::string& stem = "network") {
  net.validate();
  std::filesystem::create_directories(dir);
  const auto description = dir / (stem + ".net");
  std::ofstream out(description);
  if (!out) throw ConfigError("cannot write " + description.string());
  out << "input_channels = " << net.input.channels << "\n"
      << "input_height_px = " << net.input.height << "\n"
      << "input_width_px = " << net.input.width << "\n";
  for (const auto& layer : net.layers) {
    const auto& c = layer.config;
    const std::string blob = stem + "_" + c.name + ".w8";
    out << "\n[layer]\n"
        << "name = " << c.name << "\n"
        << "kind = " << (c.kind == LayerKind::Conv ? "conv" : "fc") << "\n"
        << "out_channels = " << c.out_channels << "\n";
    if (c.kind == LayerKind::Conv) {
      out << "kernel_h = " << c.kernel_h << "\n"
          << "kernel_w = " << c.kernel_w << "\n"
          << "stride = " << c.stride << "\n";
    }
    out << "base_potential = " << c.base_potential << "\n"
        << "threshold = " << c.threshold << "\n"
        << "adapt_increment = " << c.adapt_increment << "\n"
        << "adapt_decay = " << c.adapt_decay << "\n"
        << "refractory_steps = " << c.refractory_steps << "\n"
        << "timestep_shift = " << c.timestep_shift << "\n"
        << "weights = " << blob << "\n";

    std::ofstream w(dir / blob, std::ios::binary);
    w.write(reinterpret_cast<const char*>(layer.weights.data()), static_cast<std::streamsize>(layer.weights.size()));
    std::ofstream shape(dir / (blob + ".shape"));
    shape << "shape = " << format_dims(weight_dims(c)) << "\n";
  }
  return description;
}

}  // namespace colibri

#endif  // COLIBRI_NETWORK_IO_HPP
