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

// Functional model of a sparse spiking-CNN engine. Layers run one after the
// other over a whole spike stream. Neurons are integer LIF units: 16-bit
// membrane, 8-bit weights, leak by arithmetic right shift, additive threshold
// adaptation and a refractory gate that discards input.

#ifndef COLIBRI_SNN_ENGINE_HPP
#define COLIBRI_SNN_ENGINE_HPP

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "colibri/event_core.hpp"

namespace colibri {

using Membrane = std::int16_t;
using Weight = std::int8_t;

struct Shape3 {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t size() const { return std::size_t{channels} * height * width; }
  std::size_t index(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return (std::size_t{c} * height + y) * width + x;
  }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

/// Input geometry of the event camera: polarity channels (0 = ON, 1 = OFF).
inline constexpr Shape3 kDvsInputShape{2, SensorGeometry::height, SensorGeometry::width};

enum class LayerKind { Conv, FullyConnected };

struct SnnLayerConfig {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  Shape3 input;
  std::uint32_t out_channels = 1;
  std::uint32_t kernel_h = 1;
  std::uint32_t kernel_w = 1;
  std::uint32_t stride = 1;
  Membrane base_potential = 0;
  Membrane threshold = 64;
  /// Added to the effective threshold on each spike.
  Membrane adapt_increment = 0;
  /// Removed from the effective threshold each step, down to `threshold`.
  Membrane adapt_decay = 0;
  std::uint32_t refractory_steps = 0;
  std::uint32_t timestep_shift = 0;

  Shape3 output_shape() const {
    if (kind == LayerKind::FullyConnected) return {out_channels, 1, 1};
    if (input.height < kernel_h || input.width < kernel_w || stride == 0) return {out_channels, 0, 0};
    return {out_channels, (input.height - kernel_h) / stride + 1, (input.width - kernel_w) / stride + 1};
  }

  /// Kernel-memory entries one output channel needs.
  std::size_t weights_per_channel() const {
    return kind == LayerKind::FullyConnected ? input.size()
                                             : std::size_t{input.channels} * kernel_h * kernel_w;
  }

  std::size_t weight_count() const { return weights_per_channel() * out_channels; }

  void validate() const {
    const std::string who = "layer '" + name + "': ";
    if (threshold <= base_potential) throw std::invalid_argument(who + "threshold must exceed base_potential");
    if (adapt_increment < 0 || adapt_decay < 0) {
      throw std::invalid_argument(who + "threshold adaptation terms must be non-negative");
    }
    if (timestep_shift > 15) throw std::invalid_argument(who + "timestep_shift must be at most 15");
    if (out_channels == 0 || input.size() == 0) throw std::invalid_argument(who + "empty geometry");
    if (kind == LayerKind::Conv) {
      if (kernel_h == 0 || kernel_w == 0 || stride == 0) {
        throw std::invalid_argument(who + "kernel and stride must be positive");
      }
      if (kernel_h > input.height || kernel_w > input.width) {
        throw std::invalid_argument(who + "kernel larger than input " + to_string(input));
      }
    }
  }
};

/// Layer configuration plus its weights, (out_ch, in_ch, kh, kw) order for
/// convolutions and (out, flattened input) for fully-connected layers.
struct SnnLayer {
  SnnLayerConfig config;
  std::vector<Weight> weights;

  void validate() const {
    config.validate();
    if (weights.size() != config.weight_count()) {
      throw std::invalid_argument("layer '" + config.name + "': " + std::to_string(weights.size()) +
                                  " weights, expected " + std::to_string(config.weight_count()));
    }
  }
};

struct NeuronState {
  Membrane membrane = 0;
  Membrane eff_threshold = 0;
  std::uint32_t refractory_remaining = 0;

  friend bool operator==(const NeuronState&, const NeuronState&) = default;
};

inline NeuronState initial_neuron(const SnnLayerConfig& cfg) {
  return {cfg.base_potential, cfg.threshold, 0};
}

namespace detail {
inline Membrane saturate(std::int64_t v) {
  return static_cast<Membrane>(std::clamp<std::int64_t>(v, std::numeric_limits<Membrane>::min(),
                                                        std::numeric_limits<Membrane>::max()));
}
}  // namespace detail

struct StepResult {
  NeuronState state;
  bool spiked = false;
};

/// Advances one neuron by one timestep. The effective threshold first decays
/// one quantum toward the configured threshold; a refractory neuron then
/// discards its input, otherwise it leaks, integrates and may fire.
inline StepResult step_neuron(NeuronState s, const SnnLayerConfig& cfg, std::int32_t weighted_input) {
  if (s.eff_threshold > cfg.threshold) {
    s.eff_threshold = std::max<Membrane>(cfg.threshold, detail::saturate(std::int64_t{s.eff_threshold} - cfg.adapt_decay));
  }
  if (s.refractory_remaining > 0) {
    --s.refractory_remaining;
    return {s, false};
  }
  // Arithmetic shift: floor division for negative membranes too.
  const std::int64_t leaked = std::int64_t{s.membrane} >> cfg.timestep_shift;
  s.membrane = detail::saturate(leaked + weighted_input);
  if (s.membrane >= s.eff_threshold) {
    s.membrane = cfg.base_potential;
    s.refractory_remaining = cfg.refractory_steps;
    s.eff_threshold = detail::saturate(std::int64_t{s.eff_threshold} + cfg.adapt_increment);
    return {s, true};
  }
  return {s, false};
}

struct SpikeCoord {
  std::uint32_t c = 0;
  std::uint32_t y = 0;
  std::uint32_t x = 0;

  friend auto operator<=>(const SpikeCoord&, const SpikeCoord&) = default;
};

/// Per-timestep sorted, duplicate-free spike coordinates over one geometry.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(Shape3 shape, std::uint32_t steps) : shape_(shape), spikes_(steps) {}

  const Shape3& shape() const { return shape_; }
  std::uint32_t steps() const { return static_cast<std::uint32_t>(spikes_.size()); }

  /// Adds a spike; repeats of a coordinate within a step are ignored.
  void add(std::uint32_t t, SpikeCoord s) {
    if (t >= spikes_.size()) {
      throw std::out_of_range("spike timestep " + std::to_string(t) + " beyond " + std::to_string(spikes_.size()));
    }
    if (s.c >= shape_.channels || s.y >= shape_.height || s.x >= shape_.width) {
      throw std::out_of_range("spike coordinate outside " + to_string(shape_));
    }
    auto& v = spikes_[t];
    if (v.empty() || v.back() < s) {
      v.push_back(s);
      return;
    }
    auto it = std::lower_bound(v.begin(), v.end(), s);
    if (it == v.end() || *it != s) v.insert(it, s);
  }

  const std::vector<SpikeCoord>& at(std::uint32_t t) const { return spikes_.at(t); }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& v : spikes_) n += v.size();
    return n;
  }

  bool empty() const { return total() == 0; }

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  Shape3 shape_;
  std::vector<std::vector<SpikeCoord>> spikes_;
};

namespace detail {

inline void check_layer_input(const SnnLayer& layer, const SpikeTensor& input, std::uint32_t steps) {
  layer.validate();
  if (!(input.shape() == layer.config.input)) {
    throw std::invalid_argument("layer '" + layer.config.name + "': input is " + to_string(input.shape()) +
                                ", layer expects " + to_string(layer.config.input));
  }
  if (input.steps() < steps) {
    throw std::invalid_argument("layer '" + layer.config.name + "': input holds " +
                                std::to_string(input.steps()) + " steps, " + std::to_string(steps) +
                                " requested");
  }
}

}  // namespace detail

/// Reference execution: every input spike is scattered through the weights
/// into the drive of the outputs whose receptive field contains it.
inline SpikeTensor run_layer(const SnnLayer& layer, const SpikeTensor& input, std::uint32_t steps) {
  detail::check_layer_input(layer, input, steps);
  const auto& cfg = layer.config;
  const Shape3 out_shape = cfg.output_shape();
  const Shape3 in = cfg.input;
  const std::size_t per_channel = cfg.weights_per_channel();

  SpikeTensor out(out_shape, steps);
  std::vector<NeuronState> neurons(out_shape.size(), initial_neuron(cfg));
  std::vector<std::int32_t> drive(out_shape.size());

  for (std::uint32_t t = 0; t < steps; ++t) {
    std::fill(drive.begin(), drive.end(), 0);
    for (const auto& s : input.at(t)) {
      if (cfg.kind == LayerKind::FullyConnected) {
        const std::size_t flat = in.index(s.c, s.y, s.x);
        for (std::uint32_t o = 0; o < out_shape.channels; ++o) drive[o] += layer.weights[o * per_channel + flat];
        continue;
      }
      for (std::uint32_t ky = 0; ky < cfg.kernel_h && ky <= s.y; ++ky) {
        const std::uint32_t iy = s.y - ky;
        if (iy % cfg.stride != 0 || iy / cfg.stride >= out_shape.height) continue;
        const std::uint32_t oy = iy / cfg.stride;
        for (std::uint32_t kx = 0; kx < cfg.kernel_w && kx <= s.x; ++kx) {
          const std::uint32_t ix = s.x - kx;
          if (ix % cfg.stride != 0 || ix / cfg.stride >= out_shape.width) continue;
          const std::uint32_t ox = ix / cfg.stride;
          for (std::uint32_t o = 0; o < out_shape.channels; ++o) {
            const std::size_t w = o * per_channel + (std::size_t{s.c} * cfg.kernel_h + ky) * cfg.kernel_w + kx;
            drive[out_shape.index(o, oy, ox)] += layer.weights[w];
          }
        }
      }
    }
    for (std::uint32_t o = 0; o < out_shape.channels; ++o) {
      for (std::uint32_t y = 0; y < out_shape.height; ++y) {
        for (std::uint32_t x = 0; x < out_shape.width; ++x) {
          const auto i = out_shape.index(o, y, x);
          auto r = step_neuron(neurons[i], cfg, drive[i]);
          neurons[i] = r.state;
          if (r.spiked) out.add(t, {o, y, x});
        }
      }
    }
  }
  return out;
}

/// A block of output neurons: channels [c_begin, c_end) x rows [y_begin, y_end)
/// x columns [x_begin, x_end).
struct Tile {
  std::uint32_t c_begin = 0, c_end = 0;
  std::uint32_t y_begin = 0, y_end = 0;
  std::uint32_t x_begin = 0, x_end = 0;

  std::size_t neurons() const {
    return std::size_t{c_end - c_begin} * (y_end - y_begin) * (x_end - x_begin);
  }
  friend bool operator==(const Tile&, const Tile&) = default;
};

struct TilePlan {
  std::vector<Tile> tiles;
  std::size_t kernel_memory_budget = 0;
  std::size_t neuron_memory_budget = std::numeric_limits<std::size_t>::max();
};

class InfeasibleBudget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits a layer so each tile's kernels fit `kernel_memory_budget` weight
/// entries and its neuron states fit `neuron_memory_budget`. Output channels
/// are grouped first; spatial windows only appear when a single channel's
/// neurons overflow the state budget. Tiles are channel-major, then row-major.
inline TilePlan plan_tiles(const SnnLayerConfig& cfg, std::size_t kernel_memory_budget,
                           std::size_t neuron_memory_budget = std::numeric_limits<std::size_t>::max()) {
  const Shape3 out = cfg.output_shape();
  const std::size_t footprint = cfg.weights_per_channel();
  if (kernel_memory_budget < footprint) {
    throw InfeasibleBudget("layer '" + cfg.name + "': kernel memory budget " + std::to_string(kernel_memory_budget) +
                           " below one channel's footprint of " + std::to_string(footprint));
  }
  if (neuron_memory_budget == 0) {
    throw InfeasibleBudget("layer '" + cfg.name + "': neuron memory budget is zero");
  }
  TilePlan plan{{}, kernel_memory_budget, neuron_memory_budget};
  const std::size_t map_size = std::size_t{out.height} * out.width;

  if (map_size <= neuron_memory_budget) {
    const std::size_t by_weights = kernel_memory_budget / footprint;
    const std::size_t by_state = neuron_memory_budget / map_size;
    const auto group = static_cast<std::uint32_t>(std::min<std::size_t>({by_weights, by_state, out.channels}));
    for (std::uint32_t c = 0; c < out.channels; c += group) {
      plan.tiles.push_back({c, std::min(c + group, out.channels), 0, out.height, 0, out.width});
    }
    return plan;
  }

  const std::size_t rows = neuron_memory_budget / out.width;
  for (std::uint32_t c = 0; c < out.channels; ++c) {
    if (rows > 0) {
      for (std::uint32_t y = 0; y < out.height; y += static_cast<std::uint32_t>(rows)) {
        const auto y_end = static_cast<std::uint32_t>(std::min<std::size_t>(y + rows, out.height));
        plan.tiles.push_back({c, c + 1, y, y_end, 0, out.width});
      }
      continue;
    }
    const auto cols = static_cast<std::uint32_t>(neuron_memory_budget);
    for (std::uint32_t y = 0; y < out.height; ++y) {
      for (std::uint32_t x = 0; x < out.width; x += cols) {
        plan.tiles.push_back({c, c + 1, y, y + 1, x, std::min(x + cols, out.width)});
      }
    }
  }
  return plan;
}

/// Checks that `plan` partitions the layer output and respects its budgets.
inline void validate_plan(const SnnLayerConfig& cfg, const TilePlan& plan) {
  const Shape3 out = cfg.output_shape();
  std::vector<std::uint8_t> covered(out.size(), 0);
  for (std::size_t k = 0; k < plan.tiles.size(); ++k) {
    const auto& t = plan.tiles[k];
    const std::string who = "layer '" + cfg.name + "' tile " + std::to_string(k) + ": ";
    if (t.c_begin >= t.c_end || t.y_begin >= t.y_end || t.x_begin >= t.x_end || t.c_end > out.channels ||
        t.y_end > out.height || t.x_end > out.width) {
      throw std::invalid_argument(who + "empty or outside the output " + to_string(out));
    }
    if (std::size_t{t.c_end - t.c_begin} * cfg.weights_per_channel() > plan.kernel_memory_budget) {
      throw std::invalid_argument(who + "kernels exceed the kernel memory budget");
    }
    if (t.neurons() > plan.neuron_memory_budget) {
      throw std::invalid_argument(who + "neurons exceed the neuron memory budget");
    }
    for (auto c = t.c_begin; c < t.c_end; ++c) {
      for (auto y = t.y_begin; y < t.y_end; ++y) {
        for (auto x = t.x_begin; x < t.x_end; ++x) {
          if (covered[out.index(c, y, x)]++) throw std::invalid_argument(who + "overlaps an earlier tile");
        }
      }
    }
  }
  if (std::find(covered.begin(), covered.end(), 0) != covered.end()) {
    throw std::invalid_argument("layer '" + cfg.name + "': tile plan leaves outputs uncovered");
  }
}

/// Tile-by-tile execution. Each tile loads only its own kernels and neuron
/// states and walks all timesteps, gathering its receptive fields from a
/// dense view of the input. Produces exactly what run_layer produces.
inline SpikeTensor run_layer_tiled(const SnnLayer& layer, const SpikeTensor& input, std::uint32_t steps,
                                   const TilePlan& plan) {
  detail::check_layer_input(layer, input, steps);
  validate_plan(layer.config, plan);
  const auto& cfg = layer.config;
  const Shape3 in = cfg.input;
  const Shape3 out_shape = cfg.output_shape();
  const std::size_t per_channel = cfg.weights_per_channel();

  // Dense occupancy per step for convolutions, flat active lists for FC.
  std::vector<std::vector<std::uint8_t>> occupancy;
  std::vector<std::vector<std::size_t>> active;
  for (std::uint32_t t = 0; t < steps; ++t) {
    if (cfg.kind == LayerKind::Conv) {
      std::vector<std::uint8_t> dense(in.size(), 0);
      for (const auto& s : input.at(t)) dense[in.index(s.c, s.y, s.x)] = 1;
      occupancy.push_back(std::move(dense));
    } else {
      std::vector<std::size_t> flat;
      for (const auto& s : input.at(t)) flat.push_back(in.index(s.c, s.y, s.x));
      active.push_back(std::move(flat));
    }
  }

  std::vector<std::vector<SpikeCoord>> emitted(steps);
  for (const auto& tile : plan.tiles) {
    std::vector<NeuronState> neurons(tile.neurons(), initial_neuron(cfg));
    for (std::uint32_t t = 0; t < steps; ++t) {
      std::size_t n = 0;
      for (auto o = tile.c_begin; o < tile.c_end; ++o) {
        const Weight* kernel = layer.weights.data() + o * per_channel;
        for (auto y = tile.y_begin; y < tile.y_end; ++y) {
          for (auto x = tile.x_begin; x < tile.x_end; ++x, ++n) {
            std::int32_t sum = 0;
            if (cfg.kind == LayerKind::FullyConnected) {
              for (std::size_t f : active[t]) sum += kernel[f];
            } else {
              const auto& dense = occupancy[t];
              for (std::uint32_t c = 0; c < in.channels; ++c) {
                for (std::uint32_t ky = 0; ky < cfg.kernel_h; ++ky) {
                  for (std::uint32_t kx = 0; kx < cfg.kernel_w; ++kx) {
                    if (dense[in.index(c, y * cfg.stride + ky, x * cfg.stride + kx)]) {
                      sum += kernel[(std::size_t{c} * cfg.kernel_h + ky) * cfg.kernel_w + kx];
                    }
                  }
                }
              }
            }
            auto r = step_neuron(neurons[n], cfg, sum);
            neurons[n] = r.state;
            if (r.spiked) emitted[t].push_back({o, y, x});
          }
        }
      }
    }
  }

  SpikeTensor out(out_shape, steps);
  for (std::uint32_t t = 0; t < steps; ++t) {
    std::sort(emitted[t].begin(), emitted[t].end());
    for (const auto& s : emitted[t]) out.add(t, s);
  }
  return out;
}

/// Ordered layers over the event-camera input.
struct SnnNetwork {
  Shape3 input = kDvsInputShape;
  std::vector<SnnLayer> layers;

  Shape3 output_shape() const { return layers.empty() ? input : layers.back().config.output_shape(); }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("network has no layers");
    Shape3 expected = input;
    for (const auto& layer : layers) {
      if (!(layer.config.input == expected)) {
        throw std::invalid_argument("layer '" + layer.config.name + "' expects input " + to_string(layer.config.input) +
                                    " but the previous stage produces " + to_string(expected));
      }
      layer.validate();
      expected = layer.config.output_shape();
    }
  }

  /// Two convolutions followed by two fully-connected layers.
  bool is_reference_topology() const {
    return layers.size() == 4 && layers[0].config.kind == LayerKind::Conv &&
           layers[1].config.kind == LayerKind::Conv && layers[2].config.kind == LayerKind::FullyConnected &&
           layers[3].config.kind == LayerKind::FullyConnected;
  }
};

struct NetworkRun {
  /// Spikes per output neuron of the last layer, summed over all steps.
  std::vector<std::uint64_t> class_counts;
  /// Total spikes emitted by each layer.
  std::vector<std::uint64_t> layer_spikes;
};

/// Runs the layers in order, each consuming the previous layer's stream. With
/// a kernel memory budget every layer executes through its tile plan.
inline NetworkRun run_network(const SnnNetwork& net, const SpikeTensor& input, std::uint32_t steps,
                              std::optional<std::size_t> kernel_memory_budget = std::nullopt) {
  net.validate();
  if (!(input.shape() == net.input)) {
    throw std::invalid_argument("network input is " + to_string(input.shape()) + ", expected " + to_string(net.input));
  }
  NetworkRun run;
  SpikeTensor stream = input;
  for (const auto& layer : net.layers) {
    stream = kernel_memory_budget
                 ? run_layer_tiled(layer, stream, steps, plan_tiles(layer.config, *kernel_memory_budget))
                 : run_layer(layer, stream, steps);
    run.layer_spikes.push_back(stream.total());
  }
  const Shape3 out = stream.shape();
  run.class_counts.assign(out.size(), 0);
  for (std::uint32_t t = 0; t < steps; ++t) {
    for (const auto& s : stream.at(t)) ++run.class_counts[out.index(s.c, s.y, s.x)];
  }
  return run;
}

struct LayerParams {
  Membrane base_potential = 0;
  Membrane threshold = 64;
  Membrane adapt_increment = 0;
  Membrane adapt_decay = 0;
  std::uint32_t refractory_steps = 0;
  std::uint32_t timestep_shift = 0;
};

inline SnnLayerConfig make_conv(std::string name, Shape3 input, std::uint32_t out_channels, std::uint32_t kernel,
                                std::uint32_t stride, const LayerParams& p) {
  return {std::move(name), LayerKind::Conv, input, out_channels, kernel, kernel, stride,
          p.base_potential, p.threshold, p.adapt_increment, p.adapt_decay, p.refractory_steps, p.timestep_shift};
}

inline SnnLayerConfig make_fc(std::string name, Shape3 input, std::uint32_t outputs, const LayerParams& p) {
  return {std::move(name), LayerKind::FullyConnected, input, outputs, 1, 1, 1,
          p.base_potential, p.threshold, p.adapt_increment, p.adapt_decay, p.refractory_steps, p.timestep_shift};
}

/// Uniform integer weights in [lo, hi] from raw 64-bit draws, so the values do
/// not depend on the standard library's distribution implementation.
inline std::vector<Weight> random_weights(std::mt19937_64& rng, std::size_t n, int lo, int hi) {
  std::vector<Weight> w(n);
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  for (auto& v : w) v = static_cast<Weight>(lo + static_cast<int>(rng() % span));
  return w;
}

/// conv 2->8 3x3/2, conv 8->16 3x3/2, fc ->64, fc ->4 with seeded weights.
inline SnnNetwork reference_network(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SnnNetwork net;
  const LayerParams conv_params{0, 24, 4, 1, 1, 1};
  const LayerParams fc_params{0, 48, 4, 1, 2, 1};

  auto conv1 = make_conv("conv1", net.input, 8, 3, 2, conv_params);
  auto conv2 = make_conv("conv2", conv1.output_shape(), 16, 3, 2, conv_params);
  auto fc1 = make_fc("fc1", conv2.output_shape(), 64, fc_params);
  auto fc2 = make_fc("fc2", fc1.output_shape(), 4, fc_params);

  net.layers.push_back({conv1, random_weights(rng, conv1.weight_count(), -4, 16)});
  net.layers.push_back({conv2, random_weights(rng, conv2.weight_count(), -4, 12)});
  net.layers.push_back({fc1, random_weights(rng, fc1.weight_count(), -6, 6)});
  net.layers.push_back({fc2, random_weights(rng, fc2.weight_count(), -8, 10)});
  return net;
}

}  // namespace colibri

#endif  // COLIBRI_SNN_ENGINE_HPP
