#pragma once

// Fully connected tanh network y(xi; theta) with a scalar input and output.
//
// Parameter layout in theta is layer-major. Within a layer the weight matrix
// comes first, stored row-major with shape (out x in), followed by the bias
// vector of length out.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "beampinn/jets.hpp"
#include "beampinn/tape.hpp"

namespace beampinn {

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

inline std::vector<LayerShape> default_shapes() { return {{1, 64}, {64, 64}, {64, 1}}; }
inline std::vector<LayerShape> diagnostic_shapes() { return {{1, 16}, {16, 16}, {16, 1}}; }

inline std::size_t parameter_count(std::span<const LayerShape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.in * s.out + s.out;
  return n;
}

inline void check_shapes(std::span<const LayerShape> shapes) {
  expects(!shapes.empty(), "network needs at least one layer");
  expects(shapes.front().in == 1, "network input width must be 1");
  expects(shapes.back().out == 1, "network output width must be 1");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    expects(shapes[i].in > 0 && shapes[i].out > 0, "layer widths must be positive");
    if (i > 0) expects(shapes[i].in == shapes[i - 1].out, "layer shapes do not chain");
  }
}

struct MlpParams {
  std::vector<LayerShape> layer_shapes;
  std::vector<double> theta;
  // The output layer also goes through tanh, matching y^(n) = tanh(W y^(n-1) + b)
  // for every layer n. Disable for a linear read-out.
  bool tanh_output = true;

  std::size_t size() const { return theta.size(); }

  /// Offset of layer `layer`'s weights in theta.
  std::size_t weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < layer; ++i) off += layer_shapes[i].in * layer_shapes[i].out + layer_shapes[i].out;
    return off;
  }
  std::size_t bias_offset(std::size_t layer) const {
    return weight_offset(layer) + layer_shapes[layer].in * layer_shapes[layer].out;
  }

  void validate() const {
    check_shapes(layer_shapes);
    expects(theta.size() == parameter_count(layer_shapes), "theta length does not match layer shapes");
  }
};

inline MlpParams zero_params(std::vector<LayerShape> shapes, bool tanh_output = true) {
  check_shapes(shapes);
  MlpParams p{std::move(shapes), {}, tanh_output};
  p.theta.assign(parameter_count(p.layer_shapes), 0.0);
  return p;
}

// Uniform double on [0, 1) from the top 53 bits, independent of the
// standard library's distribution implementation.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Glorot-uniform weights, zero biases. Fully determined by `seed`.
inline MlpParams init(std::uint64_t seed, std::vector<LayerShape> shapes, bool tanh_output = true) {
  MlpParams p = zero_params(std::move(shapes), tanh_output);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.layer_shapes.size(); ++l) {
    const auto [in, out] = p.layer_shapes[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    const std::size_t off = p.weight_offset(l);
    for (std::size_t i = 0; i < in * out; ++i) p.theta[off + i] = limit * (2.0 * unit_uniform(rng) - 1.0);
  }
  return p;
}

/// Records the network on `tape` for all points at once; returns the output node.
/// The tape is reset first.
inline NodeRef forward(const MlpParams& params, std::span<const double> xi, Tape& tape) {
  params.validate();
  tape.reset(params.size());
  const std::span<const double> theta(params.theta);
  NodeRef h = tape.input(xi);
  for (std::size_t l = 0; l < params.layer_shapes.size(); ++l) {
    const auto [in, out] = params.layer_shapes[l];
    const std::size_t w = params.weight_offset(l);
    h = tape.affine(h, theta.subspan(w, in * out), theta.subspan(w + in * out, out), w);
    if (l + 1 < params.layer_shapes.size() || params.tanh_output) h = tape.tanh(h);
  }
  return h;
}

/// Network jet at a single point; the evaluation is recorded on `tape`.
inline Jet4 forward(const MlpParams& params, double xi, Tape& tape) {
  const double pts[1] = {xi};
  return tape.jet(forward(params, std::span<const double>(pts, 1), tape), 0);
}

inline Jet4 forward(const MlpParams& params, double xi) {
  Tape tape;
  return forward(params, xi, tape);
}

inline nlohmann::json to_json(const MlpParams& p) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : p.layer_shapes) shapes.push_back({s.in, s.out});
  return {{"layer_shapes", shapes}, {"tanh_output", p.tanh_output}, {"theta", p.theta}};
}

inline MlpParams params_from_json(const nlohmann::json& j) {
  MlpParams p;
  for (const auto& s : j.at("layer_shapes")) p.layer_shapes.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
  p.tanh_output = j.value("tanh_output", true);
  p.theta = j.at("theta").get<std::vector<double>>();
  p.validate();
  return p;
}

}  // namespace beampinn
