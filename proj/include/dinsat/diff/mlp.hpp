#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dinsat/diff/tape.hpp"

namespace dinsat::diff {

enum class Activation : std::uint8_t { Identity, Sigmoid };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view s);

/// Architecture of a fully connected network, e.g. sizes [126, 12, 3] with
/// activations [Sigmoid, Identity]: one entry per weight layer.
///
/// Parameters live in one flat vector: for each layer, the out x in weight
/// matrix (row-major) followed by the out-length bias.
struct MlpLayout {
    std::vector<std::size_t> sizes;
    std::vector<Activation> activations;

    MlpLayout(std::vector<std::size_t> sizes, std::vector<Activation> activations);

    std::size_t layers() const noexcept { return activations.size(); }
    std::size_t input_size() const noexcept { return sizes.front(); }
    std::size_t output_size() const noexcept { return sizes.back(); }
    std::size_t param_count() const noexcept;
    std::size_t weight_offset(std::size_t layer) const noexcept;
    std::size_t bias_offset(std::size_t layer) const noexcept;

    friend bool operator==(const MlpLayout&, const MlpLayout&) = default;
};

/// Sigmoid on every hidden layer, identity on the output layer.
MlpLayout hidden_sigmoid_layout(std::vector<std::size_t> sizes);

struct MlpParams {
    MlpLayout layout;
    std::vector<double> values;

    MlpParams(MlpLayout layout, std::vector<double> values);

    static MlpParams zeros(MlpLayout layout);
    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    static MlpParams glorot(MlpLayout layout, std::mt19937_64& rng);

    /// Plain evaluation of one input vector.
    std::vector<double> forward(std::span<const double> input) const;
};

/// Writes Glorot-uniform weights and zero biases into `out`
/// (length layout.param_count()).
void init_glorot(const MlpLayout& layout, std::mt19937_64& rng, std::span<double> out);

/// Traced forward pass. `theta` is a flat parameter node; the network's
/// parameters start at `offset` inside it. `x` is rows x input_size; the
/// result is rows x output_size.
Var mlp_forward(const MlpLayout& layout, Var theta, std::size_t offset, Var x);

}  // namespace dinsat::diff
