#include "dinsat/diff/mlp.hpp"

#include <cmath>
#include <string>

#include "dinsat/error.hpp"
#include "dinsat/simd/kernels.hpp"

namespace dinsat::diff {

std::string_view to_string(Activation a) noexcept {
    return a == Activation::Sigmoid ? "sigmoid" : "identity";
}

Activation activation_from_string(std::string_view s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity") return Activation::Identity;
    fail(ErrorKind::Parse, "unknown activation '" + std::string(s) + "'");
}

MlpLayout::MlpLayout(std::vector<std::size_t> s, std::vector<Activation> a)
    : sizes(std::move(s)), activations(std::move(a)) {
    require(sizes.size() >= 2, ErrorKind::Config, "an MLP needs at least an input and an output size");
    require(activations.size() + 1 == sizes.size(), ErrorKind::Config,
            "MLP needs one activation per weight layer");
    for (std::size_t n : sizes) require(n > 0, ErrorKind::Config, "MLP layer sizes must be positive");
}

std::size_t MlpLayout::param_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layers(); ++l) n += sizes[l + 1] * sizes[l] + sizes[l + 1];
    return n;
}

std::size_t MlpLayout::weight_offset(std::size_t layer) const noexcept {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += sizes[l + 1] * sizes[l] + sizes[l + 1];
    return off;
}

std::size_t MlpLayout::bias_offset(std::size_t layer) const noexcept {
    return weight_offset(layer) + sizes[layer + 1] * sizes[layer];
}

MlpLayout hidden_sigmoid_layout(std::vector<std::size_t> sizes) {
    std::vector<Activation> acts(sizes.size() - 1, Activation::Sigmoid);
    acts.back() = Activation::Identity;
    return MlpLayout(std::move(sizes), std::move(acts));
}

MlpParams::MlpParams(MlpLayout l, std::vector<double> v) : layout(std::move(l)), values(std::move(v)) {
    require(values.size() == layout.param_count(), ErrorKind::Shape,
            "MLP parameter vector has " + std::to_string(values.size()) + " entries, layout needs " +
                std::to_string(layout.param_count()));
    for (double x : values) require(std::isfinite(x), ErrorKind::Numeric, "non-finite MLP parameter");
}

MlpParams MlpParams::zeros(MlpLayout layout) {
    const auto n = layout.param_count();
    return MlpParams(std::move(layout), std::vector<double>(n, 0.0));
}

MlpParams MlpParams::glorot(MlpLayout layout, std::mt19937_64& rng) {
    std::vector<double> v(layout.param_count());
    init_glorot(layout, rng, v);
    return MlpParams(std::move(layout), std::move(v));
}

void init_glorot(const MlpLayout& layout, std::mt19937_64& rng, std::span<double> out) {
    require(out.size() == layout.param_count(), ErrorKind::Shape, "init_glorot: wrong output length");
    for (std::size_t l = 0; l < layout.layers(); ++l) {
        const std::size_t in = layout.sizes[l], o = layout.sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + o));
        std::uniform_real_distribution<double> dist(-limit, limit);
        double* w = out.data() + layout.weight_offset(l);
        for (std::size_t i = 0; i < in * o; ++i) w[i] = dist(rng);
        double* b = out.data() + layout.bias_offset(l);
        for (std::size_t i = 0; i < o; ++i) b[i] = 0.0;
    }
}

std::vector<double> MlpParams::forward(std::span<const double> input) const {
    require(input.size() == layout.input_size(), ErrorKind::Shape,
            "mlp forward: input length " + std::to_string(input.size()) + " != " +
                std::to_string(layout.input_size()));
    const auto& k = simd::active();
    std::vector<double> x(input.begin(), input.end());
    for (std::size_t l = 0; l < layout.layers(); ++l) {
        const std::size_t in = layout.sizes[l], o = layout.sizes[l + 1];
        std::vector<double> y(o);
        k.gemv(values.data() + layout.weight_offset(l), x.data(), y.data(), o, in);
        k.add(y.data(), values.data() + layout.bias_offset(l), y.data(), o);
        if (layout.activations[l] == Activation::Sigmoid)
            for (double& v : y) v = sigmoid(v);
        x = std::move(y);
    }
    return x;
}

Var mlp_forward(const MlpLayout& layout, Var theta, std::size_t offset, Var x) {
    if (x.shape().cols != layout.input_size())
        fail(ErrorKind::Shape, "mlp_forward: input has " + std::to_string(x.shape().cols) +
                                   " columns, network expects " + std::to_string(layout.input_size()));
    Var h = x;
    for (std::size_t l = 0; l < layout.layers(); ++l) {
        const std::size_t in = layout.sizes[l], o = layout.sizes[l + 1];
        Var w = slice(theta, offset + layout.weight_offset(l), {o, in});
        Var b = slice(theta, offset + layout.bias_offset(l), {1, o});
        h = linear(h, w, b);
        if (layout.activations[l] == Activation::Sigmoid) h = sigmoid(h);
    }
    return h;
}

}  // namespace dinsat::diff
