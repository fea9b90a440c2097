#include "dinsat/correction/correction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dinsat/error.hpp"
#include "dinsat/simd/kernels.hpp"

namespace dinsat {

using diff::Var;

SceneNormalization::SceneNormalization(std::vector<double> dark, double scale) : c(std::move(dark)), m(scale) {
    require(std::isfinite(m) && m > 0, ErrorKind::Config, "illumination magnitude m must be positive");
    for (double v : c)
        require(std::isfinite(v) && v >= 0, ErrorKind::Config, "dark offset must be finite and nonnegative");
}

std::vector<double> SceneNormalization::normalize(std::span<const double> l4) const {
    require(l4.size() == c.size(), ErrorKind::Shape,
            "normalize: spectrum has " + std::to_string(l4.size()) + " bands, offset has " +
                std::to_string(c.size()));
    std::vector<double> x(l4.size());
    const double inv = 1.0 / m;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(l4[i] - c[i], 0.0) * inv;
    return x;
}

std::vector<double> estimate_dark_offset(std::span<const PixelSample> pixels) {
    require(!pixels.empty(), ErrorKind::EmptyInput, "estimate_dark_offset on an empty pixel list");
    const auto& k = simd::active();
    const auto first = pixels.front().l4.values();
    std::vector<double> c(first.begin(), first.end());
    for (const auto& p : pixels) {
        require(p.l4.size() == c.size(), ErrorKind::Shape, "estimate_dark_offset: spectra differ in length");
        k.min_acc(p.l4.values().data(), c.data(), c.size());
    }
    return c;
}

std::vector<double> estimate_dark_offset(const HyperCube& cube) {
    const auto& k = simd::active();
    const std::size_t nb = cube.bands();
    std::vector<double> c(cube.data().begin(), cube.data().begin() + static_cast<std::ptrdiff_t>(nb));
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) k.min_acc(cube.data().data() + p * nb, c.data(), nb);
    return c;
}

namespace {

double scale_from_max(double mx) { return mx > 0 ? mx : 1.0; }

}  // namespace

double estimate_scale(std::span<const PixelSample> pixels, std::span<const double> c) {
    double mx = 0.0;
    for (const auto& p : pixels) {
        require(p.l4.size() == c.size(), ErrorKind::Shape, "estimate_scale: offset length differs");
        for (std::size_t i = 0; i < c.size(); ++i) mx = std::max(mx, p.l4[i] - c[i]);
    }
    return scale_from_max(mx);
}

double estimate_scale(const HyperCube& cube, std::span<const double> c) {
    const auto& k = simd::active();
    const std::size_t nb = cube.bands();
    require(c.size() == nb, ErrorKind::Shape, "estimate_scale: offset length differs");
    std::vector<double> mx(nb, -std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) k.max_acc(cube.data().data() + p * nb, mx.data(), nb);
    double best = 0.0;
    for (std::size_t i = 0; i < nb; ++i) best = std::max(best, mx[i] - c[i]);
    return scale_from_max(best);
}

SceneNormalization estimate_normalization(std::span<const PixelSample> pixels) {
    auto c = estimate_dark_offset(pixels);
    const double m = estimate_scale(pixels, c);
    return {std::move(c), m};
}

SceneNormalization estimate_normalization(const HyperCube& cube) {
    auto c = estimate_dark_offset(cube);
    const double m = estimate_scale(cube, c);
    return {std::move(c), m};
}

CorrectedBatch correct_batch(const TransmissionModel& model, const SceneNormalization& norm,
                             std::span<const double> l4_rows, const ode::SolverConfig& solver) {
    const std::size_t nb = model.bands();
    require(norm.bands() == nb, ErrorKind::Shape, "normalization and model band counts differ");
    require(l4_rows.size() % nb == 0, ErrorKind::Shape, "correct_batch: length is not a multiple of bands");
    const std::size_t n = l4_rows.size() / nb;

    std::vector<double> x(l4_rows.size());
    for (std::size_t p = 0; p < n; ++p) {
        const auto xp = norm.normalize(l4_rows.subspan(p * nb, nb));
        std::copy(xp.begin(), xp.end(), x.begin() + static_cast<std::ptrdiff_t>(p * nb));
    }
    const auto t1 = transmittance_spectrum(model, solver);
    std::vector<double> denom(nb);
    std::vector<std::uint8_t> floored(nb, kQualityOk);
    for (std::size_t i = 0; i < nb; ++i) {
        denom[i] = t1[i] >= kTransmittanceFloor ? t1[i] : kTransmittanceFloor;
        if (t1[i] < kTransmittanceFloor) floored[i] = kQualityFloored;
    }

    CorrectedBatch out;
    out.rho = invert_transmit_batch(model, x, solver);
    out.quality.resize(out.rho.size());
    const auto& k = simd::active();
    for (std::size_t p = 0; p < n; ++p) {
        double* r = out.rho.data() + p * nb;
        k.div(r, denom.data(), r, nb);
        for (std::size_t i = 0; i < nb; ++i) {
            std::uint8_t q = floored[i];
            if (r[i] < 0.0 || r[i] > 1.0) q |= kQualityOutOfRange;
            out.quality[p * nb + i] = q;
        }
    }
    return out;
}

CorrectedSpectrum correct_pixel(const TransmissionModel& model, const SceneNormalization& norm,
                                const Spectrum& l4, const ode::SolverConfig& solver) {
    auto b = correct_batch(model, norm, l4.values(), solver);
    return {Spectrum(std::move(b.rho), Unit::Reflectance), std::move(b.quality)};
}

Spectrum simulate_at_sensor(const TransmissionModel& model, const SceneNormalization& norm,
                            const Spectrum& rho, const ode::SolverConfig& solver) {
    const std::size_t nb = model.bands();
    require(rho.size() == nb && norm.bands() == nb, ErrorKind::Shape,
            "simulate_at_sensor: band counts of reflectance, model and normalization differ");
    const auto t1 = transmittance_spectrum(model, solver);
    std::vector<double> l1(nb);
    simd::active().mul(rho.values().data(), t1.values().data(), l1.data(), nb);
    auto out = transmit_batch(model, l1, solver);
    for (std::size_t i = 0; i < nb; ++i) out[i] = norm.c[i] + norm.m * out[i];
    return Spectrum(std::move(out), Unit::Radiance);
}

TracedCorrection trace_correction(const TracedModel& model, Var x_norm, const ode::SolverConfig& solver) {
    diff::Tape& tape = x_norm.tape();
    const std::size_t nb = x_norm.shape().cols;
    const Var ones = tape.constant(std::vector<double>(nb, 1.0), {1, nb});
    const Var t1 = solve_forward(model, ones, solver);
    const Var l2 = solve_reverse(model, x_norm, solver);
    const Var rho_hat = diff::div_row(l2, diff::floor_min(t1, kTransmittanceFloor));
    return {rho_hat, t1, t1, l2};
}

}  // namespace dinsat
