#include "dinsat/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "dinsat/error.hpp"

namespace dinsat {

void SynthSpec::validate() const {
    require(rows > 0 && cols > 0, ErrorKind::Config, "synth: rows and cols must be positive");
    require(bands >= 2, ErrorKind::Config, "synth: at least 2 bands");
    require(first_nm > 0 && last_nm > first_nm, ErrorKind::Config, "synth: invalid wavelength range");
    require(alpha0 >= 0, ErrorKind::Config, "synth: alpha0 must be nonnegative");
    require(endmembers >= 2, ErrorKind::Config, "synth: need at least 2 endmembers");
    require(dark_offset >= 0, ErrorKind::Config, "synth: dark offset must be nonnegative");
    require(illumination > 0, ErrorKind::Config, "synth: illumination must be positive");
    require(noise >= 0, ErrorKind::Config, "synth: noise must be nonnegative");
    require(shadow_fraction >= 0 && shadow_fraction <= 1, ErrorKind::Config,
            "synth: shadow_fraction must lie in [0, 1]");
    for (const auto& b : absorption) {
        require(b.center_nm >= first_nm && b.center_nm <= last_nm, ErrorKind::Config,
                "synth: absorption center " + std::to_string(b.center_nm) + " outside wavelength range");
        require(b.width_nm > 0, ErrorKind::Config, "synth: absorption width must be positive");
        require(b.depth >= 0, ErrorKind::Config, "synth: absorption depth must be nonnegative");
    }
}

std::vector<double> synth_alpha(const SynthSpec& spec) {
    const auto grid = WavelengthGrid::linear(spec.first_nm, spec.last_nm, spec.bands);
    std::vector<double> alpha(spec.bands, spec.alpha0);
    for (std::size_t i = 0; i < spec.bands; ++i)
        for (const auto& b : spec.absorption) {
            const double d = (grid[i] - b.center_nm) / b.width_nm;
            alpha[i] += b.depth * std::exp(-0.5 * d * d);
        }
    return alpha;
}

Spectrum SynthScene::reflectance(std::size_t row, std::size_t col) const {
    const std::size_t nb = cube.bands();
    const auto off = static_cast<std::ptrdiff_t>((row * cube.cols() + col) * nb);
    return Spectrum(std::vector<double>(rho.begin() + off, rho.begin() + off + static_cast<std::ptrdiff_t>(nb)),
                    Unit::Reflectance);
}

PixelSample SynthScene::sample(std::size_t row, std::size_t col, bool with_truth) const {
    return PixelSample(row, col, cube.spectrum(row, col),
                       with_truth ? std::optional<Spectrum>(reflectance(row, col)) : std::nullopt);
}

SynthScene synth_scene(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t nb = spec.bands;
    const auto grid = WavelengthGrid::linear(spec.first_nm, spec.last_nm, nb);

    // Smooth endmembers: clipped sums of low-frequency sinusoids.
    std::vector<std::vector<double>> ends(spec.endmembers, std::vector<double>(nb));
    for (auto& e : ends) {
        const double base = 0.15 + 0.55 * unit(rng);
        double amp[3], freq[3], phase[3];
        for (int j = 0; j < 3; ++j) {
            amp[j] = 0.02 + 0.13 * unit(rng);
            freq[j] = 0.3 + 2.2 * unit(rng);
            phase[j] = 2.0 * std::numbers::pi * unit(rng);
        }
        for (std::size_t i = 0; i < nb; ++i) {
            const double t = (grid[i] - spec.first_nm) / (spec.last_nm - spec.first_nm);
            double v = base;
            for (int j = 0; j < 3; ++j) v += amp[j] * std::sin(2.0 * std::numbers::pi * freq[j] * t + phase[j]);
            e[i] = std::clamp(v, 0.0, 1.0);
        }
    }

    const auto alpha = synth_alpha(spec);
    std::vector<double> two_pass(nb);
    for (std::size_t i = 0; i < nb; ++i) two_pass[i] = std::exp(-2.0 * alpha[i]);

    const std::size_t npx = spec.rows * spec.cols;
    std::vector<double> rho(npx * nb), clean(npx * nb), noisy(npx * nb);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> w(spec.endmembers);
    for (std::size_t p = 0; p < npx; ++p) {
        // Dirichlet(1) mixture weights.
        double total = 0.0;
        for (double& wk : w) {
            wk = -std::log(1.0 - unit(rng));
            total += wk;
        }
        const bool shadow = unit(rng) < spec.shadow_fraction;
        const double shade = shadow ? 0.05 * unit(rng) : 1.0;
        for (std::size_t i = 0; i < nb; ++i) {
            double r = 0.0;
            for (std::size_t k = 0; k < spec.endmembers; ++k) r += w[k] / total * ends[k][i];
            r *= shade;
            const double signal = spec.illumination * r * two_pass[i];
            const std::size_t at = p * nb + i;
            rho[at] = r;
            clean[at] = spec.dark_offset + signal;
            const double eps = spec.noise > 0 ? spec.noise * gauss(rng) : 0.0;
            noisy[at] = std::max(0.0, spec.dark_offset + signal * (1.0 + eps));
        }
    }

    return SynthScene{HyperCube(spec.rows, spec.cols, grid, std::move(noisy), Interleave::BSQ), std::move(clean),
                      std::move(rho), alpha,
                      SceneNormalization(std::vector<double>(nb, spec.dark_offset), spec.illumination)};
}

}  // namespace dinsat
