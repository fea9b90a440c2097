#pragma once

#include <cstdint>
#include <vector>

#include "dinsat/core/types.hpp"
#include "dinsat/correction/correction.hpp"
#include "dinsat/transmission/model.hpp"

namespace dinsat {

struct AbsorptionBand {
    double center_nm;
    double width_nm;  // Gaussian standard deviation
    double depth;
};

/// Synthetic scene description. Forward physics:
///   alpha(lambda) = alpha0 + sum depth * exp(-(lambda - center)^2 / (2 width^2))
///   L4 = C + m * rho * exp(-2 alpha)      (two passes through the atmosphere)
/// with relative Gaussian noise on the m * rho * exp(-2 alpha) term.
struct SynthSpec {
    std::size_t rows = 64;
    std::size_t cols = 64;
    std::size_t bands = 126;
    double first_nm = 450.0;
    double last_nm = 2500.0;
    std::vector<AbsorptionBand> absorption{{940.0, 40.0, 1.2}, {1400.0, 60.0, 2.2}, {1900.0, 70.0, 1.8}};
    double alpha0 = 0.3;
    std::size_t endmembers = 6;
    double dark_offset = 50.0;
    double illumination = 1000.0;
    double noise = 0.0;
    /// Fraction of pixels darkened by a shadow factor in [0, 0.05).
    double shadow_fraction = 0.02;

    void validate() const;
};

struct SynthScene {
    HyperCube cube;
    /// Noise-free at-sensor radiance, pixel-major like the cube.
    std::vector<double> clean;
    /// Per-pixel reflectance, pixel-major.
    std::vector<double> rho;
    std::vector<double> alpha;
    SceneNormalization norm;

    TransmissionModel true_model() const { return TransmissionModel::linear_from_alpha(alpha); }
    Spectrum reflectance(std::size_t row, std::size_t col) const;
    PixelSample sample(std::size_t row, std::size_t col, bool with_truth = true) const;
};

/// Absorption profile of `spec` on its wavelength grid.
std::vector<double> synth_alpha(const SynthSpec& spec);

SynthScene synth_scene(const SynthSpec& spec, std::uint64_t seed);

}  // namespace dinsat
