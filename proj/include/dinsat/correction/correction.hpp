#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dinsat/core/types.hpp"
#include "dinsat/diff/tape.hpp"
#include "dinsat/ode/solver.hpp"
#include "dinsat/transmission/model.hpp"

namespace dinsat {

/// Per-band dark offset C and scalar flat-illumination magnitude m.
/// Normalized radiance is (L4 - C) / m.
struct SceneNormalization {
    std::vector<double> c;
    double m = 1.0;

    SceneNormalization(std::vector<double> dark, double scale);

    std::size_t bands() const noexcept { return c.size(); }
    /// (l4 - c) / m with negative components clamped to 0.
    std::vector<double> normalize(std::span<const double> l4) const;

    friend bool operator==(const SceneNormalization&, const SceneNormalization&) = default;
};

inline constexpr double kTransmittanceFloor = 1e-6;

/// c_i = min over pixels of L4_i.
std::vector<double> estimate_dark_offset(std::span<const PixelSample> pixels);
std::vector<double> estimate_dark_offset(const HyperCube& cube);

/// m = max over pixels and bands of (L4_i - c_i); 1 when that is 0.
double estimate_scale(std::span<const PixelSample> pixels, std::span<const double> c);
double estimate_scale(const HyperCube& cube, std::span<const double> c);

SceneNormalization estimate_normalization(std::span<const PixelSample> pixels);
SceneNormalization estimate_normalization(const HyperCube& cube);

/// Per-band quality flags of a corrected spectrum.
enum QualityFlag : std::uint8_t {
    kQualityOk = 0,
    kQualityFloored = 1,     // transmittance below the floor; denominator clamped
    kQualityOutOfRange = 2,  // reflectance outside [0, 1]
};

struct CorrectedSpectrum {
    Spectrum rho;
    std::vector<std::uint8_t> quality;
};

/// rho = T^-1((l4 - c) / m) / T(1), denominator floored at kTransmittanceFloor.
CorrectedSpectrum correct_pixel(const TransmissionModel& model, const SceneNormalization& norm,
                                const Spectrum& l4, const ode::SolverConfig& solver);

/// Batched correction of row-major pixel spectra. Returns reflectances and
/// quality flags with the same layout.
struct CorrectedBatch {
    std::vector<double> rho;
    std::vector<std::uint8_t> quality;
};
CorrectedBatch correct_batch(const TransmissionModel& model, const SceneNormalization& norm,
                             std::span<const double> l4_rows, const ode::SolverConfig& solver);

/// l4 = c + m * T(rho * T(1)).
Spectrum simulate_at_sensor(const TransmissionModel& model, const SceneNormalization& norm,
                            const Spectrum& rho, const ode::SolverConfig& solver);

/// Traced correction used by the losses. `x_norm` holds normalized
/// radiance rows; returns rho-hat rows and the transmittance row T(1).
struct TracedCorrection {
    diff::Var rho_hat;
    diff::Var transmittance;
    diff::Var l1;  // same as transmittance: incident radiation at the surface
    diff::Var l2;  // T^-1(x): reflected radiation at the surface
};
TracedCorrection trace_correction(const TracedModel& model, diff::Var x_norm,
                                  const ode::SolverConfig& solver);

}  // namespace dinsat
