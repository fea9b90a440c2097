#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dinsat/correction/correction.hpp"
#include "dinsat/ode/solver.hpp"
#include "dinsat/transmission/model.hpp"

namespace dinsat::io {

/// Everything needed to apply a trained model to new data.
struct ModelArtifact {
    TransmissionModel model;
    ode::SolverConfig solver;
    std::optional<SceneNormalization> norm;
    std::optional<std::vector<double>> wavelengths;

    friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

/// Line-oriented text format:
///
///     dinsat-model 1
///     kind = linear|nonlinear
///     bands = N
///     latent = q                (nonlinear)
///     hidden = h                (nonlinear)
///     solver = rk4|euler
///     steps = S
///     x0 = 0
///     x_end = 1
///     inverse = discrete|integrate
///     illumination = m          (optional)
///     dark_offset = c1,...,cN   (optional)
///     wavelengths = w1,...,wN   (optional)
///     params = P
///     <P values, one per line>
///
/// Doubles use the shortest representation that parses back exactly, so a
/// write/read cycle reproduces every parameter bit for bit.
std::string format_model(const ModelArtifact& artifact);
ModelArtifact parse_model(const std::string& text, const std::string& origin = "<model>");

void write_model(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact read_model(const std::filesystem::path& path);

}  // namespace dinsat::io
