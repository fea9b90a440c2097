#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dinsat/synth/synth.hpp"
#include "dinsat/training/trainer.hpp"

namespace dinsat::io {

/// Flat `key = value` text. '#' starts a comment; blank lines are ignored.
/// Keys are unique.
struct KeyValues {
    std::string origin;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> find(std::string_view key) const;
};

KeyValues parse_key_values(const std::string& text, const std::string& origin = "<config>");
KeyValues read_key_values(const std::filesystem::path& path);

/// Training options, including the CLI-level ones that are not part of a
/// single run.
///
/// Keys: mode, model, latent, hidden, lr, lambda, lambda1, lambda2, lambda3,
/// max_epochs, patience, min_rel_improvement, batch_size, seed,
/// train_fraction, val_fraction, test_fraction, solver, steps, x0, x_end,
/// inverse, illumination, sample_fraction, sample_count, ensemble, reshuffle.
struct TrainSettings {
    TrainConfig train = TrainConfig::defaults(TrainMode::Supervised);
    /// Known flat illumination m; estimated from the scene when absent.
    std::optional<double> illumination;
    /// Unsupervised pixel sample: a fraction of the cube, or a fixed count.
    double sample_fraction = 0.0005;
    std::optional<std::size_t> sample_count;
    int ensemble = 1;
    bool reshuffle = true;

    void validate() const;
};

/// Builds settings from `kv`. The mode comes from `mode_override`, else the
/// `mode` key, else supervised; mode-specific defaults are applied before
/// the remaining keys. Unknown keys raise a config error.
TrainSettings train_settings(const KeyValues& kv, std::optional<TrainMode> mode_override = std::nullopt);

/// Synthetic scene plus the ROI layout written next to it.
///
/// Keys: rows, cols, bands, first_nm, last_nm, alpha0, endmembers,
/// dark_offset, illumination, noise, shadow_fraction, roi_regions,
/// roi_pixels, absorption (`center:width:depth,...`, or `none`).
struct SynthSettings {
    SynthSpec spec;
    std::size_t roi_regions = 5;
    std::size_t roi_pixels = 29;

    void validate() const;
};

SynthSettings synth_settings(const KeyValues& kv);

std::vector<AbsorptionBand> parse_absorption(std::string_view text, const std::string& what);

}  // namespace dinsat::io
