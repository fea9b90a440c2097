#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dinsat/core/types.hpp"
#include "dinsat/correction/correction.hpp"
#include "dinsat/ode/solver.hpp"
#include "dinsat/transmission/model.hpp"

namespace dinsat {

enum class TrainMode { Supervised, Unsupervised };

std::string_view to_string(TrainMode m) noexcept;
TrainMode train_mode_from_string(std::string_view s);

struct TrainConfig {
    TrainMode mode = TrainMode::Supervised;
    ModelKind model = ModelKind::Linear;
    std::size_t latent = TransmissionModel::kDefaultLatent;
    std::size_t hidden = TransmissionModel::kDefaultHidden;

    double lr = 0.01;
    double lambda_fd = 1.0;       // supervised
    double lambda_rho = 1e-2;     // unsupervised
    double lambda_t = 1e-2;       // unsupervised
    double lambda_slope = 1.0;    // unsupervised

    int max_epochs = 5000;
    int patience = 50;
    double min_rel_improvement = 1e-4;
    /// 0 means full batch.
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;

    SplitFractions fractions{0.24, 0.06, 0.70};
    ode::SolverConfig solver;

    /// Supervised split as above; unsupervised 87/25 of 112 pixels.
    static TrainConfig defaults(TrainMode mode);
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double term1 = 0.0;
    double term2 = 0.0;
    double term3 = 0.0;
    /// NaN when no validation split is used.
    double val_loss = 0.0;
    /// Loss used for stopping (validation, else training).
    double monitor = 0.0;
    double best_so_far = 0.0;
};

struct TrainRun {
    TrainConfig config;
    DatasetSplit split;
    SceneNormalization norm;
    std::vector<EpochRecord> history;
    TransmissionModel model;
    bool converged = false;
    int best_epoch = 0;
    double best_loss = 0.0;
    double wall_time_s = 0.0;
};

/// Trains on split.train; monitors split.val (supervised, when nonempty) or
/// the training loss. Returns the best-monitor parameters.
TrainRun train(const TrainConfig& config, std::span<const PixelSample> samples,
               const SceneNormalization& norm, const DatasetSplit& split);

/// Same, drawing the split with split_dataset(samples, config.fractions, config.seed).
TrainRun train(const TrainConfig& config, std::span<const PixelSample> samples,
               const SceneNormalization& norm);

/// Initial model for a run with the given seed.
TransmissionModel initial_model(const TrainConfig& config, std::size_t bands, std::uint64_t seed);

struct EnsembleFailure {
    std::uint64_t seed;
    std::string message;
};

struct EnsembleResult {
    std::vector<TrainRun> runs;
    std::vector<EnsembleFailure> failures;
    std::vector<double> transmittance_mean;
    std::vector<double> transmittance_std;
    /// Mean corrected reflectance over each run's test pixels (all pixels
    /// when the test split is empty), averaged across runs.
    std::vector<double> rho_mean;
    std::vector<double> rho_std;
};

/// n_runs independent trainings with seeds config.seed + k. `reshuffle`
/// redraws the split per run; otherwise all runs share the split drawn
/// with config.seed. Runs execute on up to `threads` threads.
EnsembleResult ensemble(const TrainConfig& config, std::span<const PixelSample> samples,
                        const SceneNormalization& norm, int n_runs, bool reshuffle, int threads = 1);

/// Worker count from DINSAT_THREADS (default: hardware concurrency).
int default_threads();

struct EvalReport {
    std::optional<double> reflectance_pmse;
    std::optional<double> radiance_pmse;
    std::vector<std::string> warnings;
};

/// (i) percent MSE of the ROI-mean corrected reflectance against the
/// ROI-mean truth; (ii) percent MSE of the simulated at-sensor radiance for
/// `library` against the ROI-mean observed radiance, both divided by m.
EvalReport evaluate(const TransmissionModel& model, const SceneNormalization& norm,
                    std::span<const PixelSample> samples, const Spectrum* library,
                    const ode::SolverConfig& solver);

/// Mean over samples of the per-pixel reflectance percent MSE.
double mean_pixel_reflectance_pmse(const TransmissionModel& model, const SceneNormalization& norm,
                                   std::span<const PixelSample> samples, const ode::SolverConfig& solver);

}  // namespace dinsat
