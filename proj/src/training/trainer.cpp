#include "dinsat/training/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "dinsat/diff/adam.hpp"
#include "dinsat/error.hpp"
#include "dinsat/training/losses.hpp"

namespace dinsat {

std::string_view to_string(TrainMode m) noexcept {
    return m == TrainMode::Supervised ? "supervised" : "unsupervised";
}

TrainMode train_mode_from_string(std::string_view s) {
    if (s == "supervised") return TrainMode::Supervised;
    if (s == "unsupervised") return TrainMode::Unsupervised;
    fail(ErrorKind::Config, "unknown mode '" + std::string(s) + "' (expected supervised|unsupervised)");
}

TrainConfig TrainConfig::defaults(TrainMode mode) {
    TrainConfig c;
    c.mode = mode;
    if (mode == TrainMode::Unsupervised) c.fractions = {87.0 / 112.0, 0.0, 25.0 / 112.0};
    return c;
}

void TrainConfig::validate() const {
    require(lr > 0, ErrorKind::Config, "lr must be positive");
    require(lambda_fd >= 0 && lambda_rho >= 0 && lambda_t >= 0 && lambda_slope >= 0, ErrorKind::Config,
            "loss weights must be nonnegative");
    require(patience >= 1, ErrorKind::Config, "patience must be >= 1");
    require(max_epochs >= 1, ErrorKind::Config, "max_epochs must be >= 1");
    require(min_rel_improvement >= 0, ErrorKind::Config, "min_rel_improvement must be nonnegative");
    require(latent > 0 && hidden > 0, ErrorKind::Config, "latent and hidden sizes must be positive");
    solver.validate();
}

TransmissionModel initial_model(const TrainConfig& config, std::size_t bands, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (config.model == ModelKind::Linear) return TransmissionModel::linear_random(bands, rng);
    return TransmissionModel::nonlinear_random(bands, rng, config.latent, config.hidden);
}

namespace {

std::vector<PixelSample> gather(std::span<const PixelSample> samples, std::span<const std::size_t> idx) {
    std::vector<PixelSample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        require(i < samples.size(), ErrorKind::InvalidDataset, "split index outside the sample list");
        out.push_back(samples[i]);
    }
    return out;
}

LossTerms build_loss(const TrainConfig& c, const TracedModel& tm, const SceneNormalization& norm,
                     std::span<const PixelSample> batch) {
    if (c.mode == TrainMode::Supervised) return supervised_loss(tm, norm, batch, c.solver, c.lambda_fd);
    return unsupervised_loss(tm, norm, batch, c.solver, c.lambda_rho, c.lambda_t, c.lambda_slope);
}

double loss_value(const TrainConfig& c, const TransmissionModel& model, const SceneNormalization& norm,
                  std::span<const PixelSample> batch) {
    diff::Tape tape;
    const TracedModel tm = trace(model, tape, false);
    return build_loss(c, tm, norm, batch).total.scalar();
}

}  // namespace

TrainRun train(const TrainConfig& config, std::span<const PixelSample> samples, const SceneNormalization& norm,
               const DatasetSplit& split) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    require(!split.train.empty(), ErrorKind::InvalidDataset, "training split is empty");
    if (config.mode == TrainMode::Unsupervised)
        require(split.train.size() >= 2, ErrorKind::InvalidDataset, "unsupervised training needs >= 2 pixels");

    const auto train_set = gather(samples, split.train);
    const auto val_set = gather(samples, split.val);
    const std::size_t bands = train_set.front().l4.size();
    require(norm.bands() == bands, ErrorKind::Shape, "normalization band count differs from the samples");
    if (config.mode == TrainMode::Supervised) {
        for (const auto* set : {&train_set, &val_set})
            for (const auto& s : *set)
                require(s.truth_rho.has_value(), ErrorKind::InvalidDataset,
                        "supervised training needs truth reflectance for every train/val pixel");
    }
    const bool use_val = config.mode == TrainMode::Supervised && !val_set.empty();

    TransmissionModel model = initial_model(config, bands, config.seed);
    diff::AdamState adam(model.params().size(), diff::AdamHyper{config.lr});
    std::mt19937_64 batch_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainRun run{config, split, norm, {}, model, false, 0, std::numeric_limits<double>::infinity(), 0.0};
    double best = std::numeric_limits<double>::infinity();
    double reference = std::numeric_limits<double>::infinity();  // last significant improvement
    int since_improvement = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = config.batch_size == 0 ? train_set.size()
                                                     : std::min(config.batch_size, train_set.size());

    diff::Tape tape;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        try {
            // Full-batch loss at the epoch's starting parameters.
            tape.clear();
            TracedModel tm = trace(model, tape, true);
            LossTerms loss = build_loss(config, tm, norm, train_set);
            rec.train_loss = loss.total.scalar();
            rec.term1 = loss.term1.scalar();
            rec.term2 = loss.term2.scalar();
            rec.term3 = loss.has_term3 ? loss.term3.scalar() : 0.0;
            rec.val_loss = use_val ? loss_value(config, model, norm, val_set)
                                   : std::numeric_limits<double>::quiet_NaN();
            rec.monitor = use_val ? rec.val_loss : rec.train_loss;
            if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.monitor))
                fail(ErrorKind::Numeric, "non-finite loss");

            if (rec.monitor < best) {
                best = rec.monitor;
                run.model = model;
                run.best_epoch = epoch;
            }
            if (rec.monitor < reference - config.min_rel_improvement * std::fabs(reference) ||
                !std::isfinite(reference)) {
                reference = rec.monitor;
                since_improvement = 0;
            } else {
                ++since_improvement;
            }
            rec.best_so_far = best;
            run.history.push_back(rec);
            if (since_improvement >= config.patience) {
                run.converged = true;
                break;
            }

            if (batch == train_set.size()) {
                const auto grads = tape.backward(loss.total);
                diff::adam_step(adam, model.mutable_params(), grads.wrt(tm.theta));
            } else {
                std::shuffle(order.begin(), order.end(), batch_rng);
                for (std::size_t start = 0; start < order.size(); start += batch) {
                    const std::size_t count = std::min(batch, order.size() - start);
                    std::vector<PixelSample> mb;
                    mb.reserve(count);
                    for (std::size_t k = 0; k < count; ++k) mb.push_back(train_set[order[start + k]]);
                    tape.clear();
                    tm = trace(model, tape, true);
                    loss = build_loss(config, tm, norm, mb);
                    const auto grads = tape.backward(loss.total);
                    diff::adam_step(adam, model.mutable_params(), grads.wrt(tm.theta));
                }
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Numeric)
                fail(ErrorKind::Numeric, "training aborted at epoch " + std::to_string(epoch) + ": " + e.what());
            throw;
        }
    }
    run.best_loss = best;
    run.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return run;
}

TrainRun train(const TrainConfig& config, std::span<const PixelSample> samples, const SceneNormalization& norm) {
    require(!samples.empty(), ErrorKind::InvalidDataset, "no training pixels");
    require(samples.size() >= 3, ErrorKind::InvalidDataset, "at least 3 pixels are needed to split a dataset");
    return train(config, samples, norm, split_dataset(samples.size(), config.fractions, config.seed));
}

int default_threads() {
    if (const char* env = std::getenv("DINSAT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::vector<double> mean_corrected(const TrainRun& run, std::span<const PixelSample> samples) {
    std::vector<std::size_t> idx = run.split.test;
    if (idx.empty()) {
        idx.resize(samples.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    const std::size_t nb = run.model.bands();
    std::vector<double> rows;
    rows.reserve(idx.size() * nb);
    for (std::size_t i : idx) rows.insert(rows.end(), samples[i].l4.values().begin(), samples[i].l4.values().end());
    const auto corr = correct_batch(run.model, run.norm, rows, run.config.solver);
    std::vector<double> mean(nb, 0.0);
    for (std::size_t p = 0; p < idx.size(); ++p)
        for (std::size_t b = 0; b < nb; ++b) mean[b] += corr.rho[p * nb + b];
    for (double& v : mean) v /= static_cast<double>(idx.size());
    return mean;
}

void mean_std(const std::vector<std::vector<double>>& rows, std::vector<double>& mean, std::vector<double>& sd) {
    const std::size_t nb = rows.front().size();
    const auto n = static_cast<double>(rows.size());
    mean.assign(nb, 0.0);
    sd.assign(nb, 0.0);
    for (const auto& r : rows)
        for (std::size_t b = 0; b < nb; ++b) mean[b] += r[b];
    for (double& v : mean) v /= n;
    for (const auto& r : rows)
        for (std::size_t b = 0; b < nb; ++b) sd[b] += (r[b] - mean[b]) * (r[b] - mean[b]);
    for (double& v : sd) v = std::sqrt(v / n);
}

}  // namespace

EnsembleResult ensemble(const TrainConfig& config, std::span<const PixelSample> samples,
                        const SceneNormalization& norm, int n_runs, bool reshuffle, int threads) {
    require(n_runs >= 1, ErrorKind::Config, "ensemble needs at least one run");
    config.validate();
    const DatasetSplit shared = split_dataset(samples.size(), config.fractions, config.seed);

    std::vector<std::optional<TrainRun>> slots(static_cast<std::size_t>(n_runs));
    std::vector<std::string> errors(static_cast<std::size_t>(n_runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next.fetch_add(1); k < n_runs; k = next.fetch_add(1)) {
            TrainConfig c = config;
            c.seed = config.seed + static_cast<std::uint64_t>(k);
            try {
                const DatasetSplit split = reshuffle ? split_dataset(samples.size(), c.fractions, c.seed) : shared;
                slots[static_cast<std::size_t>(k)] = train(c, samples, norm, split);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(k)] = e.what();
            }
        }
    };
    const int workers = std::clamp(threads, 1, n_runs);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    EnsembleResult result;
    for (int k = 0; k < n_runs; ++k) {
        auto& slot = slots[static_cast<std::size_t>(k)];
        if (slot) result.runs.push_back(std::move(*slot));
        else result.failures.push_back({config.seed + static_cast<std::uint64_t>(k), errors[static_cast<std::size_t>(k)]});
    }
    if (result.runs.empty())
        fail(ErrorKind::Numeric, "every ensemble run failed; first error: " + result.failures.front().message);

    std::vector<std::vector<double>> trans, rho;
    for (const auto& run : result.runs) {
        const auto t1 = transmittance_spectrum(run.model, run.config.solver);
        trans.emplace_back(t1.values().begin(), t1.values().end());
        rho.push_back(mean_corrected(run, samples));
    }
    mean_std(trans, result.transmittance_mean, result.transmittance_std);
    mean_std(rho, result.rho_mean, result.rho_std);
    return result;
}

EvalReport evaluate(const TransmissionModel& model, const SceneNormalization& norm,
                    std::span<const PixelSample> samples, const Spectrum* library,
                    const ode::SolverConfig& solver) {
    EvalReport rep;
    if (samples.empty()) {
        rep.warnings.emplace_back("no samples: all metrics omitted");
        return rep;
    }
    const bool all_truth = std::all_of(samples.begin(), samples.end(),
                                       [](const PixelSample& s) { return s.truth_rho.has_value(); });
    if (all_truth) {
        std::vector<double> rows;
        for (const auto& s : samples) rows.insert(rows.end(), s.l4.values().begin(), s.l4.values().end());
        const auto corr = correct_batch(model, norm, rows, solver);
        const std::size_t nb = model.bands();
        std::vector<double> mean(nb, 0.0);
        for (std::size_t p = 0; p < samples.size(); ++p)
            for (std::size_t b = 0; b < nb; ++b) mean[b] += corr.rho[p * nb + b];
        for (double& v : mean) v /= static_cast<double>(samples.size());
        const auto truth = roi_mean_spectrum(samples, SampleField::Truth);
        rep.reflectance_pmse = percent_mse(mean, truth.values());
    } else {
        rep.warnings.emplace_back("reflectance metric omitted: samples lack truth reflectance");
    }
    if (library) {
        const auto sim = simulate_at_sensor(model, norm, *library, solver);
        const auto obs = roi_mean_spectrum(samples, SampleField::Radiance);
        std::vector<double> a(sim.size()), b(obs.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = sim[i] / norm.m;
            b[i] = obs[i] / norm.m;
        }
        rep.radiance_pmse = percent_mse(a, b);
    } else {
        rep.warnings.emplace_back("radiance metric omitted: no library spectrum");
    }
    return rep;
}

double mean_pixel_reflectance_pmse(const TransmissionModel& model, const SceneNormalization& norm,
                                   std::span<const PixelSample> samples, const ode::SolverConfig& solver) {
    require(!samples.empty(), ErrorKind::EmptyInput, "no samples to evaluate");
    std::vector<double> rows;
    for (const auto& s : samples) rows.insert(rows.end(), s.l4.values().begin(), s.l4.values().end());
    const auto corr = correct_batch(model, norm, rows, solver);
    const std::size_t nb = model.bands();
    double acc = 0.0;
    for (std::size_t p = 0; p < samples.size(); ++p) {
        require(samples[p].truth_rho.has_value(), ErrorKind::InvalidDataset, "sample without truth reflectance");
        acc += percent_mse(std::span<const double>(corr.rho).subspan(p * nb, nb), samples[p].truth_rho->values());
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace dinsat
