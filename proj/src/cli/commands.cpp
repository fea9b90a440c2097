#include "dinsat/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "dinsat/correction/correction.hpp"
#include "dinsat/io/config.hpp"
#include "dinsat/io/envi.hpp"
#include "dinsat/io/model_io.hpp"
#include "dinsat/io/tables.hpp"
#include "dinsat/synth/synth.hpp"
#include "dinsat/training/trainer.hpp"
#include "io/text.hpp"

namespace dinsat::cli {

namespace fs = std::filesystem;
using io::detail::format_double;

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config:
            return kExitConfig;
        case ErrorKind::InvalidDataset:
        case ErrorKind::EmptyInput:
        case ErrorKind::Shape:
        case ErrorKind::Parse:
        case ErrorKind::CorruptFile:
        case ErrorKind::UnsupportedFormat:
        case ErrorKind::Io:
            return kExitData;
        case ErrorKind::Numeric:
            return kExitNumeric;
        case ErrorKind::Contract:
            return kExitInternal;
    }
    return kExitInternal;
}

std::string_view category(ErrorKind kind) noexcept {
    switch (exit_code(kind)) {
        case kExitConfig:
            return "config";
        case kExitData:
            return "data";
        case kExitNumeric:
            return "numeric";
        default:
            return "internal";
    }
}

std::string error_line(std::string_view cat, std::string_view kind, std::string_view detail) {
    std::string flat(detail);
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    return "error: category=" + std::string(cat) + " kind=" + std::string(kind) + " detail=" + flat;
}

namespace {

struct Context {
    std::ostream& out;
    std::ostream& err;
};

void warn(Context& ctx, const std::string& msg) { ctx.err << "warning: " << msg << "\n"; }

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

int resolve_threads(int flag) { return flag > 0 ? flag : default_threads(); }

HyperCube load_cube(Context& ctx, const fs::path& header) {
    std::vector<std::string> warnings;
    HyperCube cube = io::read_envi(header, &warnings);
    for (const auto& w : warnings) warn(ctx, w);
    return cube;
}

std::vector<double> reflectance_of(const HyperCube& truth, std::size_t row, std::size_t col) {
    const auto px = truth.pixel(row, col);
    return {px.begin(), px.end()};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string spec;
    std::uint64_t seed = 0;
    std::string out;
};

void cmd_synth(Context& ctx, const SynthArgs& a) {
    const io::SynthSettings s =
        a.spec.empty() ? io::synth_settings(io::KeyValues{"<defaults>", {}}) : io::synth_settings(io::read_key_values(a.spec));
    const fs::path dir(a.out);
    ensure_dir(dir / "refs");
    const SynthScene scene = synth_scene(s.spec, a.seed);
    const auto& grid = scene.cube.grid();
    const std::vector<double> wl(grid.nm().begin(), grid.nm().end());

    io::write_envi(scene.cube, dir / "scene.hdr", dir / "scene.img", Interleave::BSQ, io::kEnviFloat64);
    io::write_envi_image(dir / "rho.hdr", dir / "rho.img", scene.cube.rows(), scene.cube.cols(), scene.cube.bands(),
                         scene.rho, Interleave::BSQ, io::kEnviFloat64, wl, "truth reflectance");

    {
        auto out = open_out(dir / "truth.csv");
        out << "wavelength_nm,alpha,transmittance,dark_offset,illumination\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            out << format_double(grid[i]) << "," << format_double(scene.alpha[i]) << ","
                << format_double(std::exp(-scene.alpha[i])) << "," << format_double(scene.norm.c[i]) << ","
                << format_double(scene.norm.m) << "\n";
    }

    std::vector<std::size_t> order(scene.cube.pixel_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(a.seed ^ 0x5bd1e995ULL);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    io::RoiFile roi;
    const std::size_t nb = grid.size();
    for (std::size_t r = 0; r < s.roi_regions; ++r) {
        io::RoiRegion region{"target" + std::to_string(r + 1), {}, std::nullopt};
        std::vector<double> mean(nb, 0.0);
        for (std::size_t k = 0; k < s.roi_pixels; ++k) {
            const std::size_t p = order[r * s.roi_pixels + k];
            const std::size_t row = p / scene.cube.cols(), col = p % scene.cube.cols();
            region.pixels.emplace_back(row, col);
            for (std::size_t b = 0; b < nb; ++b) mean[b] += scene.rho[p * nb + b];
        }
        for (double& v : mean) v /= static_cast<double>(s.roi_pixels);
        const fs::path ref = fs::path("refs") / (region.name + ".csv");
        io::write_spectrum_csv(dir / ref, grid, Spectrum(mean, Unit::Reflectance), "reflectance");
        region.reference = dir / ref;
        roi.regions.push_back(std::move(region));
    }
    // References are stored relative to the ROI file.
    {
        auto out = open_out(dir / "roi.csv");
        out << "region_name,row,col,reference_csv_path\n";
        for (const auto& r : roi.regions)
            for (const auto& [row, col] : r.pixels)
                out << r.name << "," << row << "," << col << ",refs/" << r.name << ".csv\n";
    }
    ctx.out << "wrote " << scene.cube.rows() << "x" << scene.cube.cols() << "x" << nb << " scene to " << dir.string()
            << "\n";
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::vector<std::string> cubes;
    std::vector<std::string> truths;
    std::string mode;
    std::string roi;
    std::string config;
    std::string out;
    int ensemble = 0;
    std::int64_t seed = -1;
    int threads = 0;
};

struct RegionPixels {
    std::string name;
    std::optional<std::vector<double>> reference;
    std::vector<std::size_t> sample_index;
};

void write_history(const fs::path& path, const TrainRun& run) {
    auto out = open_out(path);
    out << "epoch,train_loss,term1,term2,term3,val_loss,monitor,best_so_far\n";
    for (const auto& h : run.history) {
        out << h.epoch << "," << format_double(h.train_loss) << "," << format_double(h.term1) << ","
            << format_double(h.term2) << "," << format_double(h.term3) << ","
            << (std::isnan(h.val_loss) ? std::string() : format_double(h.val_loss)) << ","
            << format_double(h.monitor) << "," << format_double(h.best_so_far) << "\n";
    }
}

void write_split(const fs::path& path, const TrainRun& run, std::span<const PixelSample> samples) {
    auto out = open_out(path);
    out << "sample,row,col,split\n";
    auto emit = [&](const std::vector<std::size_t>& idx, const char* name) {
        for (std::size_t i : idx) out << i << "," << samples[i].row << "," << samples[i].col << "," << name << "\n";
    };
    emit(run.split.train, "train");
    emit(run.split.val, "val");
    emit(run.split.test, "test");
}

void write_roi_spectra(const fs::path& path, const TrainRun& run, std::span<const PixelSample> samples,
                       const std::vector<RegionPixels>& regions, const WavelengthGrid& grid) {
    auto out = open_out(path);
    out << "region,band,wavelength_nm,corrected,reference\n";
    const std::size_t nb = grid.size();
    for (const auto& r : regions) {
        if (r.sample_index.empty()) continue;
        std::vector<double> rows;
        for (std::size_t i : r.sample_index)
            rows.insert(rows.end(), samples[i].l4.values().begin(), samples[i].l4.values().end());
        const auto corr = correct_batch(run.model, run.norm, rows, run.config.solver);
        std::vector<double> mean(nb, 0.0);
        for (std::size_t p = 0; p < r.sample_index.size(); ++p)
            for (std::size_t b = 0; b < nb; ++b) mean[b] += corr.rho[p * nb + b];
        for (std::size_t b = 0; b < nb; ++b) {
            mean[b] /= static_cast<double>(r.sample_index.size());
            out << r.name << "," << b << "," << format_double(grid[b]) << "," << format_double(mean[b]) << ","
                << (r.reference ? format_double((*r.reference)[b]) : std::string()) << "\n";
        }
    }
}

std::string pmse_text(std::optional<double> v) { return v ? format_double(*v) : std::string("na"); }

void write_run_summary(const fs::path& path, const TrainRun& run, std::span<const PixelSample> samples) {
    auto out = open_out(path);
    const auto& c = run.config;
    out << "mode = " << to_string(c.mode) << "\n";
    out << "model = " << to_string(c.model) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "lr = " << format_double(c.lr) << "\n";
    out << "epochs = " << run.history.size() << "\n";
    out << "best_epoch = " << run.best_epoch << "\n";
    out << "best_loss = " << format_double(run.best_loss) << "\n";
    out << "converged = " << (run.converged ? "true" : "false") << "\n";
    out << "train_pixels = " << run.split.train.size() << "\n";
    out << "val_pixels = " << run.split.val.size() << "\n";
    out << "test_pixels = " << run.split.test.size() << "\n";
    std::vector<PixelSample> test;
    for (std::size_t i : run.split.test)
        if (samples[i].truth_rho) test.push_back(samples[i]);
    std::optional<double> pmse;
    if (!test.empty() && test.size() == run.split.test.size())
        pmse = mean_pixel_reflectance_pmse(run.model, run.norm, test, c.solver);
    out << "test_reflectance_pmse = " << pmse_text(pmse) << "\n";
    out << "wall_time_s = " << format_double(run.wall_time_s) << "\n";
}

void cmd_train(Context& ctx, const TrainArgs& a) {
    std::optional<TrainMode> mode;
    if (!a.mode.empty()) mode = train_mode_from_string(a.mode);
    const io::KeyValues kv = a.config.empty() ? io::KeyValues{"<defaults>", {}} : io::read_key_values(a.config);
    io::TrainSettings s = io::train_settings(kv, mode);
    if (a.seed >= 0) s.train.seed = static_cast<std::uint64_t>(a.seed);
    if (a.ensemble > 0) s.ensemble = a.ensemble;
    s.validate();
    const TrainMode m = s.train.mode;

    require(!a.truths.empty() ? a.truths.size() == a.cubes.size() : true, ErrorKind::Config,
            "--truth must be given once per --cube");
    std::vector<HyperCube> cubes;
    for (const auto& c : a.cubes) cubes.push_back(load_cube(ctx, c));
    const WavelengthGrid grid = cubes.front().grid();
    for (std::size_t k = 1; k < cubes.size(); ++k)
        io::require_same_grid(grid, cubes[k].grid(), "cube " + a.cubes[k]);
    std::vector<HyperCube> truths;
    for (std::size_t k = 0; k < a.truths.size(); ++k) {
        truths.push_back(load_cube(ctx, a.truths[k]));
        require(truths[k].rows() == cubes[k].rows() && truths[k].cols() == cubes[k].cols() &&
                    truths[k].bands() == cubes[k].bands(),
                ErrorKind::InvalidDataset, "truth cube " + a.truths[k] + " does not match its radiance cube");
    }

    // Dark offset from every available pixel; m known or estimated likewise.
    const std::size_t nb = grid.size();
    std::vector<double> c(nb, std::numeric_limits<double>::infinity());
    for (const auto& cube : cubes) {
        const auto ck = estimate_dark_offset(cube);
        for (std::size_t b = 0; b < nb; ++b) c[b] = std::min(c[b], ck[b]);
    }
    double scale = 0.0;
    if (s.illumination) {
        scale = *s.illumination;
    } else {
        for (const auto& cube : cubes) scale = std::max(scale, estimate_scale(cube, c));
    }
    const SceneNormalization norm(c, scale);

    std::vector<PixelSample> samples;
    std::vector<RegionPixels> regions;
    std::optional<io::RoiFile> roi;
    if (!a.roi.empty()) {
        roi = io::read_roi(a.roi);
        for (const auto& cube : cubes) roi->validate_bounds(cube.rows(), cube.cols());
    }
    auto truth_for = [&](std::size_t k, std::size_t row, std::size_t col,
                         const std::optional<std::vector<double>>& ref) -> std::optional<Spectrum> {
        if (!truths.empty()) return Spectrum(reflectance_of(truths[k], row, col), Unit::Reflectance);
        if (ref) return Spectrum(*ref, Unit::Reflectance);
        return std::nullopt;
    };

    if (roi) {
        for (const auto& r : roi->regions) {
            RegionPixels rp{r.name, std::nullopt, {}};
            if (r.reference) {
                const auto table = io::read_spectrum_csv(*r.reference, Unit::Reflectance);
                io::require_same_grid(grid, table.grid, "reference " + r.reference->string());
                rp.reference = std::vector<double>(table.spectrum.values().begin(), table.spectrum.values().end());
            }
            regions.push_back(std::move(rp));
        }
    }

    if (m == TrainMode::Supervised) {
        require(roi.has_value(), ErrorKind::Config, "supervised training needs --roi");
        for (std::size_t k = 0; k < cubes.size(); ++k)
            for (std::size_t ri = 0; ri < roi->regions.size(); ++ri)
                for (const auto& [row, col] : roi->regions[ri].pixels) {
                    auto truth = truth_for(k, row, col, regions[ri].reference);
                    require(truth.has_value(), ErrorKind::InvalidDataset,
                            "region '" + roi->regions[ri].name +
                                "' has no reference spectrum and no --truth cube was given");
                    regions[ri].sample_index.push_back(samples.size());
                    samples.emplace_back(row, col, cubes[k].spectrum(row, col), std::move(truth));
                }
    } else {
        std::size_t total = 0;
        for (const auto& cube : cubes) total += cube.pixel_count();
        std::size_t count = s.sample_count.value_or(static_cast<std::size_t>(
            std::max<long long>(2, std::llround(s.sample_fraction * static_cast<double>(total)))));
        require(count <= total, ErrorKind::InvalidDataset,
                "sample_count " + std::to_string(count) + " exceeds the " + std::to_string(total) + " available pixels");
        std::vector<std::size_t> order(total);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(s.train.seed ^ 0x2545f4914f6cdd1dULL);
        for (std::size_t i = 0; i < count; ++i) std::swap(order[i], order[i + rng() % (total - i)]);
        order.resize(count);
        for (std::size_t g : order) {
            std::size_t k = 0, p = g;
            while (p >= cubes[k].pixel_count()) p -= cubes[k++].pixel_count();
            const std::size_t row = p / cubes[k].cols(), col = p % cubes[k].cols();
            samples.emplace_back(row, col, cubes[k].spectrum(row, col), truth_for(k, row, col, std::nullopt));
        }
        // ROI pixels are kept apart from training and only used for the spectra report.
        if (roi) {
            std::vector<PixelSample> extra;
            for (std::size_t ri = 0; ri < roi->regions.size(); ++ri)
                for (const auto& [row, col] : roi->regions[ri].pixels) {
                    regions[ri].sample_index.push_back(samples.size() + extra.size());
                    extra.emplace_back(row, col, cubes.front().spectrum(row, col),
                                       truth_for(0, row, col, regions[ri].reference));
                }
            samples.insert(samples.end(), extra.begin(), extra.end());
        }
    }

    const std::size_t trainable = (m == TrainMode::Unsupervised && roi) ? samples.size() - [&] {
        std::size_t n = 0;
        for (const auto& r : regions) n += r.sample_index.size();
        return n;
    }() : samples.size();
    const std::span<const PixelSample> pool(samples.data(), trainable);
    require(pool.size() >= 3, ErrorKind::InvalidDataset, "at least 3 pixels are needed to split a dataset");

    const int threads = resolve_threads(a.threads);
    const EnsembleResult result = ensemble(s.train, pool, norm, s.ensemble, s.reshuffle, threads);

    const fs::path dir(a.out);
    ensure_dir(dir);
    const std::vector<double> wl(grid.nm().begin(), grid.nm().end());
    for (std::size_t k = 0; k < result.runs.size(); ++k) {
        const TrainRun& run = result.runs[k];
        char name[32];
        std::snprintf(name, sizeof name, "run_%03llu",
                      static_cast<unsigned long long>(run.config.seed - s.train.seed));
        const fs::path rd = dir / name;
        ensure_dir(rd);
        io::write_model(rd / "model.dinsat", io::ModelArtifact{run.model, run.config.solver, run.norm, wl});
        write_history(rd / "history.csv", run);
        write_split(rd / "split.csv", run, pool);
        write_run_summary(rd / "run.txt", run, pool);
        if (!regions.empty()) write_roi_spectra(rd / "roi_spectra.csv", run, samples, regions, grid);
    }
    const TrainRun& first = result.runs.front();
    io::write_model(dir / "model.dinsat", io::ModelArtifact{first.model, first.config.solver, first.norm, wl});
    {
        auto out = open_out(dir / "ensemble.csv");
        out << "band,wavelength_nm,transmittance_mean,transmittance_std,rho_mean,rho_std\n";
        for (std::size_t b = 0; b < nb; ++b)
            out << b << "," << format_double(grid[b]) << "," << format_double(result.transmittance_mean[b]) << ","
                << format_double(result.transmittance_std[b]) << "," << format_double(result.rho_mean[b]) << ","
                << format_double(result.rho_std[b]) << "\n";
    }
    if (!result.failures.empty()) {
        auto out = open_out(dir / "failures.csv");
        out << "seed,message\n";
        for (const auto& f : result.failures) {
            std::string msg = f.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            out << f.seed << "," << msg << "\n";
            warn(ctx, "run with seed " + std::to_string(f.seed) + " failed: " + f.message);
        }
    }
    ctx.out << "trained " << result.runs.size() << " of " << s.ensemble << " " << to_string(m) << " "
            << to_string(s.train.model) << " model(s) on " << pool.size() << " pixels; output in " << dir.string()
            << "\n";
}

// ---------------------------------------------------------------- correct

struct CorrectArgs {
    std::string cube;
    std::string model;
    std::string out;
    bool renormalize = false;
    int threads = 0;
};

SceneNormalization norm_for(Context& ctx, const io::ModelArtifact& art, const HyperCube& cube, bool renormalize) {
    if (art.norm && !renormalize) {
        require(art.norm->bands() == cube.bands(), ErrorKind::Shape, "model normalization band count differs from the cube");
        return *art.norm;
    }
    if (!art.norm) warn(ctx, "model has no stored normalization; estimating dark offset and scale from the cube");
    return estimate_normalization(cube);
}

void cmd_correct(Context& ctx, const CorrectArgs& a) {
    const HyperCube cube = load_cube(ctx, a.cube);
    const io::ModelArtifact art = io::read_model(a.model);
    require(art.model.bands() == cube.bands(), ErrorKind::Shape,
            "model has " + std::to_string(art.model.bands()) + " bands, cube has " + std::to_string(cube.bands()));
    const SceneNormalization norm = norm_for(ctx, art, cube, a.renormalize);

    const std::size_t nb = cube.bands(), rows = cube.rows(), cols = cube.cols();
    std::vector<double> rho(cube.data().size());
    std::vector<double> quality(cube.data().size());
    const int threads = std::clamp(resolve_threads(a.threads), 1, static_cast<int>(rows));
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (std::size_t r = next.fetch_add(1); r < rows; r = next.fetch_add(1)) {
            try {
                const auto line = cube.data().subspan(r * cols * nb, cols * nb);
                const auto res = correct_batch(art.model, norm, line, art.solver);
                std::copy(res.rho.begin(), res.rho.end(), rho.begin() + static_cast<std::ptrdiff_t>(r * cols * nb));
                for (std::size_t i = 0; i < res.quality.size(); ++i) quality[r * cols * nb + i] = res.quality[i];
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    const fs::path dir(a.out);
    ensure_dir(dir);
    const std::vector<double> wl(cube.grid().nm().begin(), cube.grid().nm().end());
    io::write_envi_image(dir / "reflectance.hdr", dir / "reflectance.img", rows, cols, nb, rho, Interleave::BSQ,
                         io::kEnviFloat32, wl, "corrected surface reflectance");
    io::write_envi_image(dir / "quality.hdr", dir / "quality.img", rows, cols, nb, quality, Interleave::BSQ,
                         io::kEnviUint8, wl, "quality flags: 1 floored transmittance, 2 reflectance outside [0,1]");
    std::size_t flagged = 0;
    for (double q : quality) flagged += q != 0;
    ctx.out << "corrected " << rows * cols << " pixels; " << flagged << " flagged band values; output in "
            << dir.string() << "\n";
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string spectrum;
    std::string model;
    std::string out;
};

void cmd_simulate(Context& ctx, const SimulateArgs& a) {
    const io::ModelArtifact art = io::read_model(a.model);
    const auto table = io::read_spectrum_csv(a.spectrum, Unit::Reflectance);
    require(table.spectrum.size() == art.model.bands(), ErrorKind::Shape,
            "spectrum has " + std::to_string(table.spectrum.size()) + " bands, model has " +
                std::to_string(art.model.bands()));
    if (art.wavelengths) io::require_same_grid(WavelengthGrid(*art.wavelengths), table.grid, "spectrum " + a.spectrum);
    std::optional<SceneNormalization> norm = art.norm;
    if (!norm) {
        warn(ctx, "model has no stored normalization; using dark offset 0 and illumination 1");
        norm.emplace(std::vector<double>(art.model.bands(), 0.0), 1.0);
    }
    const Spectrum l4 = simulate_at_sensor(art.model, *norm, table.spectrum, art.solver);
    io::write_spectrum_csv(a.out, table.grid, l4, "radiance");
    ctx.out << "wrote simulated radiance to " << a.out << "\n";
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string model;
    std::string cube;
    std::string roi;
    std::string library;
    std::string truth;
    std::string out;
    bool renormalize = false;
};

void cmd_eval(Context& ctx, const EvalArgs& a) {
    const io::ModelArtifact art = io::read_model(a.model);
    const HyperCube cube = load_cube(ctx, a.cube);
    require(art.model.bands() == cube.bands(), ErrorKind::Shape, "model and cube band counts differ");
    const SceneNormalization norm = norm_for(ctx, art, cube, a.renormalize);
    const io::RoiFile roi = io::read_roi(a.roi);
    roi.validate_bounds(cube.rows(), cube.cols());
    std::optional<HyperCube> truth;
    if (!a.truth.empty()) {
        truth = load_cube(ctx, a.truth);
        require(truth->rows() == cube.rows() && truth->cols() == cube.cols() && truth->bands() == cube.bands(),
                ErrorKind::InvalidDataset, "truth cube does not match the radiance cube");
    }
    std::optional<Spectrum> library;
    if (!a.library.empty()) {
        const auto t = io::read_spectrum_csv(a.library, Unit::Reflectance);
        io::require_same_grid(cube.grid(), t.grid, "library " + a.library);
        library = t.spectrum;
    }

    std::ostringstream csv;
    csv << "region,pixels,reflectance_pmse,radiance_pmse\n";
    for (const auto& r : roi.regions) {
        std::optional<std::vector<double>> ref;
        if (r.reference) {
            const auto t = io::read_spectrum_csv(*r.reference, Unit::Reflectance);
            io::require_same_grid(cube.grid(), t.grid, "reference " + r.reference->string());
            ref = std::vector<double>(t.spectrum.values().begin(), t.spectrum.values().end());
        }
        std::vector<PixelSample> samples;
        for (const auto& [row, col] : r.pixels) {
            std::optional<Spectrum> t;
            if (truth) t = Spectrum(reflectance_of(*truth, row, col), Unit::Reflectance);
            else if (ref) t = Spectrum(*ref, Unit::Reflectance);
            samples.emplace_back(row, col, cube.spectrum(row, col), std::move(t));
        }
        std::optional<Spectrum> lib = library;
        if (!lib && ref) lib = Spectrum(*ref, Unit::Reflectance);
        const EvalReport rep = evaluate(art.model, norm, samples, lib ? &*lib : nullptr, art.solver);
        for (const auto& w : rep.warnings) warn(ctx, "region '" + r.name + "': " + w);
        csv << r.name << "," << samples.size() << "," << (rep.reflectance_pmse ? format_double(*rep.reflectance_pmse) : "")
            << "," << (rep.radiance_pmse ? format_double(*rep.radiance_pmse) : "") << "\n";
    }
    if (a.out.empty() || a.out == "-") {
        ctx.out << csv.str();
    } else {
        auto out = open_out(a.out);
        out << csv.str();
    }
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string runs;
    std::string out;
};

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, std::string& header) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    if (!std::getline(in, header)) fail(ErrorKind::Parse, path.string() + ": empty file");
    while (std::getline(in, line)) {
        if (io::detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        for (auto c : io::detail::split(line, ',')) cells.emplace_back(c);
        rows.push_back(std::move(cells));
    }
    return rows;
}

void cmd_report(Context& ctx, const ReportArgs& a) {
    const fs::path runs(a.runs);
    require(fs::is_directory(runs), ErrorKind::Io, "runs directory " + runs.string() + " does not exist");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(runs))
        if (e.is_directory() && e.path().filename().string().starts_with("run_") &&
            fs::exists(e.path() / "model.dinsat"))
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    require(!dirs.empty(), ErrorKind::InvalidDataset, "no run_* directories with model.dinsat under " + runs.string());

    const fs::path out(a.out);
    ensure_dir(out);

    std::vector<std::vector<double>> trans;
    std::optional<std::vector<double>> wl;
    auto curves = open_out(out / "loss_curves.csv");
    curves << "run,epoch,train_loss,val_loss,monitor,best_so_far\n";
    auto spectra = open_out(out / "roi_spectra.csv");
    spectra << "run,region,band,wavelength_nm,corrected,reference\n";
    for (const auto& d : dirs) {
        const std::string run = d.filename().string();
        const auto art = io::read_model(d / "model.dinsat");
        if (!trans.empty())
            require(art.model.bands() == trans.front().size(), ErrorKind::Shape, run + ": band count differs between runs");
        const auto t = transmittance_spectrum(art.model, art.solver);
        trans.emplace_back(t.values().begin(), t.values().end());
        if (!wl && art.wavelengths) wl = art.wavelengths;

        if (fs::exists(d / "history.csv")) {
            std::string header;
            for (const auto& r : read_csv_rows(d / "history.csv", header)) {
                require(r.size() == 8, ErrorKind::Parse, run + "/history.csv: expected 8 columns");
                curves << run << "," << r[0] << "," << r[1] << "," << r[5] << "," << r[6] << "," << r[7] << "\n";
            }
        }
        if (fs::exists(d / "roi_spectra.csv")) {
            std::string header;
            for (const auto& r : read_csv_rows(d / "roi_spectra.csv", header)) {
                require(r.size() == 5, ErrorKind::Parse, run + "/roi_spectra.csv: expected 5 columns");
                spectra << run << "," << r[0] << "," << r[1] << "," << r[2] << "," << r[3] << "," << r[4] << "\n";
            }
        }
    }

    const std::size_t nb = trans.front().size();
    const auto n = static_cast<double>(trans.size());
    auto tout = open_out(out / "transmittance.csv");
    tout << "band,wavelength_nm,mean,std,runs\n";
    for (std::size_t b = 0; b < nb; ++b) {
        double mean = 0.0, var = 0.0;
        for (const auto& t : trans) mean += t[b];
        mean /= n;
        for (const auto& t : trans) var += (t[b] - mean) * (t[b] - mean);
        tout << b << "," << (wl ? format_double((*wl)[b]) : std::string()) << "," << format_double(mean) << ","
             << format_double(std::sqrt(var / n)) << "," << trans.size() << "\n";
    }
    ctx.out << "report for " << trans.size() << " run(s) written to " << out.string() << "\n";
}

constexpr const char* kReportSchemas =
    "Output schemas:\n"
    "  transmittance.csv  band,wavelength_nm,mean,std,runs\n"
    "  loss_curves.csv    run,epoch,train_loss,val_loss,monitor,best_so_far\n"
    "  roi_spectra.csv    run,region,band,wavelength_nm,corrected,reference\n";

constexpr const char* kTrainLayout =
    "Output layout:\n"
    "  model.dinsat       model of the first run (seed)\n"
    "  ensemble.csv       band,wavelength_nm,transmittance_mean,transmittance_std,rho_mean,rho_std\n"
    "  run_NNN/           model.dinsat, history.csv, split.csv, run.txt, roi_spectra.csv\n"
    "  failures.csv       seed,message (only when runs failed)\n"
    "Parallelism: --threads, else DINSAT_THREADS, else hardware concurrency.\n";

constexpr const char* kCubeNote =
    "Cubes are ENVI header/data pairs (data types 1, 2, 4, 5, 12; bsq, bil, bip).\n"
    "Unsigned 16-bit data is scaled by the header's data gain/offset values when present, else used raw.\n";

}  // namespace

int run_cli(int argc, const char* const* argv) {
    Context ctx{std::cout, std::cerr};
    CLI::App app{"dinsat: tunable dissipative ODE model of atmospheric transmission"};
    app.require_subcommand(1);
    app.footer(std::string("Exit codes: 0 ok, 2 config, 3 data, 4 numeric, 5 internal.\n") + kCubeNote);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with known atmosphere and reflectance");
    synth->add_option("--spec", sa.spec, "key = value scene description (defaults when omitted)")->check(CLI::ExistingFile);
    synth->add_option("--seed", sa.seed, "Random seed");
    synth->add_option("--out", sa.out, "Output directory")->required();
    synth->footer("Writes scene.hdr/.img, rho.hdr/.img (truth reflectance), truth.csv\n"
                  "(wavelength_nm,alpha,transmittance,dark_offset,illumination), roi.csv and refs/*.csv.");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Fit transmission models");
    train->add_option("--cube", ta.cubes, "ENVI header of a radiance cube (repeatable)")->required()->check(CLI::ExistingFile);
    train->add_option("--truth", ta.truths, "ENVI header of a per-pixel truth reflectance cube, one per --cube")
        ->check(CLI::ExistingFile);
    train->add_option("--mode", ta.mode, "supervised|unsupervised (overrides the config)")
        ->check(CLI::IsMember({"supervised", "unsupervised"}));
    train->add_option("--roi", ta.roi, "ROI CSV: region_name,row,col[,reference_csv_path]")->check(CLI::ExistingFile);
    train->add_option("--config", ta.config, "key = value training config")->check(CLI::ExistingFile);
    train->add_option("--ensemble", ta.ensemble, "Number of runs (overrides the config)")->check(CLI::PositiveNumber);
    train->add_option("--seed", ta.seed, "Base seed (overrides the config)")->check(CLI::NonNegativeNumber);
    train->add_option("--threads", ta.threads, "Worker threads")->check(CLI::PositiveNumber);
    train->add_option("--out", ta.out, "Output directory")->required();
    train->footer(kTrainLayout);

    CorrectArgs ca;
    auto* correct = app.add_subcommand("correct", "Convert a radiance cube to surface reflectance");
    correct->add_option("--cube", ca.cube, "ENVI header of the radiance cube")->required()->check(CLI::ExistingFile);
    correct->add_option("--model", ca.model, "Model artifact")->required()->check(CLI::ExistingFile);
    correct->add_option("--out", ca.out, "Output directory")->required();
    correct->add_flag("--renormalize", ca.renormalize, "Estimate dark offset and scale from this cube");
    correct->add_option("--threads", ca.threads, "Worker threads")->check(CLI::PositiveNumber);
    correct->footer("Writes reflectance.hdr/.img (float32 BSQ) and quality.hdr/.img (uint8 BSQ;\n"
                    "1 = transmittance floored, 2 = reflectance outside [0,1]).");

    SimulateArgs sm;
    auto* simulate = app.add_subcommand("simulate", "Predict at-sensor radiance for a reflectance spectrum");
    simulate->add_option("--spectrum", sm.spectrum, "Reflectance CSV (wavelength_nm,value)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--model", sm.model, "Model artifact")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sm.out, "Output CSV (wavelength_nm,radiance)")->required();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Percent MSE of corrected reflectance and simulated radiance per ROI");
    eval->add_option("--model", ea.model, "Model artifact")->required()->check(CLI::ExistingFile);
    eval->add_option("--cube", ea.cube, "ENVI header of the radiance cube")->required()->check(CLI::ExistingFile);
    eval->add_option("--roi", ea.roi, "ROI CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--library", ea.library, "Reflectance CSV used for the radiance metric (else the ROI reference)")
        ->check(CLI::ExistingFile);
    eval->add_option("--truth", ea.truth, "Per-pixel truth reflectance cube (else the ROI reference)")
        ->check(CLI::ExistingFile);
    eval->add_option("--out", ea.out, "Output CSV (default stdout)");
    eval->add_flag("--renormalize", ea.renormalize, "Estimate dark offset and scale from this cube");
    eval->footer("Columns: region,pixels,reflectance_pmse,radiance_pmse (empty when a metric is omitted).");

    ReportArgs ra;
    auto* report = app.add_subcommand("report", "Plot-ready CSVs from a train output directory");
    report->add_option("--runs", ra.runs, "Directory written by train")->required();
    report->add_option("--out", ra.out, "Output directory")->required();
    report->footer(kReportSchemas);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, ctx.out, ctx.err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, ctx.out, ctx.err);
    } catch (const CLI::ParseError& e) {
        ctx.err << error_line("config", "usage", e.what()) << "\n";
        return kExitConfig;
    }

    try {
        if (*synth) cmd_synth(ctx, sa);
        else if (*train) cmd_train(ctx, ta);
        else if (*correct) cmd_correct(ctx, ca);
        else if (*simulate) cmd_simulate(ctx, sm);
        else if (*eval) cmd_eval(ctx, ea);
        else if (*report) cmd_report(ctx, ra);
        return kExitOk;
    } catch (const Error& e) {
        ctx.err << error_line(category(e.kind()), to_string(e.kind()), e.what()) << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        ctx.err << error_line("data", "io", e.what()) << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        ctx.err << error_line("internal", "unexpected", e.what()) << "\n";
        return kExitInternal;
    }
}

}  // namespace dinsat::cli
