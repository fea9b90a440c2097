#include "dinsat/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dinsat/error.hpp"

namespace dinsat {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return "config";
        case ErrorKind::InvalidDataset: return "invalid-dataset";
        case ErrorKind::EmptyInput: return "empty-input";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::CorruptFile: return "corrupt-file";
        case ErrorKind::UnsupportedFormat: return "unsupported-format";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

std::string_view to_string(Unit u) noexcept {
    switch (u) {
        case Unit::Radiance: return "radiance";
        case Unit::Reflectance: return "reflectance";
        case Unit::Transmittance: return "transmittance";
        case Unit::Unitless: return "unitless";
    }
    return "unitless";
}

std::string_view to_string(Interleave il) noexcept {
    switch (il) {
        case Interleave::BSQ: return "bsq";
        case Interleave::BIL: return "bil";
        case Interleave::BIP: return "bip";
    }
    return "bsq";
}

WavelengthGrid::WavelengthGrid(std::vector<double> wavelengths_nm) : nm_(std::move(wavelengths_nm)) {
    require(nm_.size() >= 2, ErrorKind::Config, "wavelength grid needs at least 2 bands");
    for (std::size_t i = 0; i < nm_.size(); ++i) {
        require(std::isfinite(nm_[i]) && nm_[i] > 0, ErrorKind::Config,
                "wavelength grid values must be positive and finite");
        if (i > 0)
            require(nm_[i] > nm_[i - 1], ErrorKind::Config,
                    "wavelength grid must be strictly increasing (band " + std::to_string(i) + ")");
    }
}

WavelengthGrid WavelengthGrid::linear(double first_nm, double last_nm, std::size_t bands) {
    require(bands >= 2, ErrorKind::Config, "wavelength grid needs at least 2 bands");
    std::vector<double> nm(bands);
    const double step = (last_nm - first_nm) / static_cast<double>(bands - 1);
    for (std::size_t i = 0; i < bands; ++i) nm[i] = first_nm + step * static_cast<double>(i);
    return WavelengthGrid(std::move(nm));
}

std::size_t WavelengthGrid::nearest_band(double nm) const {
    auto it = std::lower_bound(nm_.begin(), nm_.end(), nm);
    if (it == nm_.begin()) return 0;
    if (it == nm_.end()) return nm_.size() - 1;
    auto prev = std::prev(it);
    return static_cast<std::size_t>((nm - *prev <= *it - nm ? prev : it) - nm_.begin());
}

Spectrum::Spectrum(std::vector<double> values, Unit unit) : values_(std::move(values)), unit_(unit) {
    for (double v : values_)
        require(std::isfinite(v), ErrorKind::Numeric, "spectrum contains a non-finite value");
}

Spectrum Spectrum::constant(std::size_t bands, double value, Unit unit) {
    return Spectrum(std::vector<double>(bands, value), unit);
}

HyperCube::HyperCube(std::size_t rows, std::size_t cols, WavelengthGrid grid,
                     std::vector<double> bip_data, Interleave layout)
    : rows_(rows), cols_(cols), grid_(std::move(grid)), data_(std::move(bip_data)), layout_(layout) {
    require(rows_ > 0 && cols_ > 0, ErrorKind::Shape, "cube dimensions must be positive");
    require(data_.size() == rows_ * cols_ * grid_.size(), ErrorKind::Shape,
            "cube data length " + std::to_string(data_.size()) + " != rows*cols*bands " +
                std::to_string(rows_ * cols_ * grid_.size()));
    for (double v : data_)
        require(std::isfinite(v) && v >= 0, ErrorKind::Numeric,
                "cube values must be finite and nonnegative");
}

Spectrum HyperCube::spectrum(std::size_t row, std::size_t col, Unit unit) const {
    require(row < rows_ && col < cols_, ErrorKind::Shape,
            "pixel (" + std::to_string(row) + "," + std::to_string(col) + ") outside cube");
    auto px = pixel(row, col);
    return Spectrum(std::vector<double>(px.begin(), px.end()), unit);
}

PixelSample::PixelSample(std::size_t r, std::size_t c, Spectrum radiance, std::optional<Spectrum> truth)
    : row(r), col(c), l4(std::move(radiance)), truth_rho(std::move(truth)) {
    if (truth_rho)
        require(truth_rho->size() == l4.size(), ErrorKind::Shape,
                "truth reflectance length differs from radiance length");
}

DatasetSplit split_dataset(std::size_t count, SplitFractions f, std::uint64_t seed) {
    require(count >= 3, ErrorKind::Config, "split_dataset needs at least 3 samples");
    require(f.train >= 0 && f.val >= 0 && f.test >= 0, ErrorKind::Config,
            "split fractions must be nonnegative");
    require(f.train + f.val + f.test <= 1.0 + 1e-9, ErrorKind::Config, "split fractions sum above 1");

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

    const auto n = static_cast<double>(count);
    std::size_t n_train = static_cast<std::size_t>(std::llround(f.train * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(f.val * n));
    n_train = std::min(n_train, count);
    n_val = std::min(n_val, count - n_train);
    std::size_t n_test = 0;
    if (f.test > 0) n_test = count - n_train - n_val;

    auto require_nonempty = [](double frac, std::size_t size, const char* name) {
        if (frac > 0 && size == 0)
            fail(ErrorKind::Config, std::string(name) + " split is empty for a positive fraction");
    };
    require_nonempty(f.train, n_train, "train");
    require_nonempty(f.val, n_val, "validation");
    require_nonempty(f.test, n_test, "test");

    DatasetSplit split;
    auto it = order.begin();
    split.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    split.val.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    split.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
    return split;
}

Spectrum roi_mean_spectrum(std::span<const PixelSample> samples, SampleField field) {
    require(!samples.empty(), ErrorKind::EmptyInput, "roi_mean_spectrum on an empty sample list");
    auto pick = [field](const PixelSample& s) -> const Spectrum& {
        if (field == SampleField::Radiance) return s.l4;
        require(s.truth_rho.has_value(), ErrorKind::InvalidDataset,
                "roi_mean_spectrum: sample without truth reflectance");
        return *s.truth_rho;
    };
    const Spectrum& first = pick(samples.front());
    std::vector<double> acc(first.size(), 0.0);
    for (const auto& s : samples) {
        const Spectrum& sp = pick(s);
        require(sp.size() == acc.size(), ErrorKind::Shape, "roi_mean_spectrum: spectra differ in length");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sp[i];
    }
    const auto n = static_cast<double>(samples.size());
    for (double& v : acc) v /= n;
    return Spectrum(std::move(acc), first.unit());
}

double percent_mse(std::span<const double> predicted, std::span<const double> reference) {
    require(predicted.size() == reference.size(), ErrorKind::Shape,
            "percent_mse: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                std::to_string(reference.size()) + ")");
    require(!predicted.empty(), ErrorKind::EmptyInput, "percent_mse on empty spectra");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - reference[i];
        acc += d * d;
    }
    return 100.0 * acc / static_cast<double>(predicted.size());
}

double percent_mse(const Spectrum& predicted, const Spectrum& reference) {
    return percent_mse(predicted.values(), reference.values());
}

}  // namespace dinsat
