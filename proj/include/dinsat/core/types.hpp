#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dinsat {

enum class Unit { Radiance, Reflectance, Transmittance, Unitless };

std::string_view to_string(Unit u) noexcept;

/// Band-center wavelengths in nanometers. Strictly increasing, positive,
/// at least two bands.
class WavelengthGrid {
public:
    explicit WavelengthGrid(std::vector<double> wavelengths_nm);

    /// Evenly spaced grid over [first_nm, last_nm].
    static WavelengthGrid linear(double first_nm, double last_nm, std::size_t bands);

    std::size_t size() const noexcept { return nm_.size(); }
    std::span<const double> nm() const noexcept { return nm_; }
    double operator[](std::size_t i) const { return nm_[i]; }

    /// Index of the band whose center is nearest to `nm`.
    std::size_t nearest_band(double nm) const;

    friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

private:
    std::vector<double> nm_;
};

/// Immutable unit-tagged per-band vector.
class Spectrum {
public:
    Spectrum(std::vector<double> values, Unit unit);

    static Spectrum constant(std::size_t bands, double value, Unit unit);

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    Unit unit() const noexcept { return unit_; }

    Spectrum with_unit(Unit u) const { return Spectrum(values_, u); }

    friend bool operator==(const Spectrum&, const Spectrum&) = default;

private:
    std::vector<double> values_;
    Unit unit_;
};

enum class Interleave { BSQ, BIL, BIP };

std::string_view to_string(Interleave il) noexcept;

/// rows x cols x bands radiance volume, stored pixel-major (BIP order).
/// `layout` records the interleave of the file the cube came from.
class HyperCube {
public:
    HyperCube(std::size_t rows, std::size_t cols, WavelengthGrid grid,
              std::vector<double> bip_data, Interleave layout = Interleave::BSQ);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t bands() const noexcept { return grid_.size(); }
    std::size_t pixel_count() const noexcept { return rows_ * cols_; }
    const WavelengthGrid& grid() const noexcept { return grid_; }
    Interleave layout() const noexcept { return layout_; }

    double at(std::size_t row, std::size_t col, std::size_t band) const {
        return data_[(row * cols_ + col) * bands() + band];
    }
    std::span<const double> pixel(std::size_t row, std::size_t col) const {
        return {data_.data() + (row * cols_ + col) * bands(), bands()};
    }
    std::span<const double> data() const noexcept { return data_; }

    Spectrum spectrum(std::size_t row, std::size_t col, Unit unit = Unit::Radiance) const;

    friend bool operator==(const HyperCube&, const HyperCube&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    WavelengthGrid grid_;
    std::vector<double> data_;
    Interleave layout_;
};

struct PixelSample {
    std::size_t row = 0;
    std::size_t col = 0;
    Spectrum l4;
    std::optional<Spectrum> truth_rho;

    PixelSample(std::size_t r, std::size_t c, Spectrum radiance,
                std::optional<Spectrum> truth = std::nullopt);
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;

    friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct SplitFractions {
    double train = 0.24;
    double val = 0.06;
    double test = 0.70;
};

/// Shuffles 0..count-1 with `seed` and cuts it into train/val/test.
/// Train and val get round(fraction * count); test receives the rest when
/// its fraction is positive.
DatasetSplit split_dataset(std::size_t count, SplitFractions fractions, std::uint64_t seed);

enum class SampleField { Radiance, Truth };

/// Per-band arithmetic mean of the selected field over `samples`.
Spectrum roi_mean_spectrum(std::span<const PixelSample> samples, SampleField field);

/// 100 x mean over bands of (predicted - reference)^2.
double percent_mse(const Spectrum& predicted, const Spectrum& reference);
double percent_mse(std::span<const double> predicted, std::span<const double> reference);

}  // namespace dinsat
