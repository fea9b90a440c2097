#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dinsat/core/types.hpp"

namespace dinsat::io {

/// Two-column spectrum CSV: header line, then `wavelength_nm,value` rows.
struct SpectrumTable {
    WavelengthGrid grid;
    Spectrum spectrum;
};

SpectrumTable read_spectrum_csv(const std::filesystem::path& path, Unit unit);
void write_spectrum_csv(const std::filesystem::path& path, const WavelengthGrid& grid, const Spectrum& spectrum,
                        std::string_view value_column = "value");

/// Checks that a spectrum read from CSV sits on the cube's grid (same band
/// count, wavelengths equal to 1e-6 relative).
void require_same_grid(const WavelengthGrid& expected, const WavelengthGrid& actual, const std::string& what);

/// Regions of interest: CSV rows `region_name,row,col[,reference_csv_path]`.
/// Rows sharing a name form one region. A header line starting with
/// "region" is skipped. Relative reference paths resolve against the ROI
/// file's directory.
struct RoiRegion {
    std::string name;
    std::vector<std::pair<std::size_t, std::size_t>> pixels;
    std::optional<std::filesystem::path> reference;
};

struct RoiFile {
    std::vector<RoiRegion> regions;

    /// Throws if any pixel lies outside a rows x cols cube.
    void validate_bounds(std::size_t rows, std::size_t cols) const;
    std::size_t pixel_count() const;
};

RoiFile read_roi(const std::filesystem::path& path);
void write_roi(const std::filesystem::path& path, const RoiFile& roi);

}  // namespace dinsat::io
