#include "dinsat/io/tables.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "dinsat/error.hpp"
#include "text.hpp"

namespace dinsat::io {

namespace fs = std::filesystem;

SpectrumTable read_spectrum_csv(const fs::path& path, Unit unit) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open spectrum CSV " + path.string());
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> wl, val;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (header) {
            header = false;
            // Header is optional when the first row is numeric.
            double probe;
            const auto cells = detail::split(t, ',');
            if (cells.size() != 2 || !detail::try_parse_double(cells[0], probe)) continue;
        }
        const auto cells = detail::split(t, ',');
        if (cells.size() != 2)
            fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected 2 columns, found " +
                                       std::to_string(cells.size()));
        double w = 0, v = 0;
        if (!detail::try_parse_double(cells[0], w) || !detail::try_parse_double(cells[1], v) ||
            !std::isfinite(w) || !std::isfinite(v))
            fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": malformed row '" +
                                       std::string(t) + "'");
        wl.push_back(w);
        val.push_back(v);
    }
    for (std::size_t i = 1; i < wl.size(); ++i)
        if (!(wl[i] > wl[i - 1]))
            fail(ErrorKind::Parse, path.string() + ": wavelengths are not strictly increasing at row " +
                                       std::to_string(i + 1));
    if (wl.size() < 2) fail(ErrorKind::Parse, path.string() + ": a spectrum needs at least 2 rows");
    return {WavelengthGrid(std::move(wl)), Spectrum(std::move(val), unit)};
}

void write_spectrum_csv(const fs::path& path, const WavelengthGrid& grid, const Spectrum& spectrum,
                        std::string_view value_column) {
    require(grid.size() == spectrum.size(), ErrorKind::Shape, "write_spectrum_csv: grid and spectrum lengths differ");
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << "wavelength_nm," << value_column << "\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        out << detail::format_double(grid[i]) << "," << detail::format_double(spectrum[i]) << "\n";
}

void require_same_grid(const WavelengthGrid& expected, const WavelengthGrid& actual, const std::string& what) {
    if (expected.size() != actual.size())
        fail(ErrorKind::InvalidDataset, what + ": " + std::to_string(actual.size()) + " bands, expected " +
                                            std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (std::fabs(expected[i] - actual[i]) > 1e-6 * std::fabs(expected[i]))
            fail(ErrorKind::InvalidDataset, what + ": wavelength of band " + std::to_string(i) +
                                                " does not match the cube grid");
}

void RoiFile::validate_bounds(std::size_t rows, std::size_t cols) const {
    for (const auto& r : regions)
        for (const auto& [row, col] : r.pixels)
            if (row >= rows || col >= cols)
                fail(ErrorKind::InvalidDataset, "ROI '" + r.name + "': pixel (" + std::to_string(row) + "," +
                                                    std::to_string(col) + ") outside " + std::to_string(rows) +
                                                    "x" + std::to_string(cols) + " cube");
}

std::size_t RoiFile::pixel_count() const {
    std::size_t n = 0;
    for (const auto& r : regions) n += r.pixels.size();
    return n;
}

RoiFile read_roi(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open ROI file " + path.string());
    RoiFile roi;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (lineno == 1 && t.starts_with("region")) continue;
        const auto cells = detail::split(t, ',');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() < 3 || cells.size() > 4)
            fail(ErrorKind::Parse, where + ": expected region_name,row,col[,reference_csv_path]");
        if (cells[0].empty()) fail(ErrorKind::Parse, where + ": empty region name");
        const long long r = detail::parse_int(cells[1], where + " row");
        const long long c = detail::parse_int(cells[2], where + " col");
        if (r < 0 || c < 0) fail(ErrorKind::Parse, where + ": negative pixel coordinate");

        const std::string name(cells[0]);
        auto [it, inserted] = index.try_emplace(name, roi.regions.size());
        if (inserted) roi.regions.push_back({name, {}, std::nullopt});
        RoiRegion& region = roi.regions[it->second];
        region.pixels.emplace_back(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (cells.size() == 4 && !cells[3].empty()) {
            fs::path ref{std::string(cells[3])};
            if (ref.is_relative()) ref = path.parent_path() / ref;
            if (region.reference && *region.reference != ref)
                fail(ErrorKind::Parse, where + ": region '" + name + "' names two different reference spectra");
            region.reference = ref;
        }
    }
    return roi;
}

void write_roi(const fs::path& path, const RoiFile& roi) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << "region_name,row,col,reference_csv_path\n";
    for (const auto& r : roi.regions) {
        std::string ref;
        if (r.reference) {
            fs::path p = *r.reference;
            if (p.is_absolute()) p = p.lexically_relative(path.parent_path().empty() ? fs::current_path() : fs::absolute(path.parent_path()));
            ref = p.generic_string();
        }
        for (const auto& [row, col] : r.pixels)
            out << r.name << "," << row << "," << col << (ref.empty() ? "" : "," + ref) << "\n";
    }
}

}  // namespace dinsat::io
