#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dinsat/core/types.hpp"

namespace dinsat::io {

/// ENVI data type codes handled here.
enum EnviType : int {
    kEnviUint8 = 1,
    kEnviInt16 = 2,
    kEnviFloat32 = 4,
    kEnviFloat64 = 5,
    kEnviUint16 = 12,
};

std::size_t envi_type_size(int data_type);

struct EnviHeader {
    std::size_t samples = 0;  // columns
    std::size_t lines = 0;    // rows
    std::size_t bands = 0;
    Interleave interleave = Interleave::BSQ;
    int data_type = kEnviFloat32;
    int byte_order = 0;  // 0 little endian, 1 big endian
    std::size_t header_offset = 0;
    std::optional<std::vector<double>> wavelengths;  // nanometers
    std::optional<std::vector<double>> gain;         // "data gain values"
    std::optional<std::vector<double>> offset;       // "data offset values"
    std::string description;

    /// Parses header text. Wavelengths given in micrometers are converted
    /// to nanometers.
    static EnviHeader parse(std::string_view text);
    std::string to_string() const;
    std::size_t expected_data_bytes() const;
};

/// Raw image: values in pixel-major (BIP) order, no range checks.
struct EnviImage {
    EnviHeader header;
    std::vector<double> bip;
};

EnviHeader read_envi_header(const std::filesystem::path& header_path);

/// Data file next to a header: `name.hdr` -> `name` / `name.img` / `name.dat`
/// / `name.bsq|bil|bip`, whichever exists.
std::filesystem::path envi_data_path_for(const std::filesystem::path& header_path);

EnviImage read_envi_image(const std::filesystem::path& header_path, const std::filesystem::path& data_path);

/// Reads a radiance cube in canonical layout. Unsigned 16-bit data is scaled
/// by the header gain/offset when present. Without a wavelength list the
/// grid is a linear ramp over [450, 2500] nm and a warning is appended.
HyperCube read_envi(const std::filesystem::path& header_path, const std::filesystem::path& data_path,
                    std::vector<std::string>* warnings = nullptr);
HyperCube read_envi(const std::filesystem::path& header_path, std::vector<std::string>* warnings = nullptr);

/// Writes `bip` (rows x cols x bands, pixel-major) with the given interleave
/// and type. Header byte order is the host's.
void write_envi_image(const std::filesystem::path& header_path, const std::filesystem::path& data_path,
                      std::size_t rows, std::size_t cols, std::size_t bands, std::span<const double> bip,
                      Interleave interleave, int data_type,
                      const std::optional<std::vector<double>>& wavelengths, std::string_view description = {});

void write_envi(const HyperCube& cube, const std::filesystem::path& header_path,
                const std::filesystem::path& data_path, Interleave interleave = Interleave::BSQ,
                int data_type = kEnviFloat32);

}  // namespace dinsat::io
