#include "dinsat/io/envi.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dinsat/error.hpp"
#include "text.hpp"

namespace dinsat::io {

namespace fs = std::filesystem;
using detail::lower;
using detail::trim;

std::size_t envi_type_size(int data_type) {
    switch (data_type) {
        case kEnviUint8: return 1;
        case kEnviInt16: return 2;
        case kEnviFloat32: return 4;
        case kEnviFloat64: return 8;
        case kEnviUint16: return 2;
        default:
            fail(ErrorKind::UnsupportedFormat, "unsupported ENVI data type " + std::to_string(data_type));
    }
}

namespace {

std::vector<double> parse_list(std::string_view v, std::string_view key) {
    v = trim(v);
    if (v.size() < 2 || v.front() != '{' || v.back() != '}')
        fail(ErrorKind::Parse, "ENVI header: '" + std::string(key) + "' must be a {...} list");
    std::vector<double> out;
    for (auto item : detail::split(v.substr(1, v.size() - 2), ',')) {
        if (item.empty()) continue;
        out.push_back(detail::parse_double(item, "ENVI header " + std::string(key)));
    }
    return out;
}

std::size_t parse_size(std::string_view v, std::string_view key) {
    const long long n = detail::parse_int(v, "ENVI header " + std::string(key));
    if (n < 0) fail(ErrorKind::Parse, "ENVI header: negative " + std::string(key));
    return static_cast<std::size_t>(n);
}

std::string join_list(const std::vector<double>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += detail::format_double(v[i]);
    }
    return s + "}";
}

// Position of (row, col, band) inside a file with the given interleave.
std::size_t file_index(Interleave il, std::size_t rows, std::size_t cols, std::size_t bands, std::size_t r,
                       std::size_t c, std::size_t b) {
    switch (il) {
        case Interleave::BSQ: return (b * rows + r) * cols + c;
        case Interleave::BIL: return (r * bands + b) * cols + c;
        case Interleave::BIP: return (r * cols + c) * bands + b;
    }
    return 0;
}

template <typename T>
T load(const unsigned char* p, bool swap) {
    unsigned char tmp[sizeof(T)];
    std::memcpy(tmp, p, sizeof(T));
    if (swap)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(tmp[i], tmp[sizeof(T) - 1 - i]);
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    return v;
}

template <typename T>
void store(unsigned char* p, T v) {
    std::memcpy(p, &v, sizeof(T));
}

double decode(const unsigned char* p, int type, bool swap) {
    switch (type) {
        case kEnviUint8: return *p;
        case kEnviInt16: return load<std::int16_t>(p, swap);
        case kEnviFloat32: return load<float>(p, swap);
        case kEnviFloat64: return load<double>(p, swap);
        case kEnviUint16: return load<std::uint16_t>(p, swap);
    }
    return 0.0;
}

void encode(unsigned char* p, int type, double v) {
    switch (type) {
        case kEnviUint8: *p = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); break;
        case kEnviInt16: store(p, static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0))); break;
        case kEnviFloat32: store(p, static_cast<float>(v)); break;
        case kEnviFloat64: store(p, v); break;
        case kEnviUint16: store(p, static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 65535.0))); break;
        default: fail(ErrorKind::UnsupportedFormat, "unsupported ENVI data type " + std::to_string(type));
    }
}

const int kHostOrder = std::endian::native == std::endian::little ? 0 : 1;

}  // namespace

EnviHeader EnviHeader::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::getline(in, line);
    if (trim(line) != "ENVI") fail(ErrorKind::Parse, "ENVI header must start with 'ENVI'");

    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        if (trim(line).empty() || trim(line).front() == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Parse, "ENVI header: line without '=': " + line);
        std::string key = lower(trim(std::string_view(line).substr(0, eq)));
        std::string value(trim(std::string_view(line).substr(eq + 1)));
        // Brace values may continue over several lines.
        if (!value.empty() && value.front() == '{') {
            while (value.find('}') == std::string::npos) {
                std::string more;
                if (!std::getline(in, more)) fail(ErrorKind::Parse, "ENVI header: unterminated '{' for " + key);
                value += " " + more;
            }
            value = std::string(trim(value));
        }
        kv[key] = value;
    }

    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) fail(ErrorKind::Parse, std::string("ENVI header: missing '") + key + "'");
        return it->second;
    };

    EnviHeader h;
    h.samples = parse_size(need("samples"), "samples");
    h.lines = parse_size(need("lines"), "lines");
    h.bands = parse_size(need("bands"), "bands");
    if (h.samples == 0 || h.lines == 0 || h.bands == 0)
        fail(ErrorKind::Parse, "ENVI header: dimensions must be positive");
    h.data_type = static_cast<int>(detail::parse_int(need("data type"), "ENVI header data type"));
    envi_type_size(h.data_type);

    if (auto it = kv.find("interleave"); it != kv.end()) {
        const auto il = lower(trim(it->second));
        if (il == "bsq") h.interleave = Interleave::BSQ;
        else if (il == "bil") h.interleave = Interleave::BIL;
        else if (il == "bip") h.interleave = Interleave::BIP;
        else fail(ErrorKind::UnsupportedFormat, "ENVI header: unknown interleave '" + it->second + "'");
    }
    if (auto it = kv.find("byte order"); it != kv.end()) {
        h.byte_order = static_cast<int>(detail::parse_int(it->second, "ENVI header byte order"));
        if (h.byte_order != 0 && h.byte_order != 1) fail(ErrorKind::Parse, "ENVI header: byte order must be 0 or 1");
    }
    if (auto it = kv.find("header offset"); it != kv.end()) h.header_offset = parse_size(it->second, "header offset");
    if (auto it = kv.find("description"); it != kv.end()) {
        std::string_view d = trim(it->second);
        if (d.size() >= 2 && d.front() == '{') d = trim(d.substr(1, d.size() - 2));
        h.description = std::string(d);
    }
    if (auto it = kv.find("wavelength"); it != kv.end()) {
        auto wl = parse_list(it->second, "wavelength");
        if (wl.size() != h.bands)
            fail(ErrorKind::Parse, "ENVI header: " + std::to_string(wl.size()) + " wavelengths for " +
                                       std::to_string(h.bands) + " bands");
        std::string units = "nanometers";
        if (auto u = kv.find("wavelength units"); u != kv.end()) units = lower(trim(u->second));
        if (units == "micrometers" || units == "microns" || units == "um")
            for (double& v : wl) v *= 1000.0;
        h.wavelengths = std::move(wl);
    }
    if (auto it = kv.find("data gain values"); it != kv.end()) h.gain = parse_list(it->second, "data gain values");
    if (auto it = kv.find("data offset values"); it != kv.end())
        h.offset = parse_list(it->second, "data offset values");
    for (const auto* v : {&h.gain, &h.offset})
        if (*v && (*v)->size() != h.bands)
            fail(ErrorKind::Parse, "ENVI header: gain/offset list length differs from band count");
    return h;
}

std::string EnviHeader::to_string() const {
    std::ostringstream o;
    o << "ENVI\n";
    if (!description.empty()) o << "description = {" << description << "}\n";
    o << "samples = " << samples << "\n";
    o << "lines = " << lines << "\n";
    o << "bands = " << bands << "\n";
    o << "header offset = " << header_offset << "\n";
    o << "file type = ENVI Standard\n";
    o << "data type = " << data_type << "\n";
    o << "interleave = " << dinsat::to_string(interleave) << "\n";
    o << "byte order = " << byte_order << "\n";
    if (wavelengths) {
        o << "wavelength units = Nanometers\n";
        o << "wavelength = " << join_list(*wavelengths) << "\n";
    }
    if (gain) o << "data gain values = " << join_list(*gain) << "\n";
    if (offset) o << "data offset values = " << join_list(*offset) << "\n";
    return o.str();
}

std::size_t EnviHeader::expected_data_bytes() const {
    return header_offset + samples * lines * bands * envi_type_size(data_type);
}

EnviHeader read_envi_header(const fs::path& header_path) {
    std::ifstream in(header_path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open ENVI header " + header_path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return EnviHeader::parse(ss.str());
}

fs::path envi_data_path_for(const fs::path& header_path) {
    fs::path base = header_path;
    if (lower(base.extension().string()) == ".hdr") base.replace_extension();
    for (const char* ext : {"", ".img", ".dat", ".bsq", ".bil", ".bip", ".raw"}) {
        fs::path p = base;
        p += ext;
        if (p != header_path && fs::is_regular_file(p)) return p;
    }
    fail(ErrorKind::Io, "no data file found next to " + header_path.string());
}

EnviImage read_envi_image(const fs::path& header_path, const fs::path& data_path) {
    EnviImage img{read_envi_header(header_path), {}};
    const EnviHeader& h = img.header;
    std::ifstream in(data_path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open ENVI data " + data_path.string());
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() != h.expected_data_bytes())
        fail(ErrorKind::CorruptFile, "ENVI data " + data_path.string() + ": expected " +
                                         std::to_string(h.expected_data_bytes()) + " bytes, found " +
                                         std::to_string(raw.size()));

    const std::size_t rows = h.lines, cols = h.samples, nb = h.bands, es = envi_type_size(h.data_type);
    const bool swap = h.byte_order != kHostOrder && es > 1;
    const unsigned char* base = raw.data() + h.header_offset;
    img.bip.resize(rows * cols * nb);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t b = 0; b < nb; ++b)
                img.bip[(r * cols + c) * nb + b] =
                    decode(base + file_index(h.interleave, rows, cols, nb, r, c, b) * es, h.data_type, swap);
    return img;
}

HyperCube read_envi(const fs::path& header_path, const fs::path& data_path, std::vector<std::string>* warnings) {
    EnviImage img = read_envi_image(header_path, data_path);
    const EnviHeader& h = img.header;
    if (h.data_type == kEnviUint16 && (h.gain || h.offset)) {
        const std::size_t nb = h.bands;
        for (std::size_t p = 0; p < h.lines * h.samples; ++p)
            for (std::size_t b = 0; b < nb; ++b) {
                double& v = img.bip[p * nb + b];
                v = v * (h.gain ? (*h.gain)[b] : 1.0) + (h.offset ? (*h.offset)[b] : 0.0);
            }
    }
    std::optional<WavelengthGrid> grid;
    if (h.wavelengths) {
        grid.emplace(*h.wavelengths);
    } else {
        grid.emplace(WavelengthGrid::linear(450.0, 2500.0, h.bands));
        if (warnings)
            warnings->push_back(header_path.string() +
                                ": no wavelength list; assuming a linear grid over [450, 2500] nm");
    }
    for (double& v : img.bip)
        if (!std::isfinite(v))
            fail(ErrorKind::CorruptFile, "ENVI data " + data_path.string() + " contains non-finite values");
    return HyperCube(h.lines, h.samples, std::move(*grid), std::move(img.bip), h.interleave);
}

HyperCube read_envi(const fs::path& header_path, std::vector<std::string>* warnings) {
    return read_envi(header_path, envi_data_path_for(header_path), warnings);
}

void write_envi_image(const fs::path& header_path, const fs::path& data_path, std::size_t rows, std::size_t cols,
                      std::size_t bands, std::span<const double> bip, Interleave interleave, int data_type,
                      const std::optional<std::vector<double>>& wavelengths, std::string_view description) {
    require(bip.size() == rows * cols * bands, ErrorKind::Shape, "write_envi: data length differs from dimensions");
    EnviHeader h;
    h.samples = cols;
    h.lines = rows;
    h.bands = bands;
    h.interleave = interleave;
    h.data_type = data_type;
    h.byte_order = kHostOrder;
    h.wavelengths = wavelengths;
    h.description = std::string(description);
    const std::size_t es = envi_type_size(data_type);

    std::vector<unsigned char> raw(rows * cols * bands * es);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t b = 0; b < bands; ++b)
                encode(raw.data() + file_index(interleave, rows, cols, bands, r, c, b) * es, data_type,
                       bip[(r * cols + c) * bands + b]);

    {
        std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + data_path.string());
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!out) fail(ErrorKind::Io, "short write to " + data_path.string());
    }
    std::ofstream out(header_path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + header_path.string());
    out << h.to_string();
}

void write_envi(const HyperCube& cube, const fs::path& header_path, const fs::path& data_path,
                Interleave interleave, int data_type) {
    const auto nm = cube.grid().nm();
    write_envi_image(header_path, data_path, cube.rows(), cube.cols(), cube.bands(), cube.data(), interleave,
                     data_type, std::vector<double>(nm.begin(), nm.end()));
}

}  // namespace dinsat::io
