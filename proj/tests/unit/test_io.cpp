#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "dinsat/error.hpp"
#include "dinsat/io/config.hpp"
#include "dinsat/io/envi.hpp"
#include "dinsat/io/model_io.hpp"
#include "dinsat/io/tables.hpp"
#include "helpers.hpp"

using namespace dinsat;
using namespace dinsat::io;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Value of the fixture at (row, col, band).
float fixture_value(std::size_t r, std::size_t c, std::size_t b) {
    return static_cast<float>(100.0 * static_cast<double>(b) + 10.0 * static_cast<double>(r) +
                              static_cast<double>(c) + 0.5);
}

void append_f32(std::vector<unsigned char>& out, float v, bool big_endian) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) {
        const int shift = big_endian ? 8 * (3 - k) : 8 * k;
        out.push_back(static_cast<unsigned char>((u >> shift) & 0xffu));
    }
}

// Hand-laid 2 x 2 x 3 cube in the requested interleave.
std::vector<unsigned char> fixture_bytes(Interleave il, bool big_endian = false) {
    std::vector<unsigned char> out;
    const std::size_t R = 2, C = 2, B = 3;
    if (il == Interleave::BSQ) {
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t c = 0; c < C; ++c) append_f32(out, fixture_value(r, c, b), big_endian);
    } else if (il == Interleave::BIL) {
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c) append_f32(out, fixture_value(r, c, b), big_endian);
    } else {
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t b = 0; b < B; ++b) append_f32(out, fixture_value(r, c, b), big_endian);
    }
    return out;
}

std::string fixture_header(const std::string& interleave, int byte_order = 0, int data_type = 4,
                           const std::string& extra = "") {
    return "ENVI\nsamples = 2\nlines = 2\nbands = 3\nheader offset = 0\nfile type = ENVI Standard\n"
           "data type = " +
           std::to_string(data_type) + "\ninterleave = " + interleave + "\nbyte order = " +
           std::to_string(byte_order) + "\nwavelength = {500.0, 600.0,\n 700.0}\n" + extra;
}

void check_fixture(const HyperCube& cube) {
    REQUIRE(cube.rows() == 2);
    REQUIRE(cube.cols() == 2);
    REQUIRE(cube.bands() == 3);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t b = 0; b < 3; ++b) CHECK(cube.at(r, c, b) == fixture_value(r, c, b));
    CHECK(cube.grid()[0] == 500.0);
    CHECK(cube.grid()[2] == 700.0);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Contract;
}

}  // namespace

TEST_CASE("hand-written ENVI fixture") {
    test::TempDir dir("envi");
    const auto bytes = fixture_bytes(Interleave::BSQ);
    REQUIRE(bytes.size() == 48);
    write_bytes(dir / "f.img", bytes);
    write_text(dir / "f.hdr", fixture_header("bsq"));
    const auto cube = read_envi(dir / "f.hdr");
    check_fixture(cube);
    CHECK(cube.layout() == Interleave::BSQ);
    // BSQ: (row 1, col 0, band 0) is the third value in the file.
    float first;
    std::memcpy(&first, bytes.data() + 2 * 4, 4);
    CHECK(cube.at(1, 0, 0) == first);
}

TEST_CASE("the three interleaves load identically") {
    test::TempDir dir("interleave");
    for (const auto& [il, name] : {std::pair{Interleave::BSQ, "bsq"}, std::pair{Interleave::BIL, "bil"},
                                   std::pair{Interleave::BIP, "bip"}}) {
        CAPTURE(name);
        write_bytes(dir / (std::string(name) + ".img"), fixture_bytes(il));
        write_text(dir / (std::string(name) + ".hdr"), fixture_header(name));
        const auto cube = read_envi(dir / (std::string(name) + ".hdr"));
        check_fixture(cube);
        CHECK(cube.layout() == il);
    }
    SUBCASE("big-endian data") {
        write_bytes(dir / "be.img", fixture_bytes(Interleave::BIP, true));
        write_text(dir / "be.hdr", fixture_header("bip", 1));
        check_fixture(read_envi(dir / "be.hdr"));
    }
}

TEST_CASE("ENVI error categories") {
    test::TempDir dir("envi-err");
    auto bytes = fixture_bytes(Interleave::BSQ);
    bytes.resize(40);
    write_bytes(dir / "t.img", bytes);
    write_text(dir / "t.hdr", fixture_header("bsq"));
    CHECK(kind_of([&] { (void)read_envi(dir / "t.hdr"); }) == ErrorKind::CorruptFile);

    write_bytes(dir / "u.img", fixture_bytes(Interleave::BSQ));
    write_text(dir / "u.hdr", fixture_header("bsq", 0, 6));
    CHECK(kind_of([&] { (void)read_envi(dir / "u.hdr"); }) == ErrorKind::UnsupportedFormat);

    write_text(dir / "m.hdr", "ENVI\nsamples = 2\nbands = 3\ndata type = 4\n");
    CHECK(kind_of([&] { (void)read_envi_header(dir / "m.hdr"); }) == ErrorKind::Parse);
    write_text(dir / "w.hdr", fixture_header("bsq") + "wavelength = {1, 2}\n");
    CHECK(kind_of([&] { (void)read_envi_header(dir / "w.hdr"); }) == ErrorKind::Parse);
    CHECK(kind_of([&] { (void)read_envi(dir / "missing.hdr"); }) == ErrorKind::Io);
}

TEST_CASE("unsigned 16-bit scaling and micrometer wavelengths") {
    test::TempDir dir("u16");
    std::vector<unsigned char> bytes;
    for (std::uint16_t v = 0; v < 12; ++v) {
        bytes.push_back(static_cast<unsigned char>(v & 0xff));
        bytes.push_back(static_cast<unsigned char>(v >> 8));
    }
    write_bytes(dir / "s.img", bytes);
    std::string hdr = fixture_header("bsq", 0, 12, "data gain values = {2, 0.5, 1}\ndata offset values = {1, 0, -3}\n");
    write_text(dir / "s.hdr", hdr);
    const auto scaled = read_envi(dir / "s.hdr");
    // BSQ: band b, row r, col c holds 4b + 2r + c.
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
            const double raw0 = static_cast<double>(2 * r + c);
            CHECK(scaled.at(r, c, 0) == raw0 * 2 + 1);
            CHECK(scaled.at(r, c, 1) == (raw0 + 4) * 0.5);
            CHECK(scaled.at(r, c, 2) == raw0 + 8 - 3);
        }
    write_text(dir / "s.hdr", fixture_header("bsq", 0, 12));
    CHECK(read_envi(dir / "s.hdr").at(1, 1, 2) == 11.0);

    std::string um = "ENVI\nsamples = 2\nlines = 2\nbands = 3\ndata type = 12\ninterleave = bsq\n"
                     "wavelength units = Micrometers\nwavelength = {0.5, 0.6, 0.7}\n";
    write_text(dir / "s.hdr", um);
    const auto cube = read_envi(dir / "s.hdr");
    CHECK(cube.grid()[0] == doctest::Approx(500.0));
    CHECK(cube.grid()[2] == doctest::Approx(700.0));

    write_text(dir / "s.hdr", "ENVI\nsamples = 2\nlines = 2\nbands = 3\ndata type = 12\ninterleave = bsq\n");
    std::vector<std::string> warnings;
    const auto ramp = read_envi(dir / "s.hdr", &warnings);
    CHECK(warnings.size() == 1);
    CHECK(ramp.grid()[0] == 450.0);
    CHECK(ramp.grid()[2] == 2500.0);
}

TEST_CASE("ENVI write/read round trips") {
    test::TempDir dir("envi-rt");
    std::mt19937_64 rng(77);
    const HyperCube cube(3, 5, WavelengthGrid::linear(400, 1000, 4), test::uniform(rng, 60, 0.0, 500.0));
    for (Interleave il : {Interleave::BSQ, Interleave::BIL, Interleave::BIP}) {
        const std::string name(to_string(il));
        write_envi(cube, dir / (name + ".hdr"), dir / (name + ".img"), il, kEnviFloat64);
        const auto back = read_envi(dir / (name + ".hdr"));
        CHECK(test::to_vec(back.data()) == test::to_vec(cube.data()));
        CHECK(back.grid() == cube.grid());
        CHECK(back.layout() == il);
    }
    write_envi(cube, dir / "f.hdr", dir / "f.img", Interleave::BSQ, kEnviFloat32);
    const auto f32 = read_envi(dir / "f.hdr");
    for (std::size_t k = 0; k < 60; ++k)
        CHECK(f32.data()[k] == static_cast<double>(static_cast<float>(cube.data()[k])));
    CHECK(fs::file_size(dir / "f.img") == 60 * 4);
    CHECK(envi_data_path_for(dir / "f.hdr") == dir / "f.img");
}

TEST_CASE("spectrum CSV") {
    test::TempDir dir("csv");
    const WavelengthGrid grid({400.0, 500.5, 610.25});
    const Spectrum s({0.1, 1.0 / 3.0, 0.9}, Unit::Reflectance);
    write_spectrum_csv(dir / "s.csv", grid, s, "reflectance");
    const auto back = read_spectrum_csv(dir / "s.csv", Unit::Reflectance);
    CHECK(back.grid == grid);
    CHECK(back.spectrum == s);

    write_text(dir / "nohdr.csv", "1,2\n2,3\n");
    CHECK(read_spectrum_csv(dir / "nohdr.csv", Unit::Unitless).spectrum.size() == 2);

    write_text(dir / "bad.csv", "wavelength_nm,value\n400,0.1\n500,zz\n");
    try {
        (void)read_spectrum_csv(dir / "bad.csv", Unit::Unitless);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    write_text(dir / "nm.csv", "wavelength_nm,value\n400,0.1\n390,0.2\n");
    CHECK(kind_of([&] { (void)read_spectrum_csv(dir / "nm.csv", Unit::Unitless); }) == ErrorKind::Parse);

    SUBCASE("126 rows matching a cube grid") {
        const auto g = WavelengthGrid::linear(450, 2500, 126);
        write_spectrum_csv(dir / "lib.csv", g, Spectrum::constant(126, 0.3, Unit::Reflectance));
        const auto lib = read_spectrum_csv(dir / "lib.csv", Unit::Reflectance);
        CHECK_NOTHROW(require_same_grid(g, lib.grid, "library"));
        CHECK(lib.spectrum.unit() == Unit::Reflectance);
        CHECK(lib.spectrum.size() == 126);
        CHECK(kind_of([&] { require_same_grid(WavelengthGrid::linear(450, 2400, 126), lib.grid, "library"); }) ==
              ErrorKind::InvalidDataset);
    }
}

TEST_CASE("ROI files") {
    test::TempDir dir("roi");
    fs::create_directories(dir / "refs");
    write_text(dir / "roi.csv",
               "region_name,row,col,reference_csv_path\n# comment\nroof,0,1,refs/roof.csv\nroof,2,3\n"
               "grass,4,4\n");
    const auto roi = read_roi(dir / "roi.csv");
    REQUIRE(roi.regions.size() == 2);
    CHECK(roi.regions[0].name == "roof");
    CHECK(roi.regions[0].pixels.size() == 2);
    REQUIRE(roi.regions[0].reference);
    CHECK(*roi.regions[0].reference == dir / "refs/roof.csv");
    CHECK_FALSE(roi.regions[1].reference);
    CHECK(roi.pixel_count() == 3);
    CHECK_NOTHROW(roi.validate_bounds(5, 5));
    CHECK(kind_of([&] { roi.validate_bounds(4, 5); }) == ErrorKind::InvalidDataset);

    write_roi(dir / "copy.csv", roi);
    const auto again = read_roi(dir / "copy.csv");
    CHECK(again.regions.size() == 2);
    CHECK(*again.regions[0].reference == dir / "refs/roof.csv");
    CHECK(again.regions[1].pixels == roi.regions[1].pixels);

    write_text(dir / "bad.csv", "roof,1\n");
    CHECK(kind_of([&] { (void)read_roi(dir / "bad.csv"); }) == ErrorKind::Parse);
    write_text(dir / "neg.csv", "roof,-1,2\n");
    CHECK(kind_of([&] { (void)read_roi(dir / "neg.csv"); }) == ErrorKind::Parse);
}

TEST_CASE("model artifacts round-trip bit for bit") {
    test::TempDir dir("model");
    std::mt19937_64 rng(5);
    ode::SolverConfig solver;
    solver.method = ode::Method::Euler;
    solver.steps = 9;
    solver.inverse = ode::InverseMode::Integrate;

    auto lin = TransmissionModel::linear_from_raw(test::uniform(rng, 6, -3.0, 3.0));
    lin.mutable_params()[0] = 0.1 + 0.2;
    lin.mutable_params()[1] = 1e-300;
    const ModelArtifact a{lin, solver, SceneNormalization(test::uniform(rng, 6, 0.0, 90.0), 1234.5678),
                          std::vector<double>{400, 500, 600, 700, 800, 900.125}};
    write_model(dir / "lin.dinsat", a);
    const auto a2 = read_model(dir / "lin.dinsat");
    CHECK(a2 == a);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::bit_cast<std::uint64_t>(a2.model.params()[i]) == std::bit_cast<std::uint64_t>(lin.params()[i]));

    const ModelArtifact b{TransmissionModel::nonlinear_random(7, rng, 2, 5), ode::SolverConfig{}, std::nullopt,
                          std::nullopt};
    const auto text = format_model(b);
    CHECK(text.rfind("dinsat-model 1\n", 0) == 0);
    const auto b2 = parse_model(text);
    CHECK(b2 == b);
    CHECK(format_model(b2) == text);
    CHECK(b2.model.latent() == 2);
    CHECK(b2.model.hidden() == 5);

    CHECK(kind_of([&] { (void)parse_model("not-a-model\n"); }) == ErrorKind::UnsupportedFormat);
    auto truncated = text.substr(0, text.size() - 30);
    CHECK(kind_of([&] { (void)parse_model(truncated); }) == ErrorKind::CorruptFile);
    auto unknown = text;
    unknown.insert(unknown.find('\n') + 1, "colour = red\n");
    CHECK(kind_of([&] { (void)parse_model(unknown); }) == ErrorKind::CorruptFile);
}

TEST_CASE("key-value configs") {
    const auto kv = parse_key_values("# comment\nmode = unsupervised\n\nlr=0.02  # trailing\nsteps = 8\n");
    CHECK(kv.find("mode") == "unsupervised");
    CHECK(kv.find("lr") == "0.02");
    CHECK_FALSE(kv.find("seed"));
    CHECK(kind_of([] { (void)parse_key_values("a = 1\na = 2\n"); }) == ErrorKind::Config);
    CHECK(kind_of([] { (void)parse_key_values("just words\n"); }) == ErrorKind::Config);

    const auto s = train_settings(kv);
    CHECK(s.train.mode == TrainMode::Unsupervised);
    CHECK(s.train.lr == 0.02);
    CHECK(s.train.solver.steps == 8);
    CHECK(s.train.lambda_slope == 1.0);
    CHECK(s.train.fractions.train == doctest::Approx(87.0 / 112.0));

    const auto sup = train_settings(parse_key_values("illumination = 1000\nlambda = 0.5\n"), TrainMode::Supervised);
    CHECK(sup.train.mode == TrainMode::Supervised);
    CHECK(sup.illumination == 1000.0);
    CHECK(sup.train.lambda_fd == 0.5);

    CHECK(kind_of([] { (void)train_settings(parse_key_values("learning_rate = 1\n")); }) == ErrorKind::Config);
    CHECK(kind_of([] { (void)train_settings(parse_key_values("lr = fast\n")); }) == ErrorKind::Config);
    CHECK(kind_of([] { (void)train_settings(parse_key_values("lr = -1\n")); }) == ErrorKind::Config);
}

TEST_CASE("synth settings and absorption lists") {
    const auto bands = parse_absorption("940:40:1.2, 1400:60:2.2", "absorption");
    REQUIRE(bands.size() == 2);
    CHECK(bands[1].center_nm == 1400.0);
    CHECK(bands[1].width_nm == 60.0);
    CHECK(bands[1].depth == 2.2);
    CHECK(parse_absorption("none", "absorption").empty());
    CHECK(kind_of([] { (void)parse_absorption("940:40", "absorption"); }) == ErrorKind::Config);

    const auto s = synth_settings(parse_key_values("rows = 8\ncols = 4\nnoise = 0.05\nabsorption = 900:30:1\nroi_regions = 2\nroi_pixels = 3\n"));
    CHECK(s.spec.rows == 8);
    CHECK(s.spec.cols == 4);
    CHECK(s.spec.noise == 0.05);
    CHECK(s.spec.absorption.size() == 1);
    CHECK(s.spec.bands == 126);
    CHECK(s.roi_regions == 2);
    CHECK(kind_of([] { (void)synth_settings(parse_key_values("rows = 4\ncols = 4\n")); }) == ErrorKind::Config);
    CHECK(kind_of([] { (void)synth_settings(parse_key_values("depth = 3\n")); }) == ErrorKind::Config);
}
