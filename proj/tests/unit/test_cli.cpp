#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "dinsat/cli/cli.hpp"
#include "dinsat/io/envi.hpp"
#include "dinsat/io/model_io.hpp"
#include "helpers.hpp"

using namespace dinsat;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the dinsat executable with `args` (already shell-quoted where needed).
Result run(const test::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = quote(DINSAT_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" +
                            quote(err.string());
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string p(const fs::path& path) { return quote(path.string()); }

// Small synthetic scene shared by the workflow tests.
void make_scene(const test::TempDir& dir, const std::string& name) {
    write_text(dir / "spec.txt",
               "rows = 12\ncols = 12\nbands = 20\nnoise = 0\nroi_regions = 2\nroi_pixels = 12\n"
               "absorption = 940:60:1.0, 1900:90:1.5\n");
    const auto r = run(dir, "synth --spec " + p(dir / "spec.txt") + " --seed 4 --out " + p(dir / name));
    REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("exit code mapping") {
    CHECK(cli::exit_code(ErrorKind::Config) == 2);
    CHECK(cli::exit_code(ErrorKind::Parse) == 3);
    CHECK(cli::exit_code(ErrorKind::CorruptFile) == 3);
    CHECK(cli::exit_code(ErrorKind::InvalidDataset) == 3);
    CHECK(cli::exit_code(ErrorKind::Numeric) == 4);
    CHECK(cli::exit_code(ErrorKind::Contract) == 5);
    CHECK(cli::error_line("data", "parse", "bad\nrow") == "error: category=data kind=parse detail=bad row");
}

TEST_CASE("usage errors") {
    test::TempDir dir("cli-usage");
    auto r = run(dir, "");
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: category=config", 0) == 0);
    CHECK(run(dir, "frobnicate").code == 2);
    CHECK(run(dir, "correct --cube nowhere.hdr --model m --out o").code == 2);
    CHECK(run(dir, "train --out o").code == 2);
    CHECK(run(dir, "--help").code == 0);

    write_text(dir / "bad.txt", "rows = 12\nshape = round\n");
    r = run(dir, "synth --spec " + p(dir / "bad.txt") + " --out " + p(dir / "s"));
    CHECK(r.code == 2);
    CHECK(r.err.find("shape") != std::string::npos);
}

TEST_CASE("synth, train, eval and report") {
    test::TempDir dir("cli-flow");
    make_scene(dir, "scene");
    const auto scene = dir / "scene";
    for (const char* f : {"scene.hdr", "scene.img", "rho.hdr", "rho.img", "truth.csv", "roi.csv"})
        CHECK(fs::exists(scene / f));
    CHECK(first_line(scene / "truth.csv") == "wavelength_nm,alpha,transmittance,dark_offset,illumination");
    CHECK(io::read_envi(scene / "scene.hdr").bands() == 20);

    write_text(dir / "train.txt", "illumination = 1000\nmax_epochs = 400\ntrain_fraction = 0.5\n"
                                  "val_fraction = 0.2\ntest_fraction = 0.3\n");
    const std::string train_args = "train --cube " + p(scene / "scene.hdr") + " --truth " + p(scene / "rho.hdr") +
                                   " --roi " + p(scene / "roi.csv") + " --config " + p(dir / "train.txt") +
                                   " --seed 1 --ensemble 2 --out ";
    auto r = run(dir, train_args + p(dir / "t1"));
    REQUIRE(r.code == 0);
    for (const char* f : {"model.dinsat", "ensemble.csv", "run_000/model.dinsat", "run_000/history.csv",
                          "run_000/split.csv", "run_000/run.txt", "run_000/roi_spectra.csv", "run_001/run.txt"})
        CHECK(fs::exists(dir / "t1" / f));
    CHECK_FALSE(fs::exists(dir / "t1" / "failures.csv"));

    SUBCASE("artifacts are byte-identical across identical runs") {
        REQUIRE(run(dir, train_args + p(dir / "t2")).code == 0);
        CHECK(slurp(dir / "t1/model.dinsat") == slurp(dir / "t2/model.dinsat"));
        CHECK(slurp(dir / "t1/run_001/model.dinsat") == slurp(dir / "t2/run_001/model.dinsat"));
        CHECK(slurp(dir / "t1/ensemble.csv") == slurp(dir / "t2/ensemble.csv"));
    }
    SUBCASE("eval reports a small reflectance error") {
        r = run(dir, "eval --model " + p(dir / "t1/model.dinsat") + " --cube " + p(scene / "scene.hdr") +
                         " --roi " + p(scene / "roi.csv") + " --out " + p(dir / "metrics.csv"));
        REQUIRE(r.code == 0);
        std::ifstream in(dir / "metrics.csv");
        std::string line;
        std::getline(in, line);
        CHECK(line == "region,pixels,reflectance_pmse,radiance_pmse");
        int regions = 0;
        while (std::getline(in, line)) {
            ++regions;
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            CHECK(line.substr(c1 + 1, c2 - c1 - 1) == "12");
            CHECK(std::stod(line.substr(c2 + 1, c3 - c2 - 1)) < 0.1);
            CHECK(std::stod(line.substr(c3 + 1)) < 0.1);
        }
        CHECK(regions == 2);
    }
    SUBCASE("report emits the documented schemas") {
        REQUIRE(run(dir, "report --runs " + p(dir / "t1") + " --out " + p(dir / "rep")).code == 0);
        CHECK(first_line(dir / "rep/transmittance.csv") == "band,wavelength_nm,mean,std,runs");
        CHECK(first_line(dir / "rep/loss_curves.csv") == "run,epoch,train_loss,val_loss,monitor,best_so_far");
        CHECK(first_line(dir / "rep/roi_spectra.csv") == "run,region,band,wavelength_nm,corrected,reference");
        const auto trans = slurp(dir / "rep/transmittance.csv");
        CHECK(std::count(trans.begin(), trans.end(), '\n') == 21);
    }
    SUBCASE("simulate writes a radiance CSV") {
        r = run(dir, "simulate --spectrum " + p(scene / "refs/target1.csv") + " --model " +
                         p(dir / "t1/model.dinsat") + " --out " + p(dir / "sim.csv"));
        REQUIRE(r.code == 0);
        CHECK(first_line(dir / "sim.csv") == "wavelength_nm,radiance");
    }
    SUBCASE("unsupervised training") {
        write_text(dir / "u.txt", "max_epochs = 30\nsample_count = 40\n");
        r = run(dir, "train --mode unsupervised --cube " + p(scene / "scene.hdr") + " --config " + p(dir / "u.txt") +
                         " --out " + p(dir / "u"));
        CHECK(r.code == 0);
        CHECK(fs::exists(dir / "u/model.dinsat"));
    }
}

TEST_CASE("correct with an identity model reproduces the normalized radiance") {
    test::TempDir dir("cli-correct");
    make_scene(dir, "scene");
    const auto cube = io::read_envi(dir / "scene/scene.hdr");
    const auto norm = estimate_normalization(cube);
    io::write_model(dir / "id.dinsat", io::ModelArtifact{TransmissionModel::identity(cube.bands()),
                                                         ode::SolverConfig{}, norm, std::nullopt});
    const auto r = run(dir, "correct --cube " + p(dir / "scene/scene.hdr") + " --model " + p(dir / "id.dinsat") +
                                " --threads 2 --out " + p(dir / "out"));
    REQUIRE(r.code == 0);
    const auto rho = io::read_envi(dir / "out/reflectance.hdr");
    REQUIRE(rho.rows() == cube.rows());
    CHECK(rho.grid() == cube.grid());
    double worst = 0.0;
    for (std::size_t row = 0; row < cube.rows(); ++row)
        for (std::size_t col = 0; col < cube.cols(); ++col) {
            const auto x = norm.normalize(cube.pixel(row, col));
            for (std::size_t b = 0; b < cube.bands(); ++b)
                worst = std::max(worst, std::fabs(rho.at(row, col, b) - static_cast<double>(static_cast<float>(x[b]))));
        }
    CHECK(worst == 0.0);
    const auto quality = io::read_envi_image(dir / "out/quality.hdr", dir / "out/quality.img");
    CHECK(quality.header.data_type == io::kEnviUint8);
    for (double q : quality.bip) CHECK(q == 0.0);

    SUBCASE("corrupt input is a data error") {
        fs::resize_file(dir / "scene/scene.img", 100);
        const auto bad = run(dir, "correct --cube " + p(dir / "scene/scene.hdr") + " --model " +
                                      p(dir / "id.dinsat") + " --out " + p(dir / "out2"));
        CHECK(bad.code == 3);
        CHECK(bad.err.rfind("error: category=data kind=corrupt-file", 0) == 0);
    }
    SUBCASE("an exploding reverse solve is a numeric error") {
        ode::SolverConfig euler;
        euler.method = ode::Method::Euler;
        euler.steps = 1;
        io::write_model(dir / "blow.dinsat",
                        io::ModelArtifact{TransmissionModel::linear_from_alpha(std::vector<double>(cube.bands(), 1.0)),
                                          euler, norm, std::nullopt});
        const auto bad = run(dir, "correct --cube " + p(dir / "scene/scene.hdr") + " --model " +
                                      p(dir / "blow.dinsat") + " --out " + p(dir / "out3"));
        CHECK(bad.code == 4);
        CHECK(bad.err.rfind("error: category=numeric", 0) == 0);
    }
    SUBCASE("a model with the wrong band count is rejected") {
        io::write_model(dir / "short.dinsat",
                        io::ModelArtifact{TransmissionModel::identity(5), ode::SolverConfig{}, std::nullopt,
                                          std::nullopt});
        CHECK(run(dir, "correct --cube " + p(dir / "scene/scene.hdr") + " --model " + p(dir / "short.dinsat") +
                           " --renormalize --out " + p(dir / "out4"))
                  .code == 3);
    }
}
