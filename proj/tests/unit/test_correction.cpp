#include <doctest.h>

#include <cmath>
#include <random>

#include "dinsat/correction/correction.hpp"
#include "dinsat/error.hpp"
#include "helpers.hpp"

using namespace dinsat;

namespace {

const ode::SolverConfig kRk4;

std::vector<PixelSample> samples(const std::vector<std::vector<double>>& rows) {
    std::vector<PixelSample> out;
    for (std::size_t i = 0; i < rows.size(); ++i) out.emplace_back(i, 0, Spectrum(rows[i], Unit::Radiance));
    return out;
}

Spectrum radiance(std::vector<double> v) { return Spectrum(std::move(v), Unit::Radiance); }

}  // namespace

TEST_CASE("dark offset and scale estimates") {
    const auto px = samples({{1.0, 2.0}, {3.0, 0.5}});
    const auto c = estimate_dark_offset(px);
    CHECK(c == std::vector<double>{1.0, 0.5});
    CHECK(estimate_scale(px, c) == 2.0);

    const auto single = samples({{4.0, 7.0, 1.0}});
    CHECK(estimate_dark_offset(single) == std::vector<double>{4.0, 7.0, 1.0});

    SUBCASE("flat scene") {
        const auto flat = samples({{2.0, 3.0}, {2.0, 3.0}, {2.0, 3.0}});
        const auto norm = estimate_normalization(flat);
        CHECK(norm.c == std::vector<double>{2.0, 3.0});
        CHECK(norm.m == 1.0);
        CHECK(norm.normalize(flat[1].l4.values()) == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("homogeneity") {
        const auto scaled = samples({{10.0, 20.0}, {30.0, 5.0}});
        CHECK(estimate_scale(scaled, estimate_dark_offset(scaled)) == doctest::Approx(20.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS((void)estimate_dark_offset(std::span<const PixelSample>{}), Error);
}

TEST_CASE("cube estimates agree with pixel-list estimates") {
    std::mt19937_64 rng(12);
    const std::size_t rows = 5, cols = 7, nb = 9;
    const auto data = test::uniform(rng, rows * cols * nb, 3.0, 40.0);
    const HyperCube cube(rows, cols, WavelengthGrid::linear(400, 900, nb), data);
    std::vector<PixelSample> px;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) px.emplace_back(r, c, cube.spectrum(r, c));
    const auto a = estimate_normalization(cube);
    const auto b = estimate_normalization(px);
    CHECK(a == b);

    // Every pixel lands in [0, 1].
    for (const auto& p : px)
        for (double v : a.normalize(p.l4.values())) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-9);
        }
}

TEST_CASE("normalization validates its inputs") {
    CHECK_THROWS_AS(SceneNormalization({1.0}, 0.0), Error);
    CHECK_THROWS_AS(SceneNormalization({-1.0}, 1.0), Error);
    const SceneNormalization n({1.0, 2.0}, 4.0);
    CHECK(n.normalize(std::vector<double>{5.0, 1.0}) == std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS((void)n.normalize(std::vector<double>{1.0}), Error);
}

TEST_CASE("correct_pixel examples") {
    const std::size_t nb = 6;
    const SceneNormalization unit(std::vector<double>(nb, 0.0), 1.0);

    SUBCASE("identity model returns the input") {
        const auto l4 = radiance({0.1, 0.2, 0.3, 0.5, 0.7, 0.9});
        const auto out = correct_pixel(TransmissionModel::identity(nb), unit, l4, kRk4);
        CHECK(out.rho.unit() == Unit::Reflectance);
        CHECK(test::max_abs_diff(test::to_vec(out.rho.values()), test::to_vec(l4.values())) < 1e-15);
        for (auto q : out.quality) CHECK(q == kQualityOk);
    }
    SUBCASE("alpha = ln 2") {
        const auto m = TransmissionModel::linear_from_alpha(std::vector<double>(nb, std::log(2.0)));
        const auto out = correct_pixel(m, unit, Spectrum::constant(nb, 0.1, Unit::Radiance), kRk4);
        for (double v : out.rho.values()) CHECK(std::fabs(v - 0.4) < 1e-6);
    }
    SUBCASE("dark pixel") {
        const SceneNormalization norm(std::vector<double>(nb, 3.0), 10.0);
        std::mt19937_64 rng(1);
        const auto m = TransmissionModel::nonlinear_random(nb, rng);
        const auto out = correct_pixel(m, norm, Spectrum::constant(nb, 3.0, Unit::Radiance), kRk4);
        for (double v : out.rho.values()) CHECK(v == 0.0);
    }
    SUBCASE("radiance below the offset is clamped") {
        const SceneNormalization norm(std::vector<double>(nb, 3.0), 10.0);
        const auto out = correct_pixel(TransmissionModel::identity(nb), norm,
                                       radiance({1.0, 3.0, 4.0, 8.0, 13.0, 0.0}), kRk4);
        const std::vector<double> expect{0.0, 0.0, 0.1, 0.5, 1.0, 0.0};
        CHECK(test::max_abs_diff(test::to_vec(out.rho.values()), expect) < 1e-15);
    }
}

TEST_CASE("quality flags") {
    const std::size_t nb = 4;
    const SceneNormalization unit(std::vector<double>(nb, 0.0), 1.0);
    // Band 0 is opaque: (1 - 20/16 + ...)^16 is far below the floor.
    const auto m = TransmissionModel::linear_from_alpha(std::vector<double>{20.0, 0.1, 0.1, 0.1});
    const auto out = correct_pixel(m, unit, radiance({1e-12, 0.5, 0.99, 0.2}), kRk4);
    CHECK((out.quality[0] & kQualityFloored) != 0);
    CHECK((out.quality[1] & kQualityFloored) == 0);
    CHECK(std::isfinite(out.rho[0]));
    // 0.99 / T(1)^2 exceeds 1.
    CHECK(out.rho[2] > 1.0);
    CHECK(out.quality[2] == kQualityOutOfRange);
    CHECK(out.quality[3] == kQualityOk);
    // Output is not clamped.
    CHECK(out.rho[2] == doctest::Approx(0.99 * std::exp(0.2)).epsilon(1e-6));
}

TEST_CASE("simulate_at_sensor examples") {
    const std::size_t nb = 5;
    const SceneNormalization unit(std::vector<double>(nb, 0.0), 1.0);
    const auto rho = Spectrum(std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}, Unit::Reflectance);
    const auto l4 = simulate_at_sensor(TransmissionModel::identity(nb), unit, rho, kRk4);
    CHECK(l4.unit() == Unit::Radiance);
    CHECK(test::max_abs_diff(test::to_vec(l4.values()), test::to_vec(rho.values())) < 1e-15);

    const SceneNormalization norm({1.0, 2.0, 3.0, 4.0, 5.0}, 7.0);
    std::mt19937_64 rng(6);
    const auto dark = simulate_at_sensor(TransmissionModel::nonlinear_random(nb, rng), norm,
                                         Spectrum::constant(nb, 0.0, Unit::Reflectance), kRk4);
    CHECK(test::to_vec(dark.values()) == norm.c);

    // Linear model against the analytic form c + m rho T^2 with T = R^16.
    const std::vector<double> alpha{0.1, 0.5, 1.0, 2.0, 3.0};
    const auto lin = simulate_at_sensor(TransmissionModel::linear_from_alpha(alpha), norm, rho, kRk4);
    for (std::size_t i = 0; i < nb; ++i) {
        const double z = -alpha[i] / 16.0;
        const double t = std::pow(1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0, 16);
        CHECK(lin[i] == doctest::Approx(norm.c[i] + norm.m * rho[i] * t * t).epsilon(1e-13));
    }
}

TEST_CASE("round trips for the linear model") {
    std::mt19937_64 rng(31);
    const std::size_t nb = 126;
    for (int trial = 0; trial < 25; ++trial) {
        const auto m = TransmissionModel::linear_from_alpha(test::uniform(rng, nb, 0.0, 3.0));
        const SceneNormalization norm(test::uniform(rng, nb, 0.0, 80.0), 500.0 + 1000.0 * trial);
        const Spectrum rho(test::uniform(rng, nb, 0.0, 1.0), Unit::Reflectance);
        const auto l4 = simulate_at_sensor(m, norm, rho, kRk4);
        const auto back = correct_pixel(m, norm, l4, kRk4);
        CHECK(test::max_abs_diff(test::to_vec(back.rho.values()), test::to_vec(rho.values())) < 1e-6);

        const auto again = simulate_at_sensor(m, norm, back.rho, kRk4);
        CHECK(test::max_abs_diff(test::to_vec(again.values()), test::to_vec(l4.values())) / norm.m < 1e-6);
    }
}

TEST_CASE("correction is invariant to rescaling the scene") {
    std::mt19937_64 rng(41);
    const std::size_t nb = 8, npx = 30;
    std::vector<std::vector<double>> rows(npx);
    for (auto& r : rows) r = test::uniform(rng, nb, 10.0, 200.0);
    const auto m = TransmissionModel::nonlinear_random(nb, rng);
    const auto px = samples(rows);
    const auto norm = estimate_normalization(px);
    for (double k : {0.01, 3.0, 1e4}) {
        std::vector<std::vector<double>> scaled(rows);
        for (auto& r : scaled)
            for (double& v : r) v *= k;
        const auto spx = samples(scaled);
        const auto snorm = estimate_normalization(spx);
        for (std::size_t p = 0; p < npx; p += 7) {
            const auto a = correct_pixel(m, norm, px[p].l4, kRk4);
            const auto b = correct_pixel(m, snorm, spx[p].l4, kRk4);
            CHECK(test::rel_error(test::to_vec(b.rho.values()), test::to_vec(a.rho.values())) < 1e-12);
        }
    }
}

TEST_CASE("correction is monotone in each band for the linear model") {
    std::mt19937_64 rng(51);
    const std::size_t nb = 10;
    const auto m = TransmissionModel::linear_from_alpha(test::uniform(rng, nb, 0.0, 4.0));
    const SceneNormalization norm(test::uniform(rng, nb, 0.0, 5.0), 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto l = test::uniform(rng, nb, 0.0, 100.0);
        const auto base = correct_pixel(m, norm, radiance(l), kRk4);
        const std::size_t band = static_cast<std::size_t>(trial) % nb;
        l[band] += std::uniform_real_distribution<double>(0.0, 10.0)(rng);
        const auto up = correct_pixel(m, norm, radiance(l), kRk4);
        CHECK(up.rho[band] >= base.rho[band]);
    }
}

TEST_CASE("batched correction matches per-pixel correction") {
    std::mt19937_64 rng(61);
    const std::size_t nb = 6, npx = 45;
    const auto m = TransmissionModel::nonlinear_random(nb, rng);
    const SceneNormalization norm(test::uniform(rng, nb, 0.0, 2.0), 30.0);
    const auto rows = test::uniform(rng, nb * npx, 0.0, 30.0);
    const auto batch = correct_batch(m, norm, rows, kRk4);
    for (std::size_t p = 0; p < npx; p += 11) {
        const std::vector<double> one(rows.begin() + static_cast<std::ptrdiff_t>(p * nb),
                                      rows.begin() + static_cast<std::ptrdiff_t>((p + 1) * nb));
        const auto single = correct_pixel(m, norm, radiance(one), kRk4);
        for (std::size_t i = 0; i < nb; ++i) {
            CHECK(batch.rho[p * nb + i] == single.rho[i]);
            CHECK(batch.quality[p * nb + i] == single.quality[i]);
        }
    }
    CHECK_THROWS_AS((void)correct_batch(m, SceneNormalization({0.0}, 1.0), rows, kRk4), Error);
}
