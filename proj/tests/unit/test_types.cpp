#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dinsat/core/types.hpp"
#include "dinsat/error.hpp"

using namespace dinsat;

TEST_CASE("wavelength grid validation") {
    CHECK_NOTHROW(WavelengthGrid({450.0, 460.0}));
    CHECK_THROWS_AS(WavelengthGrid({450.0}), Error);
    CHECK_THROWS_AS(WavelengthGrid({450.0, 450.0}), Error);
    CHECK_THROWS_AS(WavelengthGrid({460.0, 450.0}), Error);
    CHECK_THROWS_AS(WavelengthGrid({-1.0, 450.0}), Error);

    const auto g = WavelengthGrid::linear(450.0, 2500.0, 126);
    CHECK(g.size() == 126);
    CHECK(g[0] == 450.0);
    CHECK(g[125] == doctest::Approx(2500.0));
    CHECK(g.nearest_band(1400.0) == 58);
    CHECK(g.nearest_band(0.0) == 0);
    CHECK(g.nearest_band(1e6) == 125);
}

TEST_CASE("spectrum rejects non-finite values") {
    CHECK_THROWS_AS(Spectrum({1.0, std::nan("")}, Unit::Radiance), Error);
    const auto s = Spectrum::constant(3, 0.5, Unit::Reflectance);
    CHECK(s.size() == 3);
    CHECK(s.with_unit(Unit::Unitless).unit() == Unit::Unitless);
}

TEST_CASE("hypercube indexing and validation") {
    const WavelengthGrid grid({1.0, 2.0, 3.0});
    std::vector<double> data(2 * 2 * 3);
    std::iota(data.begin(), data.end(), 0.0);
    const HyperCube cube(2, 2, grid, data);
    CHECK(cube.at(1, 0, 2) == 8.0);
    CHECK(cube.pixel(0, 1)[0] == 3.0);
    CHECK(cube.spectrum(1, 1).values()[1] == 10.0);
    data[0] = -1.0;
    CHECK_THROWS_AS(HyperCube(2, 2, grid, data), Error);
    CHECK_THROWS_AS(HyperCube(2, 2, grid, std::vector<double>(5, 1.0)), Error);
}

TEST_CASE("split_dataset sizes and disjointness") {
    const auto s = split_dataset(145, {0.24, 0.06, 0.70}, 3);
    CHECK(s.train.size() == 35);
    CHECK(s.val.size() == 9);
    CHECK(s.test.size() == 101);
    std::set<std::size_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == 145);
    CHECK(*all.rbegin() == 144);

    CHECK(split_dataset(145, {0.24, 0.06, 0.70}, 3) == s);
    CHECK_FALSE(split_dataset(145, {0.24, 0.06, 0.70}, 4) == s);

    const auto u = split_dataset(112, {87.0 / 112.0, 0.0, 25.0 / 112.0}, 0);
    CHECK(u.train.size() == 87);
    CHECK(u.val.empty());
    CHECK(u.test.size() == 25);

    CHECK_THROWS_AS(split_dataset(2, {0.1, 0.1, 0.8}, 0), Error);
}

TEST_CASE("percent mse and roi mean") {
    CHECK(percent_mse(std::vector<double>{0.1, 0.2}, std::vector<double>{0.1, 0.2}) == 0.0);
    // 100 * ((0.1)^2 + (0.3)^2) / 2 = 5
    CHECK(percent_mse(std::vector<double>{0.1, 0.5}, std::vector<double>{0.0, 0.2}) == doctest::Approx(5.0));
    CHECK_THROWS_AS(percent_mse(std::vector<double>{0.1}, std::vector<double>{0.1, 0.2}), Error);

    std::vector<PixelSample> px;
    px.emplace_back(0, 0, Spectrum({1.0, 2.0}, Unit::Radiance), Spectrum({0.2, 0.4}, Unit::Reflectance));
    px.emplace_back(0, 1, Spectrum({3.0, 6.0}, Unit::Radiance), Spectrum({0.4, 0.8}, Unit::Reflectance));
    const auto r = roi_mean_spectrum(px, SampleField::Radiance);
    CHECK(r[0] == 2.0);
    CHECK(r[1] == 4.0);
    const auto t = roi_mean_spectrum(px, SampleField::Truth);
    CHECK(t[0] == doctest::Approx(0.3));
    CHECK(t.unit() == Unit::Reflectance);
}
