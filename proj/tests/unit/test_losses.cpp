#include <doctest.h>

#include <cmath>
#include <random>

#include "dinsat/error.hpp"
#include "dinsat/training/losses.hpp"
#include "helpers.hpp"

using namespace dinsat;
using diff::Tape;
using diff::Var;

namespace {

Var rows(Tape& t, std::vector<double> v, std::size_t n, std::size_t nb) { return t.constant(std::move(v), {n, nb}); }

double scalar(Var v) { return v.value()[0]; }

// Loss of a model with parameters p on the given pixels.
double loss_value(const TransmissionModel& shape, const std::vector<double>& p, bool supervised,
                  const SceneNormalization& norm, const std::vector<PixelSample>& px, const ode::SolverConfig& solver) {
    auto m = shape;
    std::copy(p.begin(), p.end(), m.mutable_params().begin());
    Tape t;
    const auto tm = trace(m, t, false);
    return scalar(supervised ? supervised_loss(tm, norm, px, solver, 1.0).total
                             : unsupervised_loss(tm, norm, px, solver, 1e-2, 1e-2, 1.0).total);
}

}  // namespace

TEST_CASE("supervised loss examples") {
    Tape t;
    SUBCASE("perfect prediction") {
        const Var r = rows(t, {0.1, 0.5, 0.3, 0.9, 0.2, 0.4}, 2, 3);
        CHECK(scalar(supervised_loss_terms(r, r, 1.0).total) == 0.0);
    }
    SUBCASE("constant offset") {
        const Var r = rows(t, {0.1, 0.5, 0.3, 0.9, 0.2, 0.4}, 2, 3);
        const Var h = rows(t, {0.2, 0.6, 0.4, 1.0, 0.3, 0.5}, 2, 3);
        const auto l = supervised_loss_terms(h, r, 1.0);
        CHECK(std::fabs(scalar(l.term1) - 0.01) < 1e-12);
        CHECK(std::fabs(scalar(l.term2)) < 1e-12);
        CHECK(std::fabs(scalar(l.total) - 0.01) < 1e-12);
    }
    SUBCASE("two-band swap") {
        const auto l = supervised_loss_terms(rows(t, {1.0, 0.0}, 1, 2), rows(t, {0.0, 1.0}, 1, 2), 1.0);
        CHECK(std::fabs(scalar(l.term1) - 1.0) < 1e-12);
        CHECK(std::fabs(scalar(l.term2) - 4.0) < 1e-12);
        CHECK(std::fabs(scalar(l.total) - 5.0) < 1e-12);
        CHECK_FALSE(l.has_term3);
    }
    SUBCASE("lambda weights the difference term") {
        const auto l = supervised_loss_terms(rows(t, {1.0, 0.0}, 1, 2), rows(t, {0.0, 1.0}, 1, 2), 0.25);
        CHECK(std::fabs(scalar(l.total) - 2.0) < 1e-12);
    }
}

TEST_CASE("unsupervised loss examples") {
    Tape t;
    const Var flat = rows(t, {0.5, 0.5}, 1, 2);
    const Var tr = rows(t, {0.7, 0.7}, 1, 2);
    const auto l = unsupervised_loss_terms(flat, tr, 1e-2, 1e-2, 1.0);
    CHECK(std::fabs(scalar(l.total) - 0.012) < 1e-12);
    CHECK(scalar(l.term3) == 0.0);
    CHECK(l.has_term3);
    CHECK(scalar(unsupervised_loss_terms(flat, tr, 0.0, 0.0, 0.0).total) == 0.0);

    // Hand-evaluated: mean rho 0.375, mean T 0.5, mean |slope| (0.2 + 0.1) / 2.
    const Var r = rows(t, {0.1, 0.3, 0.6, 0.5}, 2, 2);
    const Var t2 = rows(t, {0.4, 0.6}, 1, 2);
    const auto l2 = unsupervised_loss_terms(r, t2, 2.0, 3.0, 5.0);
    CHECK(std::fabs(scalar(l2.total) - (2.0 * 0.375 + 3.0 * 0.5 + 5.0 * (0.2 + 0.1) / 2.0)) < 1e-12);
}

TEST_CASE("finite-difference term ignores per-pixel constants") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        const std::size_t n = 3, nb = 7;
        auto r = test::uniform(rng, n * nb, 0.0, 1.0);
        auto h = test::uniform(rng, n * nb, 0.0, 1.0);
        const double before = scalar(supervised_loss_terms(rows(t, h, n, nb), rows(t, r, n, nb), 1.0).term2);
        for (std::size_t p = 0; p < n; ++p) {
            const double k = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
            for (std::size_t i = 0; i < nb; ++i) {
                r[p * nb + i] += k;
                h[p * nb + i] += k;
            }
        }
        const double after = scalar(supervised_loss_terms(rows(t, h, n, nb), rows(t, r, n, nb), 1.0).term2);
        CHECK(after == doctest::Approx(before).epsilon(1e-10));
    }
}

TEST_CASE("supervised loss requires truth") {
    Tape t;
    const auto m = TransmissionModel::identity(3);
    const auto tm = trace(m, t, true);
    const SceneNormalization norm({0.0, 0.0, 0.0}, 1.0);
    const std::vector<PixelSample> px{PixelSample(0, 0, Spectrum({0.1, 0.2, 0.3}, Unit::Radiance))};
    CHECK_THROWS_AS((void)supervised_loss(tm, norm, px, ode::SolverConfig{}, 1.0), Error);
    try {
        (void)supervised_loss(tm, norm, px, ode::SolverConfig{}, 1.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidDataset);
    }
    CHECK_NOTHROW((void)unsupervised_loss(tm, norm, px, ode::SolverConfig{}, 1e-2, 1e-2, 1.0));
    CHECK_THROWS_AS((void)unsupervised_loss(tm, norm, std::vector<PixelSample>{}, ode::SolverConfig{}, 1, 1, 1),
                    Error);
}

TEST_CASE("loss gradients match central differences") {
    std::mt19937_64 rng(2024);
    const std::size_t nb = 4;
    ode::SolverConfig solver;
    solver.steps = 8;
    for (int trial = 0; trial < 8; ++trial) {
        std::vector<PixelSample> px;
        for (std::size_t p = 0; p < 2; ++p)
            px.emplace_back(p, 0, Spectrum(test::uniform(rng, nb, 5.0, 60.0), Unit::Radiance),
                            Spectrum(test::uniform(rng, nb, 0.0, 1.0), Unit::Reflectance));
        const SceneNormalization norm(test::uniform(rng, nb, 0.0, 5.0), 60.0);
        for (bool linear : {true, false})
            for (bool supervised : {true, false}) {
                CAPTURE(trial);
                CAPTURE(linear);
                CAPTURE(supervised);
                const auto model = linear ? TransmissionModel::linear_from_raw(test::uniform(rng, nb, -1.5, 1.0))
                                          : TransmissionModel::nonlinear_random(nb, rng);
                Tape t;
                const auto tm = trace(model, t, true);
                const auto loss = supervised ? supervised_loss(tm, norm, px, solver, 1.0)
                                             : unsupervised_loss(tm, norm, px, solver, 1e-2, 1e-2, 1.0);
                const auto grads = t.backward(loss.total);
                const auto analytic = test::to_vec(grads.wrt(tm.theta));
                const auto p0 = test::to_vec(model.params());
                const auto numeric = test::numeric_gradient(
                    [&](const std::vector<double>& p) { return loss_value(model, p, supervised, norm, px, solver); },
                    p0);
                CHECK(test::rel_error(analytic, numeric, 1e-6) < 1e-3);
            }
    }
}
