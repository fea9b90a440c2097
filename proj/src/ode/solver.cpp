#include "dinsat/ode/solver.hpp"

#include <cmath>
#include <string>

#include "dinsat/error.hpp"
#include "dinsat/simd/kernels.hpp"

namespace dinsat::ode {

using diff::Var;

std::string_view to_string(Method m) noexcept { return m == Method::Euler ? "euler" : "rk4"; }

std::string_view to_string(InverseMode m) noexcept {
    return m == InverseMode::Discrete ? "discrete" : "integrate";
}

Method method_from_string(std::string_view s) {
    if (s == "euler") return Method::Euler;
    if (s == "rk4") return Method::Rk4;
    fail(ErrorKind::Config, "unknown solver method '" + std::string(s) + "' (expected euler|rk4)");
}

InverseMode inverse_mode_from_string(std::string_view s) {
    if (s == "discrete") return InverseMode::Discrete;
    if (s == "integrate") return InverseMode::Integrate;
    fail(ErrorKind::Config, "unknown inverse mode '" + std::string(s) + "' (expected discrete|integrate)");
}

void SolverConfig::validate() const {
    require(steps >= 1, ErrorKind::Config, "solver steps must be >= 1");
    require(std::isfinite(x0) && std::isfinite(x_end) && x0 != x_end, ErrorKind::Config,
            "solver interval must be finite with x0 != x_end");
}

Var step(const Rhs& f, Var y, double h, Method method) {
    if (method == Method::Euler) return diff::axpy(y, h, f(y));
    const Var k1 = f(y);
    const Var k2 = f(diff::axpy(y, 0.5 * h, k1));
    const Var k3 = f(diff::axpy(y, 0.5 * h, k2));
    const Var k4 = f(diff::axpy(y, h, k3));
    Var s = diff::axpy(k1, 2.0, k2);
    s = diff::axpy(s, 2.0, k3);
    s = diff::add(s, k4);
    return diff::axpy(y, h / 6.0, s);
}

namespace {

double max_abs(Var v) {
    const auto x = v.value();
    return simd::active().max_abs(x.data(), x.size());
}

[[noreturn]] void rethrow_at(const Error& e, int index, const char* dir) {
    fail(e.kind(), std::string(dir) + " step " + std::to_string(index) + ": " + e.what());
}

// Finds y with step(y, h) == target. Predictor: backward step B(target).
// Correction: y <- y + B(target) - B(F(y)).
Var invert_step(const Rhs& f, Var target, double h, Method method) {
    const Var predictor = step(f, target, -h, method);
    const double scale = std::fmax(1.0, max_abs(target));
    const int max_iter = method == Method::Rk4 ? 12 : 200;
    Var y = predictor;
    Var best = y;
    double best_res = INFINITY;
    for (int it = 0; it <= max_iter; ++it) {
        const Var fy = step(f, y, h, method);
        const double res = max_abs(diff::sub(target, fy));
        if (!(res < best_res)) break;
        best = y;
        best_res = res;
        if (res <= 1e-14 * scale || it == max_iter) break;
        y = diff::add(y, diff::sub(predictor, step(f, fy, -h, method)));
    }
    if (!(best_res <= 1e-8 * scale))
        fail(ErrorKind::Numeric, "step inverse did not converge (residual " + std::to_string(best_res) +
                                     "); reduce the step size");
    return best;
}

}  // namespace

Var ode_solve(const Rhs& f, Var l_init, const SolverConfig& config) {
    config.validate();
    const double h = config.step_size();
    Var y = l_init;
    for (int i = 0; i < config.steps; ++i) {
        try {
            y = step(f, y, h, config.method);
        } catch (const Error& e) {
            rethrow_at(e, i, "forward");
        }
    }
    return y;
}

Var ode_solve_reverse(const Rhs& f, Var l_final, const SolverConfig& config) {
    config.validate();
    const double h = config.step_size();
    Var y = l_final;
    for (int i = 0; i < config.steps; ++i) {
        try {
            y = config.inverse == InverseMode::Discrete ? invert_step(f, y, h, config.method)
                                                        : step(f, y, -h, config.method);
        } catch (const Error& e) {
            rethrow_at(e, i, "reverse");
        }
        const double m = max_abs(y);
        if (!(m <= kOverflowGuard))
            fail(ErrorKind::Numeric, "reverse step " + std::to_string(i) + ": state magnitude " +
                                         std::to_string(m) + " exceeds overflow guard");
    }
    return y;
}

Var step_factor(Var rate, double h, Method method) {
    diff::Tape& tape = rate.tape();
    const Var one = tape.constant(std::vector<double>(rate.shape().size(), 1.0), rate.shape());
    const Var z = diff::scale(rate, h);
    if (method == Method::Euler) return diff::add(one, z);
    // 1 + z (1 + z/2 (1 + z/3 (1 + z/4)))
    Var p = diff::axpy(one, 0.25, z);
    p = diff::axpy(one, 1.0 / 3.0, diff::mul(z, p));
    p = diff::axpy(one, 0.5, diff::mul(z, p));
    return diff::add(one, diff::mul(z, p));
}

namespace {

Var power(Var base, int n) {
    Var acc = base;
    for (int i = 1; i < n; ++i) acc = diff::mul(acc, base);
    return acc;
}

}  // namespace

Var ode_solve_diagonal(Var rate, Var l_init, const SolverConfig& config) {
    config.validate();
    const Var total = power(step_factor(rate, config.step_size(), config.method), config.steps);
    return diff::mul_row(l_init, total);
}

Var ode_solve_diagonal_reverse(Var rate, Var l_final, const SolverConfig& config) {
    config.validate();
    const double h = config.step_size();
    Var y;
    try {
        y = config.inverse == InverseMode::Discrete
                ? diff::div_row(l_final, power(step_factor(rate, h, config.method), config.steps))
                : diff::mul_row(l_final, power(step_factor(rate, -h, config.method), config.steps));
    } catch (const Error& e) {
        fail(e.kind(), std::string("reverse solve: ") + e.what());
    }
    const double m = max_abs(y);
    if (!(m <= kOverflowGuard))
        fail(ErrorKind::Numeric, "reverse solve: state magnitude " + std::to_string(m) + " exceeds overflow guard");
    return y;
}

}  // namespace dinsat::ode
