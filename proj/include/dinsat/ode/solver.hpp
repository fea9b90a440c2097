#pragma once

#include <cstddef>
#include <functional>
#include <string_view>

#include "dinsat/diff/tape.hpp"

namespace dinsat::ode {

enum class Method { Euler, Rk4 };

/// How the reverse solve is computed.
///   Discrete:  exact inverse of the forward step map. Each reverse step
///              starts from a backward step of the same method and applies
///              defect corrections until forward(y) reproduces the target.
///              Converges while |h * df/dL| stays below about 1; otherwise
///              the solve raises a numeric error.
///   Integrate: plain backward integration of the same right-hand side;
///              inverts the forward map only up to discretization error.
enum class InverseMode { Discrete, Integrate };

std::string_view to_string(Method m) noexcept;
std::string_view to_string(InverseMode m) noexcept;
Method method_from_string(std::string_view s);
InverseMode inverse_mode_from_string(std::string_view s);

struct SolverConfig {
    Method method = Method::Rk4;
    int steps = 16;
    double x0 = 0.0;
    double x_end = 1.0;
    InverseMode inverse = InverseMode::Discrete;

    void validate() const;
    double step_size() const noexcept { return (x_end - x0) / steps; }

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// Right-hand side f(L) evaluated on the tape. Rows are independent states.
using Rhs = std::function<diff::Var(diff::Var)>;

inline constexpr double kOverflowGuard = 1e12;

/// One explicit step of `method` with signed step size h.
diff::Var step(const Rhs& f, diff::Var y, double h, Method method);

/// L(x_end) from L(x0) with `steps` uniform steps, fully traced.
diff::Var ode_solve(const Rhs& f, diff::Var l_init, const SolverConfig& config);

/// L(x0) from L(x_end). Any state component above kOverflowGuard in
/// magnitude raises a numeric error.
diff::Var ode_solve_reverse(const Rhs& f, diff::Var l_final, const SolverConfig& config);

/// Linear diagonal systems dL/dx = rate * L with `rate` a 1 x n row
/// constant in x. One step of `method` multiplies the state by the
/// method's stability polynomial R(h * rate), so a whole solve is a single
/// broadcast multiply by R^steps. Matches ode_solve with the same right-hand
/// side up to rounding, and the reverse form is the exact inverse of the
/// discrete forward map (Discrete) or the backward-step map (Integrate).
diff::Var step_factor(diff::Var rate, double h, Method method);
diff::Var ode_solve_diagonal(diff::Var rate, diff::Var l_init, const SolverConfig& config);
diff::Var ode_solve_diagonal_reverse(diff::Var rate, diff::Var l_final, const SolverConfig& config);

}  // namespace dinsat::ode
