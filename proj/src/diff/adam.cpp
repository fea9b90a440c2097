#include "dinsat/diff/adam.hpp"

#include <cmath>
#include <string>

#include "dinsat/error.hpp"

namespace dinsat::diff {

AdamState::AdamState(std::size_t n, AdamHyper h) : hyper(h), m(n, 0.0), v(n, 0.0) {
    require(h.lr > 0, ErrorKind::Config, "Adam learning rate must be positive");
    require(h.beta1 >= 0 && h.beta1 < 1 && h.beta2 >= 0 && h.beta2 < 1, ErrorKind::Config,
            "Adam betas must lie in [0, 1)");
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
    const std::size_t n = params.size();
    require(grads.size() == n && s.m.size() == n && s.v.size() == n, ErrorKind::Shape,
            "adam_step: parameter, gradient and moment lengths differ");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads[i]))
            fail(ErrorKind::Numeric, "adam_step: non-finite gradient at index " + std::to_string(i));

    const auto& h = s.hyper;
    s.t += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        s.m[i] = h.beta1 * s.m[i] + (1.0 - h.beta1) * g;
        s.v[i] = h.beta2 * s.v[i] + (1.0 - h.beta2) * g * g;
        const double m_hat = s.m[i] / bc1;
        const double v_hat = s.v[i] / bc2;
        params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
}

}  // namespace dinsat::diff
