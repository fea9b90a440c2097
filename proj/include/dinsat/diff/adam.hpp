#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dinsat::diff {

struct AdamHyper {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam moment estimates for one flat parameter vector.
struct AdamState {
    AdamHyper hyper;
    std::uint64_t t = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState(std::size_t n, AdamHyper h = {});
};

/// One bias-corrected Adam update of `params` in place. Throws a numeric
/// error, leaving params and state untouched, if any gradient is non-finite.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace dinsat::diff
