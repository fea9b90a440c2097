#include "dinsat/transmission/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dinsat/error.hpp"

namespace dinsat {

using diff::Var;

std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::Linear ? "linear" : "nonlinear"; }

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "linear") return ModelKind::Linear;
    if (s == "nonlinear") return ModelKind::Nonlinear;
    fail(ErrorKind::Config, "unknown model kind '" + std::string(s) + "' (expected linear|nonlinear)");
}

TransmissionModel::TransmissionModel(ModelKind k, std::size_t bands, std::size_t latent,
                                     std::size_t hidden, std::vector<double> params)
    : kind_(k), bands_(bands), latent_(latent), hidden_(hidden), params_(std::move(params)) {
    require(bands_ >= 2, ErrorKind::Config, "transmission model needs at least 2 bands");
    std::size_t expected = bands_;
    if (kind_ == ModelKind::Nonlinear) {
        require(latent_ > 0 && hidden_ > 0, ErrorKind::Config, "latent and hidden sizes must be positive");
        expected = encoder_layout().param_count() + decoder_layout().param_count();
    }
    require(params_.size() == expected, ErrorKind::Shape,
            std::string(to_string(kind_)) + " model expects " + std::to_string(expected) +
                " parameters, got " + std::to_string(params_.size()));
    for (double v : params_) require(std::isfinite(v), ErrorKind::Numeric, "non-finite model parameter");
}

TransmissionModel TransmissionModel::linear_from_raw(std::vector<double> raw) {
    const auto n = raw.size();
    return TransmissionModel(ModelKind::Linear, n, 0, 0, std::move(raw));
}

TransmissionModel TransmissionModel::linear_from_alpha(std::span<const double> alpha) {
    std::vector<double> raw(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        require(alpha[i] >= 0, ErrorKind::Config, "absorption must be nonnegative");
        raw[i] = alpha[i] > 0 ? diff::softplus_inverse(alpha[i]) : -40.0;
    }
    return linear_from_raw(std::move(raw));
}

TransmissionModel TransmissionModel::linear_random(std::size_t bands, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.4, 0.6);
    std::vector<double> raw(bands);
    for (double& r : raw) r = diff::softplus_inverse(dist(rng));
    return linear_from_raw(std::move(raw));
}

TransmissionModel TransmissionModel::identity(std::size_t bands) {
    return linear_from_raw(std::vector<double>(bands, -40.0));
}

TransmissionModel TransmissionModel::nonlinear(std::size_t bands, std::vector<double> params,
                                               std::size_t latent, std::size_t hidden) {
    return TransmissionModel(ModelKind::Nonlinear, bands, latent, hidden, std::move(params));
}

TransmissionModel TransmissionModel::nonlinear_zero(std::size_t bands, std::size_t latent,
                                                    std::size_t hidden) {
    const std::size_t n = diff::hidden_sigmoid_layout({bands, hidden, latent}).param_count() +
                          diff::hidden_sigmoid_layout({latent, hidden, bands}).param_count();
    return nonlinear(bands, std::vector<double>(n, 0.0), latent, hidden);
}

TransmissionModel TransmissionModel::nonlinear_random(std::size_t bands, std::mt19937_64& rng,
                                                      std::size_t latent, std::size_t hidden) {
    const auto enc = diff::hidden_sigmoid_layout({bands, hidden, latent});
    const auto dec = diff::hidden_sigmoid_layout({latent, hidden, bands});
    std::vector<double> p(enc.param_count() + dec.param_count());
    diff::init_glorot(enc, rng, std::span<double>(p).first(enc.param_count()));
    diff::init_glorot(dec, rng, std::span<double>(p).subspan(enc.param_count()));
    return nonlinear(bands, std::move(p), latent, hidden);
}

diff::MlpLayout TransmissionModel::encoder_layout() const {
    return diff::hidden_sigmoid_layout({bands_, hidden_, latent_});
}

diff::MlpLayout TransmissionModel::decoder_layout() const {
    return diff::hidden_sigmoid_layout({latent_, hidden_, bands_});
}

std::vector<double> TransmissionModel::alpha() const {
    require(kind_ == ModelKind::Linear, ErrorKind::Contract, "alpha() is defined for linear models only");
    std::vector<double> a(params_.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = diff::softplus(params_[i]);
    return a;
}

TracedModel trace(const TransmissionModel& model, diff::Tape& tape, bool differentiable) {
    std::vector<double> p(model.params().begin(), model.params().end());
    const diff::Shape shape{1, p.size()};
    const Var theta = differentiable ? tape.leaf(std::move(p), shape) : tape.constant(std::move(p), shape);

    if (model.kind() == ModelKind::Linear) {
        const Var neg_alpha = diff::neg(diff::softplus(theta));
        return {theta, [neg_alpha](Var l) { return diff::mul_row(l, neg_alpha); }, neg_alpha};
    }
    const auto enc = model.encoder_layout();
    const auto dec = model.decoder_layout();
    const std::size_t dec_offset = enc.param_count();
    return {theta, [enc, dec, dec_offset, theta](Var l) {
                const Var z = diff::mlp_forward(enc, theta, 0, l);
                const Var rate = diff::mlp_forward(dec, theta, dec_offset, z);
                return diff::mul(diff::neg(diff::sigmoid(rate)), l);
            },
            std::nullopt};
}

Var solve_forward(const TracedModel& model, Var l, const ode::SolverConfig& solver) {
    return model.rate ? ode::ode_solve_diagonal(*model.rate, l, solver) : ode::ode_solve(model.rhs, l, solver);
}

Var solve_reverse(const TracedModel& model, Var l, const ode::SolverConfig& solver) {
    return model.rate ? ode::ode_solve_diagonal_reverse(*model.rate, l, solver)
                      : ode::ode_solve_reverse(model.rhs, l, solver);
}

std::vector<double> rhs_linear(std::span<const double> l, const TransmissionModel& model) {
    require(model.kind() == ModelKind::Linear, ErrorKind::Contract, "rhs_linear on a nonlinear model");
    require(l.size() == model.bands(), ErrorKind::Shape,
            "rhs_linear: state length " + std::to_string(l.size()) + " != bands " +
                std::to_string(model.bands()));
    const auto a = model.alpha();
    std::vector<double> out(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) out[i] = -a[i] * l[i];
    return out;
}

std::vector<double> rhs_nonlinear(std::span<const double> l, const TransmissionModel& model) {
    require(model.kind() == ModelKind::Nonlinear, ErrorKind::Contract, "rhs_nonlinear on a linear model");
    require(l.size() == model.bands(), ErrorKind::Shape,
            "rhs_nonlinear: state length " + std::to_string(l.size()) + " != bands " +
                std::to_string(model.bands()));
    const auto enc = model.encoder_layout();
    const auto p = model.params();
    const diff::MlpParams g(enc, std::vector<double>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(enc.param_count())));
    const diff::MlpParams h(model.decoder_layout(),
                            std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(enc.param_count()), p.end()));
    const auto rate = h.forward(g.forward(l));
    std::vector<double> out(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) out[i] = -diff::sigmoid(rate[i]) * l[i];
    return out;
}

namespace {

// Inference solves run on short-lived tapes over chunks of pixels so the
// recorded intermediates stay small.
constexpr std::size_t kChunkRows = 32;

template <typename Solve>
std::vector<double> batch(const TransmissionModel& model, std::span<const double> rows,
                          const ode::SolverConfig& solver, Solve solve) {
    const std::size_t nb = model.bands();
    require(rows.size() % nb == 0, ErrorKind::Shape,
            "batch length " + std::to_string(rows.size()) + " is not a multiple of bands " + std::to_string(nb));
    const std::size_t n = rows.size() / nb;
    std::vector<double> out(rows.size());
    diff::Tape tape;
    for (std::size_t start = 0; start < n; start += kChunkRows) {
        const std::size_t count = std::min(kChunkRows, n - start);
        tape.clear();
        const TracedModel tm = trace(model, tape, false);
        const Var x = tape.constant(
            std::vector<double>(rows.begin() + static_cast<std::ptrdiff_t>(start * nb),
                                rows.begin() + static_cast<std::ptrdiff_t>((start + count) * nb)),
            {count, nb});
        const Var y = solve(tm, x, solver);
        std::copy(y.value().begin(), y.value().end(), out.begin() + static_cast<std::ptrdiff_t>(start * nb));
    }
    return out;
}

void check_spectrum(const TransmissionModel& model, const Spectrum& l) {
    require(l.size() == model.bands(), ErrorKind::Shape,
            "spectrum has " + std::to_string(l.size()) + " bands, model has " + std::to_string(model.bands()));
}

}  // namespace

std::vector<double> transmit_batch(const TransmissionModel& model, std::span<const double> rows,
                                   const ode::SolverConfig& solver) {
    return batch(model, rows, solver, solve_forward);
}

std::vector<double> invert_transmit_batch(const TransmissionModel& model, std::span<const double> rows,
                                          const ode::SolverConfig& solver) {
    return batch(model, rows, solver, solve_reverse);
}

Spectrum transmit(const TransmissionModel& model, const Spectrum& l, const ode::SolverConfig& solver) {
    check_spectrum(model, l);
    return Spectrum(transmit_batch(model, l.values(), solver), l.unit());
}

Spectrum invert_transmit(const TransmissionModel& model, const Spectrum& l, const ode::SolverConfig& solver) {
    check_spectrum(model, l);
    return Spectrum(invert_transmit_batch(model, l.values(), solver), l.unit());
}

Spectrum transmittance_spectrum(const TransmissionModel& model, const ode::SolverConfig& solver) {
    const std::vector<double> ones(model.bands(), 1.0);
    return Spectrum(transmit_batch(model, ones, solver), Unit::Transmittance);
}

}  // namespace dinsat
