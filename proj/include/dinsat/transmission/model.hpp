#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dinsat/core/types.hpp"
#include "dinsat/diff/mlp.hpp"
#include "dinsat/diff/tape.hpp"
#include "dinsat/ode/solver.hpp"

namespace dinsat {

enum class ModelKind { Linear, Nonlinear };

std::string_view to_string(ModelKind k) noexcept;
ModelKind model_kind_from_string(std::string_view s);

/// Parameters of the transmission ODE right-hand side.
///
/// Linear:    dL/dx = -alpha * L, alpha = softplus(raw), one raw per band.
/// Nonlinear: dL/dx = -sigmoid(h(g(L))) * L, with encoder g: bands -> 12 -> q
///            and decoder h: q -> 12 -> bands (sigmoid hidden layers, linear
///            outputs). The decay rate is confined to [-1, 0].
///
/// `params` is the flat vector the optimizer updates: raw alphas for the
/// linear profile, encoder then decoder weights for the nonlinear one.
class TransmissionModel {
public:
    static constexpr std::size_t kDefaultLatent = 3;
    static constexpr std::size_t kDefaultHidden = 12;

    static TransmissionModel linear_from_raw(std::vector<double> raw);
    static TransmissionModel linear_from_alpha(std::span<const double> alpha);
    /// alpha uniform in [0.4, 0.6].
    static TransmissionModel linear_random(std::size_t bands, std::mt19937_64& rng);
    /// alpha ~ 0 in every band (raw = -40).
    static TransmissionModel identity(std::size_t bands);

    static TransmissionModel nonlinear(std::size_t bands, std::vector<double> params,
                                       std::size_t latent = kDefaultLatent,
                                       std::size_t hidden = kDefaultHidden);
    static TransmissionModel nonlinear_zero(std::size_t bands, std::size_t latent = kDefaultLatent,
                                            std::size_t hidden = kDefaultHidden);
    static TransmissionModel nonlinear_random(std::size_t bands, std::mt19937_64& rng,
                                              std::size_t latent = kDefaultLatent,
                                              std::size_t hidden = kDefaultHidden);

    ModelKind kind() const noexcept { return kind_; }
    std::size_t bands() const noexcept { return bands_; }
    std::size_t latent() const noexcept { return latent_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::span<const double> params() const noexcept { return params_; }
    std::span<double> mutable_params() noexcept { return params_; }

    diff::MlpLayout encoder_layout() const;
    diff::MlpLayout decoder_layout() const;

    /// Effective per-band absorption (linear profile only).
    std::vector<double> alpha() const;

    friend bool operator==(const TransmissionModel&, const TransmissionModel&) = default;

private:
    TransmissionModel(ModelKind k, std::size_t bands, std::size_t latent, std::size_t hidden,
                      std::vector<double> params);

    ModelKind kind_;
    std::size_t bands_;
    std::size_t latent_;
    std::size_t hidden_;
    std::vector<double> params_;
};

/// A model placed on a tape: its parameter node and the right-hand side
/// closure built from it. Linear models also expose their rate row
/// (-alpha), which the solves below use in closed form.
struct TracedModel {
    diff::Var theta;
    ode::Rhs rhs;
    std::optional<diff::Var> rate;
};

/// `differentiable` makes theta a leaf (gradients wanted) or a constant.
TracedModel trace(const TransmissionModel& model, diff::Tape& tape, bool differentiable);

/// Forward (T) and reverse (T^-1) solves of a traced model.
diff::Var solve_forward(const TracedModel& model, diff::Var l, const ode::SolverConfig& solver);
diff::Var solve_reverse(const TracedModel& model, diff::Var l, const ode::SolverConfig& solver);

// Plain right-hand sides for one state vector.
std::vector<double> rhs_linear(std::span<const double> l, const TransmissionModel& model);
std::vector<double> rhs_nonlinear(std::span<const double> l, const TransmissionModel& model);

/// T(L): forward solve of the model's ODE.
Spectrum transmit(const TransmissionModel& model, const Spectrum& l, const ode::SolverConfig& solver);
/// T^-1(L): reverse solve.
Spectrum invert_transmit(const TransmissionModel& model, const Spectrum& l,
                         const ode::SolverConfig& solver);
/// T(1_n), unit transmittance.
Spectrum transmittance_spectrum(const TransmissionModel& model, const ode::SolverConfig& solver);

/// Batched forms over `rows` row-major spectra of model.bands() values.
std::vector<double> transmit_batch(const TransmissionModel& model, std::span<const double> rows,
                                   const ode::SolverConfig& solver);
std::vector<double> invert_transmit_batch(const TransmissionModel& model, std::span<const double> rows,
                                          const ode::SolverConfig& solver);

}  // namespace dinsat
