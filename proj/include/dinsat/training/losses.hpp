#pragma once

#include <span>

#include "dinsat/core/types.hpp"
#include "dinsat/correction/correction.hpp"
#include "dinsat/diff/tape.hpp"
#include "dinsat/ode/solver.hpp"
#include "dinsat/transmission/model.hpp"

namespace dinsat {

/// A traced loss and its itemized terms (unweighted).
///   supervised:   terms = {mse, fd, -}
///   unsupervised: terms = {mean rho, mean T(1), mean |slope|}
struct LossTerms {
    diff::Var total;
    diff::Var term1;
    diff::Var term2;
    diff::Var term3;
    bool has_term3 = false;
};

/// L = MSE(rho, rho_hat) + lambda * mean(((rho_{i+1} - rho_i) - (rho_hat_{i+1} - rho_hat_i))^2)
LossTerms supervised_loss_terms(diff::Var rho_hat, diff::Var rho_true, double lambda);

/// L = l1 * mean(rho_hat) + l2 * mean(T(1)) + l3 * mean(|rho_hat_{i+1} - rho_hat_i|)
LossTerms unsupervised_loss_terms(diff::Var rho_hat, diff::Var transmittance, double l1, double l2,
                                  double l3);

/// Normalized radiance rows of `batch` as a constant node.
diff::Var normalized_batch(diff::Tape& tape, std::span<const PixelSample> batch,
                           const SceneNormalization& norm);
/// Truth reflectance rows; invalid-dataset error if a sample lacks truth.
diff::Var truth_batch(diff::Tape& tape, std::span<const PixelSample> batch);

LossTerms supervised_loss(const TracedModel& model, const SceneNormalization& norm,
                          std::span<const PixelSample> batch, const ode::SolverConfig& solver,
                          double lambda);

LossTerms unsupervised_loss(const TracedModel& model, const SceneNormalization& norm,
                            std::span<const PixelSample> batch, const ode::SolverConfig& solver,
                            double l1, double l2, double l3);

}  // namespace dinsat
