#include "dinsat/training/losses.hpp"

#include <string>

#include "dinsat/error.hpp"

namespace dinsat {

using diff::Var;

LossTerms supervised_loss_terms(Var rho_hat, Var rho_true, double lambda) {
    const Var mse = diff::mean(diff::square(diff::sub(rho_true, rho_hat)));
    const Var fd = diff::mean(diff::square(diff::sub(diff::band_diff(rho_true), diff::band_diff(rho_hat))));
    const Var total = diff::axpy(mse, lambda, fd);
    return {total, mse, fd, fd, false};
}

LossTerms unsupervised_loss_terms(Var rho_hat, Var transmittance, double l1, double l2, double l3) {
    const Var l_rho = diff::mean(rho_hat);
    const Var l_t = diff::mean(transmittance);
    const Var l_fd = diff::mean(diff::abs(diff::band_diff(rho_hat)));
    Var total = diff::scale(l_rho, l1);
    total = diff::axpy(total, l2, l_t);
    total = diff::axpy(total, l3, l_fd);
    return {total, l_rho, l_t, l_fd, true};
}

Var normalized_batch(diff::Tape& tape, std::span<const PixelSample> batch, const SceneNormalization& norm) {
    require(!batch.empty(), ErrorKind::InvalidDataset, "loss evaluated on an empty batch");
    const std::size_t nb = norm.bands();
    std::vector<double> x;
    x.reserve(batch.size() * nb);
    for (const auto& s : batch) {
        const auto xs = norm.normalize(s.l4.values());
        x.insert(x.end(), xs.begin(), xs.end());
    }
    return tape.constant(std::move(x), {batch.size(), nb});
}

Var truth_batch(diff::Tape& tape, std::span<const PixelSample> batch) {
    require(!batch.empty(), ErrorKind::InvalidDataset, "loss evaluated on an empty batch");
    const std::size_t nb = batch.front().l4.size();
    std::vector<double> t;
    t.reserve(batch.size() * nb);
    for (const auto& s : batch) {
        if (!s.truth_rho)
            fail(ErrorKind::InvalidDataset, "supervised loss: pixel (" + std::to_string(s.row) + "," +
                                                std::to_string(s.col) + ") has no truth reflectance");
        t.insert(t.end(), s.truth_rho->values().begin(), s.truth_rho->values().end());
    }
    return tape.constant(std::move(t), {batch.size(), nb});
}

LossTerms supervised_loss(const TracedModel& model, const SceneNormalization& norm,
                          std::span<const PixelSample> batch, const ode::SolverConfig& solver, double lambda) {
    diff::Tape& tape = model.theta.tape();
    const Var truth = truth_batch(tape, batch);
    const Var x = normalized_batch(tape, batch, norm);
    const auto corr = trace_correction(model, x, solver);
    return supervised_loss_terms(corr.rho_hat, truth, lambda);
}

LossTerms unsupervised_loss(const TracedModel& model, const SceneNormalization& norm,
                            std::span<const PixelSample> batch, const ode::SolverConfig& solver, double l1,
                            double l2, double l3) {
    diff::Tape& tape = model.theta.tape();
    const Var x = normalized_batch(tape, batch, norm);
    const auto corr = trace_correction(model, x, solver);
    return unsupervised_loss_terms(corr.rho_hat, corr.transmittance, l1, l2, l3);
}

}  // namespace dinsat
