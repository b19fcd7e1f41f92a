/*
 Copyright 2026 The normform Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef NORMFORM_NF_AUTOENCODER_HPP
#define NORMFORM_NF_AUTOENCODER_HPP

#include "normform/core.hpp"
#include "normform/dataset.hpp"
#include "normform/mlp.hpp"
#include "normform/normal_forms.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace normform {

/// State autoencoder (phi1, psi1) and parameter autoencoder (phi2, psi2)
/// tied together by a normal form. tau = exp(log_tau) stays positive.
struct NfAutoencoder {
    Mlp phi1, psi1, phi2, psi2;
    NormalForm nf;
    bool tau_trainable = false;
    double log_tau = 0.0;

    long latent_dim() const { return nf.dim(); }
    long state_dim() const { return phi1.in_dim(); }
    double tau() const { return std::exp(log_tau); }

    void set_tau(double tau) {
        require(std::isfinite(tau) && tau > 0.0, "tau must be positive");
        log_tau = std::log(tau);
        nf.tau = tau;
    }

    /// Normal form carrying the current tau.
    NormalForm normal_form() const {
        NormalForm out = nf;
        out.tau = tau();
        return out;
    }

    void validate() const {
        phi1.validate();
        psi1.validate();
        phi2.validate();
        psi2.validate();
        nf.validate();
        require(phi1.out_dim() == latent_dim() && psi1.in_dim() == latent_dim(),
                "state autoencoder latent size must equal the normal form dimension");
        require(psi1.out_dim() == phi1.in_dim(), "psi1 must map back to the state dimension");
        require(phi2.in_dim() == 1 && phi2.out_dim() == 1 && psi2.in_dim() == 1 && psi2.out_dim() == 1,
                "parameter autoencoder must be scalar to scalar");
    }
};

struct ArchitectureSpec {
    long state_dim = 1;
    std::vector<long> phi1_hidden{16, 16};
    std::vector<long> psi1_hidden{16, 16};
    std::vector<long> phi2_hidden{16, 16};
    std::vector<long> psi2_hidden{16, 16};
    Activation activation = Activation::Tanh;
};

inline std::vector<long> chain(long in, const std::vector<long>& hidden, long out) {
    std::vector<long> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

inline NfAutoencoder make_autoencoder(const ArchitectureSpec& arch, const NormalForm& nf, bool tau_trainable,
                                      std::uint64_t seed) {
    nf.validate();
    NfAutoencoder m;
    m.nf = nf;
    const long d = nf.dim();
    m.phi1 = init(chain(arch.state_dim, arch.phi1_hidden, d), arch.activation, seed * 4 + 0);
    m.psi1 = init(chain(d, arch.psi1_hidden, arch.state_dim), arch.activation, seed * 4 + 1);
    m.phi2 = init(chain(1, arch.phi2_hidden, 1), arch.activation, seed * 4 + 2);
    m.psi2 = init(chain(1, arch.psi2_hidden, 1), arch.activation, seed * 4 + 3);
    m.tau_trainable = tau_trainable;
    m.set_tau(nf.tau);
    m.validate();
    return m;
}

struct Encoded {
    Matrix Z;     // latent_dim x cols
    Vector beta;  // per trajectory
};

/// Z = phi1(U), beta = phi2(alpha).
inline Encoded encode(const NfAutoencoder& model, const Matrix& U, const Vector& alpha) {
    Encoded e;
    e.Z = forward(model.phi1, U);
    e.beta = forward(model.phi2, alpha.transpose()).row(0).transpose();
    return e;
}

inline Matrix decode_state(const NfAutoencoder& model, const Matrix& Z) { return forward(model.psi1, Z); }

inline Vector decode_parameter(const NfAutoencoder& model, const Vector& beta) {
    return forward(model.psi2, beta.transpose()).row(0).transpose();
}

/// Chain-rule latent velocity (grad phi1) U_dot.
inline Matrix latent_derivative(const NfAutoencoder& model, const Matrix& U, const Matrix& U_dot) {
    return jvp_input(model.phi1, U, U_dot);
}

/// tau = sqrt(T_alpha / T_beta).
inline double estimate_tau(double data_period, double nf_period) {
    if (!(data_period > 0.0) || !(nf_period > 0.0))
        throw ArgumentError("estimate_tau: periods must be positive");
    return std::sqrt(data_period / nf_period);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Sign relation between alpha and beta enforced by the orientation term.
enum class Orientation { Same, Opposite };

inline std::string to_string(Orientation o) { return o == Orientation::Same ? "same" : "opposite"; }
inline Orientation orientation_from_string(const std::string& s) {
    if (s == "same") return Orientation::Same;
    if (s == "opposite") return Orientation::Opposite;
    throw ConfigError("unknown orientation '" + s + "'");
}

struct LossWeights {
    std::array<double, 6> lambda{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};

    void validate() const {
        for (double l : lambda) require(std::isfinite(l) && l >= 0.0, "loss weights must be finite and >= 0");
    }
};

struct LossConfig {
    LossWeights weights;
    Orientation orientation = Orientation::Same;
    /// Width of the tanh surrogate for sgn(beta).
    double sign_smoothing = 1e-2;
};

/// Weighted loss terms; l[k] already includes lambda_{k+1}.
struct LossReport {
    std::array<double, 6> l{};
    double l6_hard = 0.0;  // weighted term with the exact sign, for monitoring
    double total = 0.0;
};

struct ModelGrads {
    MlpGrads phi1, psi1, phi2, psi2;
    double log_tau = 0.0;
};

struct LossEvaluation {
    LossReport report;
    ModelGrads grads;
    /// d total / d tau (zero when tau is fixed).
    double tau_grad = 0.0;
};

class TrainingDivergence : public NumericError {
public:
    TrainingDivergence(const std::string& what, int term) : NumericError(what), term_(term) {}
    /// 1..6 for a loss term, 0 for the total or a gradient.
    int term() const { return term_; }

private:
    int term_;
};

namespace detail {

inline double sign_target(Orientation o) { return o == Orientation::Same ? 1.0 : -1.0; }

}  // namespace detail

/// Six-term loss on a batch with exact gradients for every parameter.
///
///   L1 = l1/(N tf) sum |u - psi1 phi1 u|^2
///   L2 = l2/(N tf) sum |alpha - psi2 phi2 alpha|^2
///   L3 = l3/(N tf) sum |(grad phi1) u_dot - g(z, beta)|^2
///   L4 = l4/(N tf) sum |u_dot - (grad psi1) g(z, beta)|^2
///   L5 = l5/N sum_j |mean_t z^(j)|_1
///   L6 = l6/N sum_j |sgn alpha_j - s tanh(beta_j / eps)|      (s = +-1)
///
/// g is the tau-scaled normal form. Parameter-space sums over columns of a
/// constant alpha reduce to per-trajectory sums with the 1/N factor.
inline LossEvaluation compute_losses(const NfAutoencoder& model, const Batch& batch, const LossConfig& cfg,
                                     bool with_grads = true) {
    cfg.weights.validate();
    const auto& lam = cfg.weights.lambda;
    const long n_traj = batch.n_trajectories();
    const long T = batch.t_kept;
    const long M = batch.U.cols();
    require(n_traj >= 1 && T >= 1 && M == n_traj * T, "compute_losses: malformed batch");
    require(batch.U.rows() == model.state_dim() && batch.U_dot.rows() == model.state_dim() &&
                batch.U_dot.cols() == M,
            "compute_losses: batch does not match model state dimension");

    const NormalForm nf = model.normal_form();
    const long d = nf.dim();
    const double inv_m = 1.0 / static_cast<double>(M);
    const double inv_n = 1.0 / static_cast<double>(n_traj);

    // Forward.
    const MlpTrace t_phi1 = trace(model.phi1, batch.U, &batch.U_dot);
    const Matrix& Z = t_phi1.output();
    const Matrix& Zdot = t_phi1.output_dot();

    const Matrix alpha_row = batch.alpha.transpose();
    const MlpTrace t_phi2 = trace(model.phi2, alpha_row);
    const Matrix& beta_row = t_phi2.output();
    const MlpTrace t_psi2 = trace(model.psi2, beta_row);
    const Matrix& alpha_hat = t_psi2.output();

    Matrix G(d, M);
    for (long j = 0; j < n_traj; ++j) {
        const double b = beta_row(0, j);
        for (long c = j * T; c < (j + 1) * T; ++c) G.col(c) = eval_rhs_scaled(nf, Z.col(c), b);
    }

    const MlpTrace t_psi1 = trace(model.psi1, Z, &G);
    const Matrix& U_hat = t_psi1.output();
    const Matrix& U_hat_dot = t_psi1.output_dot();

    const Matrix r1 = batch.U - U_hat;
    const Matrix r2 = alpha_row - alpha_hat;
    const Matrix r3 = Zdot - G;
    const Matrix r4 = batch.U_dot - U_hat_dot;

    Matrix zmean(d, n_traj);
    for (long j = 0; j < n_traj; ++j) zmean.col(j) = Z.middleCols(j * T, T).rowwise().mean();

    const double s = detail::sign_target(cfg.orientation);
    const double eps = cfg.sign_smoothing;
    Vector r6(n_traj), r6_hard(n_traj), th(n_traj);
    for (long j = 0; j < n_traj; ++j) {
        th(j) = std::tanh(beta_row(0, j) / eps);
        r6(j) = sgn(batch.alpha(j)) - s * th(j);
        r6_hard(j) = sgn(batch.alpha(j)) - s * sgn(beta_row(0, j));
    }

    LossEvaluation ev;
    LossReport& rep = ev.report;
    rep.l[0] = lam[0] * inv_m * r1.squaredNorm();
    rep.l[1] = lam[1] * inv_n * r2.squaredNorm();
    rep.l[2] = lam[2] * inv_m * r3.squaredNorm();
    rep.l[3] = lam[3] * inv_m * r4.squaredNorm();
    rep.l[4] = lam[4] * inv_n * zmean.cwiseAbs().sum();
    rep.l[5] = lam[5] * inv_n * r6.cwiseAbs().sum();
    rep.l6_hard = lam[5] * inv_n * r6_hard.cwiseAbs().sum();
    rep.total = 0.0;
    for (int k = 0; k < 6; ++k) {
        if (!std::isfinite(rep.l[k]))
            throw TrainingDivergence("non-finite loss term L" + std::to_string(k + 1), k + 1);
        rep.total += rep.l[k];
    }
    if (!with_grads) return ev;

    // Reverse.
    const Matrix gU_hat = (-2.0 * lam[0] * inv_m) * r1;
    const Matrix gU_hat_dot = (-2.0 * lam[3] * inv_m) * r4;
    MlpBackprop bp_psi1 = backward_combined(model.psi1, t_psi1, gU_hat, gU_hat_dot);

    Matrix gZ = std::move(bp_psi1.dx);
    Matrix gG = std::move(bp_psi1.dv);
    const Matrix gZdot = (2.0 * lam[2] * inv_m) * r3;
    gG -= gZdot;

    // Through g(z, beta) / tau^2.
    Vector g_beta = Vector::Zero(n_traj);
    double g_log_tau = 0.0;
    for (long j = 0; j < n_traj; ++j) {
        const double b = beta_row(0, j);
        for (long c = j * T; c < (j + 1) * T; ++c) {
            const Vector zc = Z.col(c);
            gZ.col(c) += eval_rhs_grad_z(nf, zc, b).transpose() * gG.col(c);
            g_beta(j) += eval_rhs_grad_beta(nf, zc, b).dot(gG.col(c));
            // d/d(log tau) of g/tau^2 is -2 g/tau^2.
            g_log_tau += -2.0 * G.col(c).dot(gG.col(c));
        }
    }

    if (lam[4] != 0.0) {
        for (long j = 0; j < n_traj; ++j) {
            Vector sg = zmean.col(j).unaryExpr([](double v) { return sgn(v); });
            gZ.middleCols(j * T, T).colwise() += (lam[4] * inv_n / static_cast<double>(T)) * sg;
        }
    }

    MlpBackprop bp_phi1 = backward_combined(model.phi1, t_phi1, gZ, gZdot);

    const Matrix g_alpha_hat = (-2.0 * lam[1] * inv_n) * r2;
    MlpBackprop bp_psi2 = backward_combined(model.psi2, t_psi2, g_alpha_hat, Matrix());
    Matrix g_beta_row = g_beta.transpose() + bp_psi2.dx;
    if (lam[5] != 0.0) {
        for (long j = 0; j < n_traj; ++j) {
            const double dth = (1.0 - th(j) * th(j)) / eps;
            g_beta_row(0, j) += lam[5] * inv_n * sgn(r6(j)) * (-s) * dth;
        }
    }
    MlpBackprop bp_phi2 = backward_combined(model.phi2, t_phi2, g_beta_row, Matrix());

    ev.grads.phi1 = std::move(bp_phi1.params);
    ev.grads.psi1 = std::move(bp_psi1.params);
    ev.grads.phi2 = std::move(bp_phi2.params);
    ev.grads.psi2 = std::move(bp_psi2.params);
    ev.grads.log_tau = model.tau_trainable ? g_log_tau : 0.0;
    ev.tau_grad = model.tau_trainable ? g_log_tau / nf.tau : 0.0;
    return ev;
}

/// Ratios L3/L1 and L4/L1; the usual target for both is about 1e-2.
struct ConsistencyRatios {
    double l3_over_l1 = 0.0;
    double l4_over_l1 = 0.0;
};

inline ConsistencyRatios consistency_ratios(const LossReport& r) {
    ConsistencyRatios out;
    if (r.l[0] > 0.0) {
        out.l3_over_l1 = r.l[2] / r.l[0];
        out.l4_over_l1 = r.l[3] / r.l[0];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainOptions {
    LossConfig loss;
    long epochs = 1;
    long batch_size = 1;
    double eta = 1e-3;
    std::uint64_t seed = 0;
};

struct HistoryRow {
    long iteration = 0;
    long epoch = 0;
    LossReport report;
    double tau = 1.0;
};

/// Per-iteration callback; return false to stop early.
using TrainCallback = std::function<bool(const HistoryRow&)>;

class TrainingAborted : public TrainingDivergence {
public:
    TrainingAborted(const TrainingDivergence& cause, std::vector<HistoryRow> history)
        : TrainingDivergence(cause.what(), cause.term()), history_(std::move(history)) {}
    const std::vector<HistoryRow>& history() const { return history_; }

private:
    std::vector<HistoryRow> history_;
};

inline std::vector<ParamSlot> parameter_slots(NfAutoencoder& model, const ModelGrads& g) {
    std::vector<ParamSlot> slots;
    append_slots(slots, "phi1", model.phi1, g.phi1);
    append_slots(slots, "psi1", model.psi1, g.psi1);
    append_slots(slots, "phi2", model.phi2, g.phi2);
    append_slots(slots, "psi2", model.psi2, g.psi2);
    if (model.tau_trainable)
        slots.push_back({"log_tau", std::span<double>(&model.log_tau, 1), std::span<const double>(&g.log_tau, 1)});
    return slots;
}

struct TrainResult {
    std::vector<HistoryRow> history;
};

/// ADAM over all network parameters (and log tau when trainable). The loss
/// recorded for an iteration is the one evaluated before its update.
inline TrainResult train(NfAutoencoder& model, const TrajectorySet& train_set, const TrainOptions& opt,
                         const TrainCallback& callback = {}) {
    model.validate();
    train_set.validate();
    require(opt.epochs >= 0, "epochs must be non-negative");
    require(train_set.state_dim() == model.state_dim(), "training set dimension does not match the model");
    AdamState adam;
    adam.eta = opt.eta;
    TrainResult result;
    long iteration = 0;
    for (long epoch = 0; epoch < opt.epochs; ++epoch) {
        for (const Batch& batch : batches(train_set, opt.batch_size, opt.seed, epoch)) {
            HistoryRow row;
            row.iteration = iteration;
            row.epoch = epoch;
            row.tau = model.tau();
            try {
                LossEvaluation ev = compute_losses(model, batch, opt.loss);
                row.report = ev.report;
                if (!std::isfinite(ev.report.total)) throw TrainingDivergence("non-finite total loss", 0);
                auto slots = parameter_slots(model, ev.grads);
                try {
                    adam_step(adam, slots);
                } catch (const NumericError& e) {
                    throw TrainingDivergence(e.what(), 0);
                }
            } catch (const TrainingDivergence& e) {
                throw TrainingAborted(e, std::move(result.history));
            }
            model.nf.tau = model.tau();
            result.history.push_back(row);
            ++iteration;
            if (callback && !callback(row)) return result;
        }
    }
    return result;
}

/// Loss over a whole set without gradients.
inline LossReport evaluate(const NfAutoencoder& model, const TrajectorySet& set, const LossConfig& cfg) {
    return compute_losses(model, as_batch(set), cfg, false).report;
}

}  // namespace normform

#endif  // NORMFORM_NF_AUTOENCODER_HPP
