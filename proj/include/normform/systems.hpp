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
#ifndef NORMFORM_SYSTEMS_HPP
#define NORMFORM_SYSTEMS_HPP

#include "normform/core.hpp"
#include "normform/integrate.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

namespace normform {

// ---------------------------------------------------------------------------
// Scalar ODE with saddle-node, pitchfork and transcritical points
// ---------------------------------------------------------------------------

struct ScalarOdeParams {
    double gamma = 0.01;
    double u_sn = -6.0;
    double alpha_sn = -6.0;
    double alpha_pf = 6.0;

    void validate() const { require(gamma != 0.0 && std::isfinite(gamma), "scalar ODE gamma must be nonzero"); }
};

enum class ScalarBifurcation { SaddleNode, Pitchfork, Transcritical };

inline std::string to_string(ScalarBifurcation b) {
    switch (b) {
    case ScalarBifurcation::SaddleNode: return "SN";
    case ScalarBifurcation::Pitchfork: return "PF";
    case ScalarBifurcation::Transcritical: return "TC";
    }
    return "?";
}

inline ScalarBifurcation scalar_bifurcation_from_string(const std::string& s) {
    if (s == "SN" || s == "sn") return ScalarBifurcation::SaddleNode;
    if (s == "PF" || s == "pf") return ScalarBifurcation::Pitchfork;
    if (s == "TC" || s == "tc") return ScalarBifurcation::Transcritical;
    throw ConfigError("unknown scalar bifurcation tag '" + s + "'");
}

/// gamma u (alpha - alpha_pf - u^2) (alpha - alpha_sn + (u - u_sn)^2)
inline double scalar_rhs(const ScalarOdeParams& p, double u, double alpha) {
    const double d = u - p.u_sn;
    return p.gamma * u * (alpha - p.alpha_pf - u * u) * (alpha - p.alpha_sn + d * d);
}

/// Location (u, alpha) of the chosen bifurcation in original coordinates.
inline std::pair<double, double> scalar_bifurcation_point(const ScalarOdeParams& p, ScalarBifurcation which) {
    switch (which) {
    case ScalarBifurcation::Pitchfork: return {0.0, p.alpha_pf};
    case ScalarBifurcation::SaddleNode: return {p.u_sn, p.alpha_sn};
    case ScalarBifurcation::Transcritical: return {0.0, p.alpha_sn - p.u_sn * p.u_sn};
    }
    throw ArgumentError("unknown scalar bifurcation");
}

/// The scalar field in coordinates where the chosen bifurcation sits at (0, 0).
inline double scalar_translated_rhs(const ScalarOdeParams& p, double u, double alpha, ScalarBifurcation which) {
    const auto [u0, a0] = scalar_bifurcation_point(p, which);
    return scalar_rhs(p, u + u0, alpha + a0);
}

/// Positive factor h(u, alpha) with translated PF field = h(u, alpha) u (alpha - u^2).
inline double pitchfork_scaling(const ScalarOdeParams& p, double u, double alpha) {
    const double d = u - p.u_sn;
    return p.gamma * (alpha + p.alpha_pf - p.alpha_sn + d * d);
}

// ---------------------------------------------------------------------------
// Lorenz96
// ---------------------------------------------------------------------------

struct Lorenz96Params {
    long n = 64;
    void validate() const { require(n >= 4, "Lorenz96 requires n >= 4"); }
};

inline constexpr double kLorenz96AlphaC = 0.84975;

/// du_j/dt = -u_{j-1} (u_{j-2} - u_{j+1}) - u_j + alpha, indices cyclic mod n.
inline Vector lorenz96_rhs(const Lorenz96Params& p, const Vector& u, double alpha) {
    p.validate();
    if (u.size() != p.n)
        throw ArgumentError("lorenz96_rhs: expected state of size " + std::to_string(p.n));
    const long n = p.n;
    Vector out(n);
    for (long j = 0; j < n; ++j) {
        const double um1 = u((j + n - 1) % n);
        const double um2 = u((j + n - 2) % n);
        const double up1 = u((j + 1) % n);
        out(j) = -um1 * (um2 - up1) - u(j) + alpha;
    }
    return out;
}

/// Field under (u, alpha) -> (u + alpha + alpha_c, alpha + alpha_c): the
/// trivial equilibrium sits at u = 0 for every alpha, the bifurcation at alpha = 0.
inline Vector lorenz96_translated_rhs(const Lorenz96Params& p, const Vector& u, double alpha,
                                      double alpha_c = kLorenz96AlphaC) {
    const double a = alpha + alpha_c;
    return lorenz96_rhs(p, (u.array() + a).matrix(), a);
}

// ---------------------------------------------------------------------------
// Neural field
// ---------------------------------------------------------------------------

struct SpatialGrid {
    double x_min = -6.0;
    double x_max = 6.0;
    long n_points = 64;

    double dx() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
    double x(long i) const { return x_min + dx() * static_cast<double>(i); }
};

struct NeuralFieldParams {
    double kappa = 2.75;
    double tau_nf = 10.0;
    double w_e = 1.0;
    double sigma_e = 1.0;
    double beta_nf = 6.0;
    double u_thr = 0.375;
    double sigma = 1.2;
    /// Scale w by 1/(sqrt(pi) sigma_e) so it integrates to w_e. With the
    /// bare exponential the low-activity background oscillates for every
    /// input strength and there is no bump to bifurcate from.
    bool unit_mass_kernel = true;
    SpatialGrid grid;

    void validate() const {
        require(tau_nf > 0.0, "neural field tau_nf must be positive");
        require(grid.n_points >= 2, "neural field grid needs at least 2 points");
        require(grid.x_max > grid.x_min, "neural field grid must have x_max > x_min");
        require(sigma_e > 0.0 && sigma > 0.0, "neural field widths must be positive");
    }
};

inline constexpr double kNeuralFieldAlphaC = 0.8040;

/// Logistic firing rate.
inline double firing_rate(const NeuralFieldParams& p, double u) {
    return 1.0 / (1.0 + std::exp(-p.beta_nf * (u - p.u_thr)));
}

inline Vector neural_field_input(const NeuralFieldParams& p, double alpha) {
    Vector in(p.grid.n_points);
    for (long i = 0; i < p.grid.n_points; ++i) {
        const double r = p.grid.x(i) / p.sigma;
        in(i) = alpha * std::exp(-r * r);
    }
    return in;
}

/// Riemann-sum convolution weights: K(i, j) = w(x_i - x_j) dx on the finite grid.
inline Matrix neural_field_kernel(const NeuralFieldParams& p) {
    const long n = p.grid.n_points;
    const double dx = p.grid.dx();
    const double w0 = p.unit_mass_kernel ? p.w_e / (std::sqrt(std::numbers::pi) * p.sigma_e) : p.w_e;
    Matrix k(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            const double r = (p.grid.x(i) - p.grid.x(j)) / p.sigma_e;
            k(i, j) = w0 * std::exp(-r * r) * dx;
        }
    return k;
}

/// Precomputed neural-field operator; cheap to copy (shared kernel).
class NeuralField {
public:
    explicit NeuralField(NeuralFieldParams p)
        : p_(std::move(p)), kernel_(std::make_shared<Matrix>((p_.validate(), neural_field_kernel(p_)))),
          profile_(neural_field_input(p_, 1.0)) {}

    const NeuralFieldParams& params() const { return p_; }
    long n() const { return p_.grid.n_points; }
    long state_dim() const { return 2 * n(); }
    const Matrix& kernel() const { return *kernel_; }

    /// Discrete convolution (w * v) on the grid.
    Vector convolve(const Vector& v) const { return *kernel_ * v; }

    /// Returns (du/dt, da/dt).
    std::pair<Vector, Vector> rhs(const Vector& u, const Vector& a, double alpha) const {
        if (u.size() != n() || a.size() != n())
            throw ArgumentError("neural_field_rhs: expected u and a of size " + std::to_string(n()));
        Vector f(n());
        for (long i = 0; i < n(); ++i) f(i) = firing_rate(p_, u(i));
        Vector du = -u - p_.kappa * a + convolve(f) + alpha * profile_;
        Vector da = (u - a) / p_.tau_nf;
        return {std::move(du), std::move(da)};
    }

    /// Same field on the packed state [u; a].
    Vector packed_rhs(const Vector& state, double alpha) const {
        if (state.size() != state_dim())
            throw ArgumentError("neural field: expected packed state of size " + std::to_string(state_dim()));
        auto [du, da] = rhs(state.head(n()), state.tail(n()), alpha);
        Vector out(state_dim());
        out << du, da;
        return out;
    }

private:
    NeuralFieldParams p_;
    std::shared_ptr<const Matrix> kernel_;
    Vector profile_;
};

inline std::pair<Vector, Vector> neural_field_rhs(const NeuralFieldParams& p, const Vector& u, const Vector& a,
                                                  double alpha) {
    return NeuralField(p).rhs(u, a, alpha);
}

/// Equilibrium guess from a settled trajectory (columns are snapshots):
/// the last snapshot when alpha < 0, otherwise the time average after
/// discarding the first `trim` columns.
inline Vector estimate_nf_equilibrium(double alpha, const Matrix& trajectory, long trim) {
    if (trajectory.cols() == 0 || trajectory.rows() == 0)
        throw ArgumentError("estimate_nf_equilibrium: empty trajectory");
    require(trim >= 0 && trajectory.cols() > trim, "estimate_nf_equilibrium: trajectory must be longer than trim");
    if (alpha < 0.0) return trajectory.col(trajectory.cols() - 1);
    return trajectory.rightCols(trajectory.cols() - trim).rowwise().mean();
}

/// Settling run used to locate the data-estimated equilibrium.
struct SettleSpec {
    TimeGrid grid{0.0, 400.0, 2001};
    long trim = 1000;
};

/// Thread-safe cache of neural-field equilibria keyed by translated alpha.
class NeuralFieldEquilibria {
public:
    NeuralFieldEquilibria(NeuralField field, double alpha_c, SettleSpec settle = {})
        : field_(std::move(field)), alpha_c_(alpha_c), settle_(settle) {}

    Vector get(double alpha) const {
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(alpha); it != cache_.end()) return it->second;
        }
        Vector eq = compute(alpha);
        std::unique_lock lock(mutex_);
        return cache_.try_emplace(alpha, std::move(eq)).first->second;
    }

    /// Fills the cache; afterwards concurrent reads never write.
    void warm_up(const std::vector<double>& alphas) const {
        std::vector<Vector> eqs(alphas.size());
        parallel_for(alphas.size(), [&](std::size_t i) { eqs[i] = compute(alphas[i]); });
        std::unique_lock lock(mutex_);
        for (std::size_t i = 0; i < alphas.size(); ++i) cache_.try_emplace(alphas[i], eqs[i]);
    }

    Vector compute(double alpha) const {
        const NeuralField& f = field_;
        const double a = alpha + alpha_c_;
        VectorField raw = [&f](const Vector& s, double al) { return f.packed_rhs(s, al); };
        const Trajectory t = integrate(raw, Vector::Zero(f.state_dim()), a, settle_.grid);
        return estimate_nf_equilibrium(alpha, t.states, settle_.trim);
    }

    const NeuralField& field() const { return field_; }
    double alpha_c() const { return alpha_c_; }

private:
    NeuralField field_;
    double alpha_c_;
    SettleSpec settle_;
    mutable std::shared_mutex mutex_;
    mutable std::map<double, Vector> cache_;
};

// ---------------------------------------------------------------------------
// System instances in translated coordinates
// ---------------------------------------------------------------------------

enum class SystemKind { ScalarSN, ScalarPF, ScalarTC, Lorenz96, NeuralField, External };

inline std::string to_string(SystemKind k) {
    switch (k) {
    case SystemKind::ScalarSN: return "scalar-sn";
    case SystemKind::ScalarPF: return "scalar-pf";
    case SystemKind::ScalarTC: return "scalar-tc";
    case SystemKind::Lorenz96: return "lorenz96";
    case SystemKind::NeuralField: return "neuralfield";
    case SystemKind::External: return "external";
    }
    return "unknown";
}

/// A ground-truth system translated so that the bifurcating equilibrium is
/// u = 0 and the critical parameter is alpha = 0. `u_center` is the
/// sampling center in translated coordinates.
struct SystemInstance {
    SystemKind kind = SystemKind::External;
    long state_dim = 0;
    double alpha_c = 0.0;
    Vector u_center;
    VectorField rhs;
    /// Untranslated field, for diagnostics.
    VectorField raw_rhs;
    /// Called once with every alpha before parallel integration.
    std::function<void(const std::vector<double>&)> prepare = [](const std::vector<double>&) {};
};

inline SystemInstance make_scalar_system(const ScalarOdeParams& p, ScalarBifurcation which) {
    p.validate();
    SystemInstance s;
    s.kind = which == ScalarBifurcation::SaddleNode  ? SystemKind::ScalarSN
             : which == ScalarBifurcation::Pitchfork ? SystemKind::ScalarPF
                                                     : SystemKind::ScalarTC;
    s.state_dim = 1;
    s.alpha_c = scalar_bifurcation_point(p, which).second;
    s.u_center = Vector::Zero(1);
    s.rhs = [p, which](const Vector& u, double alpha) {
        Vector out(1);
        out(0) = scalar_translated_rhs(p, u(0), alpha, which);
        return out;
    };
    s.raw_rhs = [p](const Vector& u, double alpha) {
        Vector out(1);
        out(0) = scalar_rhs(p, u(0), alpha);
        return out;
    };
    return s;
}

inline SystemInstance make_lorenz96_system(const Lorenz96Params& p, double alpha_c = kLorenz96AlphaC) {
    p.validate();
    SystemInstance s;
    s.kind = SystemKind::Lorenz96;
    s.state_dim = p.n;
    s.alpha_c = alpha_c;
    s.u_center = Vector::Zero(p.n);
    s.rhs = [p, alpha_c](const Vector& u, double alpha) { return lorenz96_translated_rhs(p, u, alpha, alpha_c); };
    s.raw_rhs = [p](const Vector& u, double alpha) { return lorenz96_rhs(p, u, alpha); };
    return s;
}

inline SystemInstance make_neural_field_system(const NeuralFieldParams& p, double alpha_c = kNeuralFieldAlphaC,
                                               SettleSpec settle = {}) {
    auto eqs = std::make_shared<NeuralFieldEquilibria>(NeuralField(p), alpha_c, settle);
    SystemInstance s;
    s.kind = SystemKind::NeuralField;
    s.state_dim = eqs->field().state_dim();
    s.alpha_c = alpha_c;
    s.u_center = Vector::Zero(s.state_dim);
    s.rhs = [eqs, alpha_c](const Vector& x, double alpha) {
        return eqs->field().packed_rhs(x + eqs->get(alpha), alpha + alpha_c);
    };
    s.raw_rhs = [eqs](const Vector& x, double alpha) { return eqs->field().packed_rhs(x, alpha); };
    s.prepare = [eqs](const std::vector<double>& alphas) { eqs->warm_up(alphas); };
    return s;
}

}  // namespace normform

#endif  // NORMFORM_SYSTEMS_HPP
