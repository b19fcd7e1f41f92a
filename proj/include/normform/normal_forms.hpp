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
#ifndef NORMFORM_NORMAL_FORMS_HPP
#define NORMFORM_NORMAL_FORMS_HPP

#include "normform/core.hpp"
#include "normform/integrate.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace normform {

enum class NormalFormKind { SaddleNode, Transcritical, Pitchfork, Hopf };

inline std::string to_string(NormalFormKind k) {
    switch (k) {
    case NormalFormKind::SaddleNode: return "saddle-node";
    case NormalFormKind::Transcritical: return "transcritical";
    case NormalFormKind::Pitchfork: return "pitchfork";
    case NormalFormKind::Hopf: return "hopf";
    }
    return "unknown";
}

inline NormalFormKind normal_form_kind_from_string(const std::string& s) {
    if (s == "saddle-node" || s == "saddlenode") return NormalFormKind::SaddleNode;
    if (s == "transcritical") return NormalFormKind::Transcritical;
    if (s == "pitchfork") return NormalFormKind::Pitchfork;
    if (s == "hopf") return NormalFormKind::Hopf;
    throw ConfigError("unknown normal form kind '" + s + "'");
}

/// Target normal form g(z, beta) with time scale tau: dz/dt = g(z, beta) / tau^2.
///
/// Scalar kinds: saddle-node beta - z^2, transcritical z (beta - z),
/// pitchfork z (beta - z^2). Hopf uses two real coordinates and the
/// supercritical cubic term, so the stable cycle has radius sqrt(beta).
struct NormalForm {
    NormalFormKind kind = NormalFormKind::Pitchfork;
    double omega = 1.0;  // Hopf only
    double tau = 1.0;

    int dim() const { return kind == NormalFormKind::Hopf ? 2 : 1; }

    void validate() const {
        require(std::isfinite(tau) && tau > 0.0, "normal form tau must be positive");
        if (kind == NormalFormKind::Hopf)
            require(std::isfinite(omega) && omega != 0.0, "Hopf omega must be finite and nonzero");
    }
};

namespace detail {
inline void check_dim(const NormalForm& nf, Eigen::Index n) {
    if (n != nf.dim())
        throw ArgumentError("normal form " + to_string(nf.kind) + " expects dimension " +
                            std::to_string(nf.dim()) + ", got " + std::to_string(n));
}
}  // namespace detail

/// Unscaled field g(z, beta).
inline Vector eval_rhs(const NormalForm& nf, const Vector& z, double beta) {
    detail::check_dim(nf, z.size());
    Vector out(nf.dim());
    switch (nf.kind) {
    case NormalFormKind::SaddleNode: out(0) = beta - z(0) * z(0); break;
    case NormalFormKind::Transcritical: out(0) = z(0) * (beta - z(0)); break;
    case NormalFormKind::Pitchfork: out(0) = z(0) * (beta - z(0) * z(0)); break;
    case NormalFormKind::Hopf: {
        const double r2 = z.squaredNorm();
        out(0) = beta * z(0) - nf.omega * z(1) - z(0) * r2;
        out(1) = nf.omega * z(0) + beta * z(1) - z(1) * r2;
        break;
    }
    }
    return out;
}

inline Vector eval_rhs_scaled(const NormalForm& nf, const Vector& z, double beta) {
    return eval_rhs(nf, z, beta) / (nf.tau * nf.tau);
}

/// Jacobian d/dz of the scaled field.
inline Matrix eval_rhs_grad_z(const NormalForm& nf, const Vector& z, double beta) {
    detail::check_dim(nf, z.size());
    const double s = 1.0 / (nf.tau * nf.tau);
    Matrix j(nf.dim(), nf.dim());
    switch (nf.kind) {
    case NormalFormKind::SaddleNode: j(0, 0) = -2.0 * z(0); break;
    case NormalFormKind::Transcritical: j(0, 0) = beta - 2.0 * z(0); break;
    case NormalFormKind::Pitchfork: j(0, 0) = beta - 3.0 * z(0) * z(0); break;
    case NormalFormKind::Hopf: {
        const double x = z(0), y = z(1), r2 = x * x + y * y;
        j(0, 0) = beta - r2 - 2.0 * x * x;
        j(0, 1) = -nf.omega - 2.0 * x * y;
        j(1, 0) = nf.omega - 2.0 * x * y;
        j(1, 1) = beta - r2 - 2.0 * y * y;
        break;
    }
    }
    return s * j;
}

/// Partial derivative d/dbeta of the scaled field.
inline Vector eval_rhs_grad_beta(const NormalForm& nf, const Vector& z, double /*beta*/) {
    detail::check_dim(nf, z.size());
    const double s = 1.0 / (nf.tau * nf.tau);
    Vector d(nf.dim());
    switch (nf.kind) {
    case NormalFormKind::SaddleNode: d(0) = 1.0; break;
    case NormalFormKind::Transcritical:
    case NormalFormKind::Pitchfork: d(0) = z(0); break;
    case NormalFormKind::Hopf: d = z; break;
    }
    return s * d;
}

/// The scaled normal form as a vector field whose parameter slot is beta.
inline VectorField scaled_field(const NormalForm& nf) {
    return [nf](const Vector& z, double beta) { return eval_rhs_scaled(nf, z, beta); };
}

/// Integrates the scaled normal form from n_traj initial values: z0_center
/// itself, then n_traj - 1 draws uniform in z0_center +- spread (componentwise).
inline std::vector<Trajectory> simulate_ensemble(const NormalForm& nf, const Vector& z0_center,
                                                 double beta, long n_traj, double spread,
                                                 const TimeGrid& grid, std::uint64_t seed) {
    nf.validate();
    detail::check_dim(nf, z0_center.size());
    require(n_traj >= 1, "simulate_ensemble: n_traj must be >= 1");
    require(spread >= 0.0, "simulate_ensemble: spread must be non-negative");
    grid.validate();

    auto rng = make_rng({seed, 0x656e73656d626c65ull});
    std::vector<Vector> starts;
    starts.reserve(static_cast<std::size_t>(n_traj));
    starts.push_back(z0_center);
    for (long i = 1; i < n_traj; ++i) {
        Vector z0 = z0_center;
        for (Eigen::Index c = 0; c < z0.size(); ++c) z0(c) += spread * uniform_pm1(rng);
        starts.push_back(std::move(z0));
    }

    const VectorField field = scaled_field(nf);
    std::vector<Trajectory> out;
    out.reserve(starts.size());
    for (long i = 0; i < n_traj; ++i) {
        try {
            out.push_back(integrate(field, starts[static_cast<std::size_t>(i)], beta, grid));
        } catch (const IntegrationBlowup& e) {
            throw IntegrationBlowup("ensemble member " + std::to_string(i) + ": " + e.what(),
                                    e.time_index(), i);
        }
    }
    return out;
}

}  // namespace normform

#endif  // NORMFORM_NORMAL_FORMS_HPP
