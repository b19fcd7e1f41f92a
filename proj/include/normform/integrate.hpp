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
#ifndef NORMFORM_INTEGRATE_HPP
#define NORMFORM_INTEGRATE_HPP

#include "normform/core.hpp"

#include <cmath>
#include <string>

namespace normform {

/// Uniform time grid t0, t0 + dt, ..., t_end with n_points samples.
struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    long n_points = 2;

    double dt() const { return (t_end - t0) / static_cast<double>(n_points - 1); }
    double time(long k) const { return t0 + dt() * static_cast<double>(k); }

    void validate() const {
        require(std::isfinite(t0) && std::isfinite(t_end), "time grid bounds must be finite");
        require(t_end > t0, "time grid requires t_end > t0");
        require(n_points >= 2, "time grid requires at least 2 points");
    }
};

/// Autonomous parameterized vector field f(u; alpha).
using VectorField = std::function<Vector(const Vector&, double)>;

/// States and right-hand-side values sampled on a uniform grid. Column k of
/// `derivs` is the field evaluated at column k of `states`.
struct Trajectory {
    Matrix states;
    Matrix derivs;
    double alpha = 0.0;
    TimeGrid grid;

    long size() const { return states.cols(); }
    long dim() const { return states.rows(); }
};

/// Magnitude above which a state counts as escaped.
inline constexpr double kBlowupThreshold = 1e6;

/// Fixed-step classic RK4. Throws IntegrationBlowup at the first time index
/// whose state is non-finite or exceeds kBlowupThreshold in magnitude.
inline Trajectory integrate(const VectorField& rhs, const Vector& u0, double alpha,
                            const TimeGrid& grid) {
    grid.validate();
    require(u0.allFinite(), "integrate: initial state must be finite");

    const long n = u0.size();
    const double h = grid.dt();
    Trajectory traj;
    traj.alpha = alpha;
    traj.grid = grid;
    traj.states.resize(n, grid.n_points);
    traj.derivs.resize(n, grid.n_points);

    auto check = [&](const Vector& u, long k) {
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > kBlowupThreshold)
            throw IntegrationBlowup("integration blow-up at time index " + std::to_string(k), k);
    };

    Vector u = u0;
    Vector k1 = rhs(u, alpha);
    require(k1.size() == n, "integrate: vector field returned wrong dimension");
    traj.states.col(0) = u;
    traj.derivs.col(0) = k1;
    for (long k = 1; k < grid.n_points; ++k) {
        const Vector k2 = rhs(u + 0.5 * h * k1, alpha);
        const Vector k3 = rhs(u + 0.5 * h * k2, alpha);
        const Vector k4 = rhs(u + h * k3, alpha);
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check(u, k);
        k1 = rhs(u, alpha);
        if (!k1.allFinite())
            throw IntegrationBlowup("non-finite derivative at time index " + std::to_string(k), k);
        traj.states.col(k) = u;
        traj.derivs.col(k) = k1;
    }
    return traj;
}

/// Drops the first n_trim samples; the grid start moves forward accordingly.
inline Trajectory trim_transients(const Trajectory& traj, long n_trim) {
    require(n_trim >= 0, "trim_transients: n_trim must be non-negative");
    require(n_trim < traj.size(), "trim_transients: n_trim must be smaller than the trajectory length");
    if (n_trim == 0) return traj;
    Trajectory out;
    out.alpha = traj.alpha;
    const long kept = traj.size() - n_trim;
    out.states = traj.states.rightCols(kept);
    out.derivs = traj.derivs.rightCols(kept);
    out.grid.t0 = traj.grid.time(n_trim);
    out.grid.t_end = traj.grid.t_end;
    out.grid.n_points = kept;
    return out;
}

}  // namespace normform

#endif  // NORMFORM_INTEGRATE_HPP
