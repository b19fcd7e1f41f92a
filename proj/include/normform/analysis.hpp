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
#ifndef NORMFORM_ANALYSIS_HPP
#define NORMFORM_ANALYSIS_HPP

#include "normform/core.hpp"
#include "normform/dataset.hpp"
#include "normform/integrate.hpp"
#include "normform/nf_autoencoder.hpp"
#include "normform/normal_forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace normform {

// ---------------------------------------------------------------------------
// Period estimation
// ---------------------------------------------------------------------------

/// Dominant period of a uniformly sampled series from its magnitude spectrum.
///
/// The mean-removed series is Hann-windowed and zero-padded 8x before the
/// spectrum is evaluated; the peak bin (DC excluded) is refined by a
/// parabola through the log-magnitudes of its two neighbours.
inline double dominant_period(const Vector& series, double dt) {
    require(series.size() >= 8, "dominant_period: need at least 8 samples");
    require(dt > 0.0, "dominant_period: dt must be positive");
    const long n = series.size();
    const Vector x = series.array() - series.mean();
    const double scale = series.cwiseAbs().maxCoeff();
    if (x.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale))
        throw NoOscillationError("dominant_period: series is constant");

    constexpr double pi = std::numbers::pi;
    Vector w(n);
    for (long i = 0; i < n; ++i) w(i) = x(i) * (0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / (n - 1)));

    constexpr long kPad = 8;
    const long N = kPad * n;
    const long n_bins = N / 2;
    Vector mag = Vector::Zero(n_bins + 1);
    for (long k = 0; k <= n_bins; ++k) {
        // Rotating phasor; resynchronized periodically to bound round-off.
        const double step = -2.0 * pi * static_cast<double>(k) / static_cast<double>(N);
        double re = 0.0, im = 0.0;
        double c = 1.0, s = 0.0;
        const double cs = std::cos(step), sn = std::sin(step);
        for (long i = 0; i < n; ++i) {
            if (i % 64 == 0) {
                c = std::cos(step * static_cast<double>(i));
                s = std::sin(step * static_cast<double>(i));
            }
            re += w(i) * c;
            im += w(i) * s;
            const double c2 = c * cs - s * sn;
            s = c * sn + s * cs;
            c = c2;
        }
        mag(k) = std::hypot(re, im);
    }
    // Skip the DC lobe: the first kPad bins belong to frequencies below one
    // cycle per window.
    long k_peak = kPad;
    for (long k = kPad; k <= n_bins; ++k)
        if (mag(k) > mag(k_peak)) k_peak = k;
    if (!(mag(k_peak) > 0.0)) throw NoOscillationError("dominant_period: empty spectrum");

    double delta = 0.0;
    if (k_peak > 0 && k_peak < n_bins) {
        const double tiny = std::numeric_limits<double>::min();
        const double a = std::log(mag(k_peak - 1) + tiny);
        const double b = std::log(mag(k_peak) + tiny);
        const double c = std::log(mag(k_peak + 1) + tiny);
        const double den = a - 2.0 * b + c;
        if (den < 0.0) delta = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    }
    const double freq = (static_cast<double>(k_peak) + delta) / (static_cast<double>(N) * dt);
    return 1.0 / freq;
}

// ---------------------------------------------------------------------------
// Ensemble comparison
// ---------------------------------------------------------------------------

struct Envelope {
    Matrix lo;
    Matrix hi;
};

/// Pointwise componentwise min/max over an ensemble of the scaled normal
/// form started around the first column of `latent`, on `grid`.
inline Envelope ensemble_envelope(const Matrix& latent, const TimeGrid& grid, const NormalForm& nf, double beta,
                                  long n_ensemble, double spread, std::uint64_t seed) {
    require(latent.cols() >= 1, "ensemble: latent trajectory is empty");
    require(latent.cols() == grid.n_points, "ensemble: latent length must match the time grid");
    const auto members = simulate_ensemble(nf, latent.col(0), beta, n_ensemble, spread, grid, seed);
    Envelope env{members.front().states, members.front().states};
    for (std::size_t i = 1; i < members.size(); ++i) {
        env.lo = env.lo.cwiseMin(members[i].states);
        env.hi = env.hi.cwiseMax(members[i].states);
    }
    return env;
}

/// Time-averaged Euclidean distance from `latent` to an envelope.
inline double envelope_distance(const Matrix& latent, const Envelope& env) {
    const Matrix below = (env.lo - latent).cwiseMax(0.0);
    const Matrix above = (latent - env.hi).cwiseMax(0.0);
    return (below + above).colwise().norm().mean();
}

inline double ensemble_mismatch(const Matrix& latent, const TimeGrid& grid, const NormalForm& nf, double beta,
                                long n_ensemble, double spread, std::uint64_t seed) {
    return envelope_distance(latent, ensemble_envelope(latent, grid, nf, beta, n_ensemble, spread, seed));
}

// ---------------------------------------------------------------------------
// Amplitudes
// ---------------------------------------------------------------------------

struct SteadyAmplitude {
    double amplitude = 0.0;    // 0 when decayed
    double fluctuation = 0.0;  // max peak-to-peak over the final quarter
};

inline constexpr double kDecayThreshold = 1e-4;

/// Over the final quarter of the columns: fluctuation is the largest
/// peak-to-peak range of any component; amplitude is half of it, or 0 when
/// the fluctuation is below `decay_threshold`.
inline SteadyAmplitude steady_amplitude(const Matrix& states, double decay_threshold = kDecayThreshold) {
    require(states.cols() >= 4, "steady_amplitude: need at least 4 samples");
    const long start = (3 * states.cols()) / 4;
    const Matrix tail = states.rightCols(states.cols() - start);
    SteadyAmplitude out;
    out.fluctuation = (tail.rowwise().maxCoeff() - tail.rowwise().minCoeff()).maxCoeff();
    out.amplitude = out.fluctuation < decay_threshold ? 0.0 : 0.5 * out.fluctuation;
    return out;
}

struct AmplitudePoint {
    double alpha = 0.0;
    double amplitude = 0.0;
    double fluctuation = 0.0;
    bool blew_up = false;
};

/// Steady amplitude of the field for each alpha, started from u0.
inline std::vector<AmplitudePoint> amplitude_vs_parameter(const VectorField& rhs, const Vector& u0,
                                                          const std::vector<double>& alphas, const TimeGrid& grid,
                                                          double decay_threshold = kDecayThreshold) {
    require(!alphas.empty(), "amplitude_vs_parameter: empty parameter list");
    std::vector<AmplitudePoint> out(alphas.size());
    parallel_for(alphas.size(), [&](std::size_t i) {
        AmplitudePoint& p = out[i];
        p.alpha = alphas[i];
        try {
            const Trajectory t = integrate(rhs, u0, alphas[i], grid);
            const SteadyAmplitude a = steady_amplitude(t.states, decay_threshold);
            p.amplitude = a.amplitude;
            p.fluctuation = a.fluctuation;
        } catch (const IntegrationBlowup&) {
            p.blew_up = true;
            p.amplitude = std::numeric_limits<double>::infinity();
            p.fluctuation = std::numeric_limits<double>::infinity();
        }
    });
    return out;
}

/// Least-squares fit amp ~ a sqrt(beta); returns a and the largest relative residual.
struct SqrtFit {
    double coefficient = 0.0;
    double max_relative_residual = 0.0;
};

inline SqrtFit fit_sqrt_law(const std::vector<AmplitudePoint>& pts) {
    double num = 0.0, den = 0.0;
    for (const auto& p : pts) {
        require(p.alpha > 0.0, "fit_sqrt_law: parameters must be positive");
        num += p.amplitude * std::sqrt(p.alpha);
        den += p.alpha;
    }
    SqrtFit fit;
    fit.coefficient = num / den;
    for (const auto& p : pts) {
        const double model = fit.coefficient * std::sqrt(p.alpha);
        fit.max_relative_residual = std::max(fit.max_relative_residual, std::abs(p.amplitude - model) / model);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Validation report
// ---------------------------------------------------------------------------

struct ValidationOptions {
    long n_ensemble = 20;
    double spread = 0.1;
    std::uint64_t seed = 0;
    Orientation orientation = Orientation::Same;
};

struct TrajectoryReport {
    Matrix latent;
    Envelope envelope;
    double beta = 0.0;
    double alpha = 0.0;
    double mismatch = 0.0;
    SteadyAmplitude latent_amplitude;
};

struct ValidationReport {
    std::vector<TrajectoryReport> trajectories;
    TimeGrid grid;
    double reconstruction_error = 0.0;
    double sign_agreement = 0.0;
    double median_mismatch = 0.0;
    /// Medians over oscillating (alpha > 0) test trajectories; NaN if none.
    double data_period = std::numeric_limits<double>::quiet_NaN();
    double latent_period = std::numeric_limits<double>::quiet_NaN();
    double tau = 1.0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Encodes every test trajectory, compares it with a normal-form ensemble and
/// collects aggregate metrics.
inline ValidationReport validation_report(const NfAutoencoder& model, const TrajectorySet& test,
                                          const ValidationOptions& opt) {
    require(test.n_trajectories() >= 1, "validation_report: empty test set");
    require(test.state_dim() == model.state_dim(), "validation_report: test set does not match the model");
    const NormalForm nf = model.normal_form();
    const Encoded enc = encode(model, test.U, test.alpha);
    const Matrix U_hat = decode_state(model, enc.Z);

    ValidationReport rep;
    rep.grid = test.grid;
    rep.tau = model.tau();
    const double denom = test.U.norm();
    rep.reconstruction_error = denom > 0.0 ? (test.U - U_hat).norm() / denom : (test.U - U_hat).norm();

    const long n = test.n_trajectories();
    rep.trajectories.resize(static_cast<std::size_t>(n));
    const double s = opt.orientation == Orientation::Same ? 1.0 : -1.0;
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
        const long j = static_cast<long>(jj);
        TrajectoryReport& tr = rep.trajectories[jj];
        tr.latent = enc.Z.middleCols(j * test.t_kept, test.t_kept);
        tr.alpha = test.alpha(j);
        tr.beta = enc.beta(j);
        // Same seed for every trajectory so aggregates do not depend on test-set order.
        tr.envelope = ensemble_envelope(tr.latent, test.grid, nf, tr.beta, opt.n_ensemble, opt.spread, opt.seed);
        tr.mismatch = envelope_distance(tr.latent, tr.envelope);
        if (tr.latent.cols() >= 4) tr.latent_amplitude = steady_amplitude(tr.latent);
    });

    long agree = 0;
    std::vector<double> scores, data_periods, latent_periods;
    for (long j = 0; j < n; ++j) {
        const auto& tr = rep.trajectories[static_cast<std::size_t>(j)];
        if (sgn(tr.alpha) == s * sgn(tr.beta)) ++agree;
        scores.push_back(tr.mismatch);
        if (tr.alpha > 0.0 && test.t_kept >= 8) {
            try {
                const auto traj = test.trajectory(j);
                const double tp = dominant_period(traj.states.row(0).transpose(), test.grid.dt());
                const double lp = dominant_period(tr.latent.row(0).transpose(), test.grid.dt());
                data_periods.push_back(tp);
                latent_periods.push_back(lp);
            } catch (const NoOscillationError&) {
            }
        }
    }
    rep.sign_agreement = static_cast<double>(agree) / static_cast<double>(n);
    rep.median_mismatch = median(scores);
    rep.data_period = median(data_periods);
    rep.latent_period = median(latent_periods);
    return rep;
}

}  // namespace normform

#endif  // NORMFORM_ANALYSIS_HPP
