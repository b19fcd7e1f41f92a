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
#ifndef NORMFORM_DATASET_HPP
#define NORMFORM_DATASET_HPP

#include "normform/core.hpp"
#include "normform/integrate.hpp"
#include "normform/systems.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace normform {

struct SamplingSpec {
    Vector u_center;
    double alpha_center = 0.0;
    double sigma_u = 0.1;
    double sigma_alpha = 0.5;
    long n_train = 1;
    long n_test = 0;
    std::uint64_t seed = 0;

    void validate() const {
        require(u_center.size() >= 1, "sampling spec needs a state center");
        require(sigma_u >= 0.0 && sigma_alpha >= 0.0, "sampling widths must be non-negative");
        require(n_train >= 1 && n_test >= 0, "sampling spec needs n_train >= 1 and n_test >= 0");
    }
};

struct InitialCondition {
    Vector u0;
    double alpha0 = 0.0;
};

namespace detail {
inline constexpr std::uint64_t kStreamState = 0x75;   // 'u'
inline constexpr std::uint64_t kStreamParam = 0x61;   // 'a'
inline constexpr std::uint64_t kStreamRetry = 0x72;   // 'r'
inline constexpr std::uint64_t kStreamShuffle = 0x73; // 's'

inline InitialCondition draw_pair(const SamplingSpec& spec, std::mt19937_64& ru, std::mt19937_64& ra) {
    InitialCondition ic;
    ic.u0 = spec.u_center;
    for (Eigen::Index c = 0; c < ic.u0.size(); ++c) ic.u0(c) += spec.sigma_u * uniform_pm1(ru);
    ic.alpha0 = spec.alpha_center + spec.sigma_alpha * uniform_pm1(ra);
    return ic;
}
}  // namespace detail

/// n_train + n_test pairs; training pairs first. State and parameter draws
/// come from independent streams.
inline std::vector<InitialCondition> sample_initial_conditions(const SamplingSpec& spec) {
    spec.validate();
    auto ru = make_rng({spec.seed, detail::kStreamState});
    auto ra = make_rng({spec.seed, detail::kStreamParam});
    std::vector<InitialCondition> out;
    const long total = spec.n_train + spec.n_test;
    out.reserve(static_cast<std::size_t>(total));
    for (long i = 0; i < total; ++i) out.push_back(detail::draw_pair(spec, ru, ra));
    return out;
}

/// Trajectories of equal length stacked column-wise. Trajectory j occupies
/// columns [j * t_kept, (j + 1) * t_kept).
struct TrajectorySet {
    Matrix U;
    Matrix U_dot;
    Vector alpha;
    long t_kept = 0;
    TimeGrid grid;  // grid of one kept trajectory

    long n_trajectories() const { return alpha.size(); }
    long state_dim() const { return U.rows(); }
    std::pair<long, long> range(long j) const { return {j * t_kept, (j + 1) * t_kept}; }

    void validate() const {
        if (U.rows() != U_dot.rows() || U.cols() != U_dot.cols())
            throw ArgumentError("trajectory set: U and U_dot shapes differ");
        if (U.cols() != alpha.size() * t_kept)
            throw ArgumentError("trajectory set: column count does not match trajectories x t_kept");
        if (!U.allFinite() || !U_dot.allFinite() || !alpha.allFinite())
            throw ArgumentError("trajectory set contains non-finite entries");
    }

    Trajectory trajectory(long j) const {
        require(j >= 0 && j < n_trajectories(), "trajectory index out of range");
        Trajectory t;
        t.states = U.middleCols(j * t_kept, t_kept);
        t.derivs = U_dot.middleCols(j * t_kept, t_kept);
        t.alpha = alpha(j);
        t.grid = grid;
        return t;
    }

    /// Alpha repeated for each column.
    Vector alpha_per_column() const {
        Vector out(U.cols());
        for (long j = 0; j < n_trajectories(); ++j) out.segment(j * t_kept, t_kept).setConstant(alpha(j));
        return out;
    }
};

inline TrajectorySet stack(const std::vector<Trajectory>& trajs) {
    require(!trajs.empty(), "stack: no trajectories");
    TrajectorySet set;
    set.t_kept = trajs.front().size();
    set.grid = trajs.front().grid;
    const long dim = trajs.front().dim();
    const long n = static_cast<long>(trajs.size());
    set.U.resize(dim, n * set.t_kept);
    set.U_dot.resize(dim, n * set.t_kept);
    set.alpha.resize(n);
    for (long j = 0; j < n; ++j) {
        const Trajectory& t = trajs[static_cast<std::size_t>(j)];
        if (t.size() != set.t_kept || t.dim() != dim)
            throw ArgumentError("stack: trajectories differ in shape");
        set.U.middleCols(j * set.t_kept, set.t_kept) = t.states;
        set.U_dot.middleCols(j * set.t_kept, set.t_kept) = t.derivs;
        set.alpha(j) = t.alpha;
    }
    return set;
}

inline std::vector<Trajectory> unstack(const TrajectorySet& set) {
    std::vector<Trajectory> out;
    for (long j = 0; j < set.n_trajectories(); ++j) out.push_back(set.trajectory(j));
    return out;
}

/// Subset of whole trajectories, in the given order.
inline TrajectorySet select(const TrajectorySet& set, const std::vector<long>& indices) {
    TrajectorySet out;
    out.t_kept = set.t_kept;
    out.grid = set.grid;
    const long n = static_cast<long>(indices.size());
    out.U.resize(set.state_dim(), n * set.t_kept);
    out.U_dot.resize(set.state_dim(), n * set.t_kept);
    out.alpha.resize(n);
    for (long k = 0; k < n; ++k) {
        const long j = indices[static_cast<std::size_t>(k)];
        require(j >= 0 && j < set.n_trajectories(), "select: index out of range");
        out.U.middleCols(k * set.t_kept, set.t_kept) = set.U.middleCols(j * set.t_kept, set.t_kept);
        out.U_dot.middleCols(k * set.t_kept, set.t_kept) = set.U_dot.middleCols(j * set.t_kept, set.t_kept);
        out.alpha(k) = set.alpha(j);
    }
    return out;
}

struct DatasetPair {
    TrajectorySet train;
    TrajectorySet test;
    long resampled = 0;
};

inline constexpr int kMaxRetriesPerTrajectory = 25;

/// Integrates every sampled pair, trims n_trim columns and stacks. A
/// trajectory that blows up is replaced by a fresh draw from a per-slot
/// stream, so set sizes stay exact and results do not depend on threading.
inline DatasetPair build_set(const SystemInstance& system, const SamplingSpec& spec, const TimeGrid& grid,
                             long n_trim) {
    spec.validate();
    grid.validate();
    require(spec.u_center.size() == system.state_dim, "sampling center does not match system dimension");
    require(n_trim >= 0 && n_trim < grid.n_points, "trim must be smaller than the time grid");

    const auto ics = sample_initial_conditions(spec);
    const std::size_t total = ics.size();

    std::vector<double> alphas;
    for (const auto& ic : ics) alphas.push_back(ic.alpha0);
    system.prepare(alphas);

    std::vector<Trajectory> trajs(total);
    std::vector<int> failures(total, 0);
    std::vector<char> ok(total, 0);
    parallel_for(total, [&](std::size_t i) {
        InitialCondition ic = ics[i];
        for (int attempt = 0; attempt < kMaxRetriesPerTrajectory; ++attempt) {
            try {
                trajs[i] = trim_transients(integrate(system.rhs, ic.u0, ic.alpha0, grid), n_trim);
                ok[i] = 1;
                return;
            } catch (const IntegrationBlowup&) {
                ++failures[i];
                auto ru = make_rng({spec.seed, detail::kStreamRetry, i, static_cast<std::uint64_t>(attempt), 0});
                auto ra = make_rng({spec.seed, detail::kStreamRetry, i, static_cast<std::uint64_t>(attempt), 1});
                ic = detail::draw_pair(spec, ru, ra);
                system.prepare({ic.alpha0});
            }
        }
    });

    DatasetPair out;
    long failed = 0;
    for (int f : failures) failed += f;
    out.resampled = failed;
    if (std::find(ok.begin(), ok.end(), 0) != ok.end()) {
        const long succeeded = std::count(ok.begin(), ok.end(), 1);
        const double rate = static_cast<double>(failed) / static_cast<double>(failed + succeeded);
        throw DatasetError("dataset construction failed: retry cap of " + std::to_string(kMaxRetriesPerTrajectory) +
                               " exceeded; blow-up rate " + std::to_string(rate),
                           rate);
    }
    std::vector<Trajectory> train(trajs.begin(), trajs.begin() + spec.n_train);
    out.train = stack(train);
    if (spec.n_test > 0) {
        std::vector<Trajectory> test(trajs.begin() + spec.n_train, trajs.end());
        out.test = stack(test);
    } else {
        out.test.t_kept = out.train.t_kept;
        out.test.grid = out.train.grid;
        out.test.U.resize(out.train.state_dim(), 0);
        out.test.U_dot.resize(out.train.state_dim(), 0);
    }
    return out;
}

struct Batch {
    Matrix U;
    Matrix U_dot;
    Vector alpha;  // per trajectory
    long t_kept = 0;

    long n_trajectories() const { return alpha.size(); }
    Vector alpha_per_column() const {
        Vector out(U.cols());
        for (long j = 0; j < n_trajectories(); ++j) out.segment(j * t_kept, t_kept).setConstant(alpha(j));
        return out;
    }
};

inline Batch as_batch(const TrajectorySet& set) { return Batch{set.U, set.U_dot, set.alpha, set.t_kept}; }

/// Trajectory order for an epoch; a pure function of (seed, epoch).
inline std::vector<long> epoch_permutation(long n, std::uint64_t seed, long epoch) {
    std::vector<long> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0L);
    auto rng = make_rng({seed, detail::kStreamShuffle, static_cast<std::uint64_t>(epoch)});
    // Fisher-Yates with explicit draws keeps the order library-independent.
    for (long i = n - 1; i > 0; --i) {
        const long j = static_cast<long>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

/// Shuffled whole-trajectory batches; a trailing partial batch is dropped.
inline std::vector<Batch> batches(const TrajectorySet& set, long batch_size, std::uint64_t seed, long epoch) {
    require(batch_size >= 1, "batch size must be positive");
    if (batch_size > set.n_trajectories())
        throw ArgumentError("batch size " + std::to_string(batch_size) + " exceeds trajectory count " +
                            std::to_string(set.n_trajectories()));
    const auto order = epoch_permutation(set.n_trajectories(), seed, epoch);
    const long count = set.n_trajectories() / batch_size;
    std::vector<Batch> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long b = 0; b < count; ++b) {
        std::vector<long> idx(order.begin() + b * batch_size, order.begin() + (b + 1) * batch_size);
        out.push_back(as_batch(select(set, idx)));
    }
    return out;
}

}  // namespace normform

#endif  // NORMFORM_DATASET_HPP
