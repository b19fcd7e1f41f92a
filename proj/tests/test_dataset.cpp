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
#include "normform/dataset.hpp"
#include "normform/systems.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace normform;

namespace {

SamplingSpec spec_for(const SystemInstance& s, double su, double sa, long n_train, long n_test, std::uint64_t seed) {
    SamplingSpec spec;
    spec.u_center = s.u_center;
    spec.sigma_u = su;
    spec.sigma_alpha = sa;
    spec.n_train = n_train;
    spec.n_test = n_test;
    spec.seed = seed;
    return spec;
}

TrajectorySet tiny_set(long n, long t_kept, long dim = 2) {
    std::vector<Trajectory> trajs;
    for (long j = 0; j < n; ++j) {
        Trajectory t;
        t.states = Matrix::Constant(dim, t_kept, static_cast<double>(j));
        t.derivs = Matrix::Constant(dim, t_kept, -static_cast<double>(j));
        t.alpha = 0.1 * static_cast<double>(j);
        t.grid = TimeGrid{0.0, 1.0, t_kept};
        trajs.push_back(t);
    }
    return stack(trajs);
}

}  // namespace

TEST(Sampling, ZeroWidthsGiveTheCenter) {
    SamplingSpec s;
    s.u_center = Vector::Constant(3, 0.25);
    s.alpha_center = -0.1;
    s.sigma_u = s.sigma_alpha = 0.0;
    s.n_train = 7;
    s.n_test = 3;
    const auto ics = sample_initial_conditions(s);
    ASSERT_EQ(ics.size(), 10u);
    for (const auto& ic : ics) {
        EXPECT_EQ(ic.u0, s.u_center);
        EXPECT_EQ(ic.alpha0, -0.1);
    }
}

TEST(Sampling, MeanAndSupportOfDraws) {
    SamplingSpec s;
    s.u_center = Vector::Constant(2, 1.0);
    s.alpha_center = 0.3;
    s.sigma_u = 0.2;
    s.sigma_alpha = 0.5;
    s.n_train = 100000;
    s.seed = 4;
    const auto ics = sample_initial_conditions(s);
    double mean = 0.0;
    for (const auto& ic : ics) {
        mean += ic.alpha0;
        EXPECT_LE(std::abs(ic.alpha0 - 0.3), 0.5);
        EXPECT_LE((ic.u0 - s.u_center).cwiseAbs().maxCoeff(), 0.2);
    }
    mean /= static_cast<double>(ics.size());
    EXPECT_LE(std::abs(mean - 0.3), 3.0 * 0.5 / std::sqrt(3.0e5));
}

TEST(Sampling, StateAndParameterStreamsAreIndependent) {
    SamplingSpec s;
    s.u_center = Vector::Zero(4);
    s.n_train = 50;
    s.n_test = 5;
    s.seed = 9;
    s.sigma_alpha = 0.5;
    const auto a = sample_initial_conditions(s);
    s.sigma_alpha = 0.0;
    const auto b = sample_initial_conditions(s);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].u0, b[i].u0);
    const auto c = sample_initial_conditions(s);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i].u0, c[i].u0);
}

TEST(Sampling, InvalidSpecRejected) {
    SamplingSpec s;
    s.u_center = Vector::Zero(1);
    s.sigma_u = -1.0;
    EXPECT_THROW(sample_initial_conditions(s), ArgumentError);
    s.sigma_u = 0.1;
    s.n_train = 0;
    EXPECT_THROW(sample_initial_conditions(s), ArgumentError);
}

TEST(BuildSet, SingleDeterministicTrajectoryEqualsIntegrateAndTrim) {
    const SystemInstance sys = make_lorenz96_system(Lorenz96Params{});
    SamplingSpec spec = spec_for(sys, 0.0, 0.0, 1, 0, 0);
    spec.u_center = Vector::Constant(64, 0.01);
    spec.u_center(3) = 0.05;
    spec.alpha_center = 0.2;
    const TimeGrid g{0.0, 20.0, 101};
    const DatasetPair d = build_set(sys, spec, g, 30);
    const Trajectory direct = trim_transients(integrate(sys.rhs, spec.u_center, 0.2, g), 30);
    EXPECT_EQ(d.train.U, direct.states);
    EXPECT_EQ(d.train.U_dot, direct.derivs);
    EXPECT_EQ(d.train.alpha(0), 0.2);
    EXPECT_EQ(d.test.n_trajectories(), 0);
    EXPECT_EQ(d.train.t_kept, 71);
}

TEST(BuildSet, Lorenz96BatchShapeMatchesTable) {
    const SystemInstance sys = make_lorenz96_system(Lorenz96Params{});
    const SamplingSpec spec = spec_for(sys, 0.1, 0.5, 200, 4, 1);
    const DatasetPair d = build_set(sys, spec, TimeGrid{0.0, 80.0, 500}, 200);
    EXPECT_EQ(d.train.U.rows(), 64);
    EXPECT_EQ(d.train.U.cols(), 200 * 300);
    EXPECT_EQ(d.test.U.cols(), 4 * 300);
    const auto bs = batches(d.train, 100, 0, 0);
    ASSERT_EQ(bs.size(), 2u);
    EXPECT_EQ(bs[0].U.rows(), 64);
    EXPECT_EQ(bs[0].U.cols(), 30000);
    // The full preset stacks 1000 trajectories.
    EXPECT_EQ(1000L * (500 - 200), 300000L);
}

TEST(BuildSet, NeuralFieldBatchShapeMatchesTable) {
    const SystemInstance sys = make_neural_field_system(NeuralFieldParams{});
    const SamplingSpec spec = spec_for(sys, 0.1, 0.5, 250, 0, 2);
    const DatasetPair d = build_set(sys, spec, TimeGrid{0.0, 100.0, 250}, 50);
    EXPECT_EQ(d.train.t_kept, 200);
    const auto bs = batches(d.train, 250, 0, 0);
    ASSERT_EQ(bs.size(), 1u);
    EXPECT_EQ(bs[0].U.rows(), 128);
    EXPECT_EQ(bs[0].U.cols(), 50000);
}

TEST(BuildSet, DerivativesAreTheSystemField) {
    const SystemInstance sys = make_scalar_system(ScalarOdeParams{}, ScalarBifurcation::Pitchfork);
    const DatasetPair d = build_set(sys, spec_for(sys, 0.5, 0.5, 20, 5, 3), TimeGrid{0.0, 2.0, 41}, 5);
    for (const TrajectorySet* set : {&d.train, &d.test}) {
        const Vector a = set->alpha_per_column();
        for (long c = 0; c < set->U.cols(); ++c)
            EXPECT_LE(std::abs(sys.rhs(set->U.col(c), a(c))(0) - set->U_dot(0, c)), 1e-12);
    }
}

TEST(BuildSet, TrainAndTestDoNotShareInitialConditions) {
    const SystemInstance sys = make_scalar_system(ScalarOdeParams{}, ScalarBifurcation::Pitchfork);
    const DatasetPair d = build_set(sys, spec_for(sys, 0.5, 0.5, 60, 20, 5), TimeGrid{0.0, 1.0, 11}, 0);
    std::set<std::pair<double, double>> seen;
    for (long j = 0; j < d.train.n_trajectories(); ++j)
        seen.insert({d.train.U(0, d.train.range(j).first), d.train.alpha(j)});
    for (long j = 0; j < d.test.n_trajectories(); ++j)
        EXPECT_EQ(seen.count({d.test.U(0, d.test.range(j).first), d.test.alpha(j)}), 0u);
}

TEST(BuildSet, BlowupsAreResampledToExactCounts) {
    // u' = u^2 escapes in finite time from any u0 > 1/20.
    SystemInstance sys;
    sys.state_dim = 1;
    sys.u_center = Vector::Zero(1);
    sys.rhs = [](const Vector& u, double) { return Vector(u.cwiseProduct(u)); };
    SamplingSpec spec = spec_for(sys, 1.0, 0.5, 40, 10, 6);
    const DatasetPair d = build_set(sys, spec, TimeGrid{0.0, 20.0, 201}, 0);
    EXPECT_GT(d.resampled, 0);
    EXPECT_EQ(d.train.n_trajectories(), 40);
    EXPECT_EQ(d.test.n_trajectories(), 10);
    EXPECT_TRUE(d.train.U.allFinite());
    EXPECT_LE(d.train.U.cwiseAbs().maxCoeff(), kBlowupThreshold);
    for (long j = 0; j < d.train.n_trajectories(); ++j) EXPECT_LT(d.train.U(0, d.train.range(j).first), 0.05);
}

TEST(BuildSet, RetryCapReportsFailureRate) {
    SystemInstance sys;
    sys.state_dim = 1;
    sys.u_center = Vector::Constant(1, 5.0);
    sys.rhs = [](const Vector& u, double) { return Vector(u.cwiseProduct(u)); };
    SamplingSpec spec = spec_for(sys, 0.1, 0.1, 3, 1, 0);
    try {
        build_set(sys, spec, TimeGrid{0.0, 10.0, 101}, 0);
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        EXPECT_NEAR(e.failure_rate(), 1.0, 1e-12);
    }
}

TEST(BuildSet, ThreadCountDoesNotChangeResults) {
    const SystemInstance sys = make_scalar_system(ScalarOdeParams{}, ScalarBifurcation::SaddleNode);
    const SamplingSpec spec = spec_for(sys, 3.0, 0.5, 30, 5, 8);
    const TimeGrid g{0.0, 20.0, 201};
    setenv("NORMFORM_THREADS", "1", 1);
    const DatasetPair a = build_set(sys, spec, g, 0);
    setenv("NORMFORM_THREADS", "4", 1);
    const DatasetPair b = build_set(sys, spec, g, 0);
    unsetenv("NORMFORM_THREADS");
    EXPECT_EQ(a.train.U, b.train.U);
    EXPECT_EQ(a.test.alpha, b.test.alpha);
}

TEST(TrajectorySet, StackUnstackRoundTrip) {
    const SystemInstance sys = make_lorenz96_system(Lorenz96Params{});
    SamplingSpec spec = spec_for(sys, 0.1, 0.5, 5, 0, 2);
    const TimeGrid g{0.0, 10.0, 51};
    const DatasetPair d = build_set(sys, spec, g, 10);
    const auto ics = sample_initial_conditions(spec);
    const auto parts = unstack(d.train);
    ASSERT_EQ(parts.size(), 5u);
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const Trajectory direct = trim_transients(integrate(sys.rhs, ics[j].u0, ics[j].alpha0, g), 10);
        EXPECT_EQ(parts[j].states, direct.states);
        EXPECT_EQ(parts[j].derivs, direct.derivs);
        EXPECT_EQ(parts[j].alpha, direct.alpha);
    }
    EXPECT_EQ(stack(parts).U, d.train.U);
}

TEST(TrajectorySet, RangesPartitionColumns) {
    const TrajectorySet s = tiny_set(4, 6);
    long next = 0;
    for (long j = 0; j < 4; ++j) {
        EXPECT_EQ(s.range(j).first, next);
        next = s.range(j).second;
    }
    EXPECT_EQ(next, s.U.cols());
    EXPECT_NO_THROW(s.validate());
}

TEST(Batches, CountsFromTrajectoryDivision) {
    const TrajectorySet s = tiny_set(1000, 2, 1);
    EXPECT_EQ(batches(s, 100, 0, 0).size(), 10u);
    EXPECT_EQ(batches(s, 250, 0, 0).size(), 4u);
    EXPECT_EQ(batches(s, 1000, 0, 0).size(), 1u);
    EXPECT_EQ(batches(s, 300, 0, 0).size(), 3u);
    EXPECT_THROW(batches(s, 1001, 0, 0), ArgumentError);
}

TEST(Batches, WholeTrajectoriesAndDeterministicShuffle) {
    const TrajectorySet s = tiny_set(20, 5);
    const auto a = batches(s, 20, 3, 0);
    ASSERT_EQ(a.size(), 1u);
    std::set<double> ids;
    for (long j = 0; j < 20; ++j) {
        const double id = a[0].U(0, j * 5);
        for (long k = 0; k < 5; ++k) EXPECT_EQ(a[0].U(1, j * 5 + k), id);
        EXPECT_DOUBLE_EQ(a[0].alpha(j), 0.1 * id);
        ids.insert(id);
    }
    EXPECT_EQ(ids.size(), 20u);

    const auto b = batches(s, 20, 3, 0);
    const auto c = batches(s, 20, 3, 1);
    EXPECT_EQ(a[0].U, b[0].U);
    EXPECT_NE(a[0].U, c[0].U);
    EXPECT_EQ(a[0].alpha_per_column().size(), 100);
}
