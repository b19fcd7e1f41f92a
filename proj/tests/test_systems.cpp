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
#include "normform/analysis.hpp"
#include "normform/systems.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <numbers>

using namespace normform;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<long>(v.size()));
    long i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Straight transcription of the cyclic Lorenz96 sum with 1-based indices.
Vector lorenz96_oracle(const Vector& u, double alpha) {
    const long n = u.size();
    auto at = [&](long j) { return u(((j - 1) % n + n) % n); };
    Vector out(n);
    for (long j = 1; j <= n; ++j) out(j - 1) = -at(j - 1) * (at(j - 2) - at(j + 1)) - at(j) + alpha;
    return out;
}

Matrix fd_jacobian(const VectorField& f, const Vector& u, double alpha, double h = 1e-6) {
    const long n = u.size();
    Matrix J(n, n);
    for (long c = 0; c < n; ++c) {
        Vector up = u, um = u;
        up(c) += h;
        um(c) -= h;
        J.col(c) = (f(up, alpha) - f(um, alpha)) / (2.0 * h);
    }
    return J;
}

}  // namespace

TEST(ScalarOde, Examples) {
    const ScalarOdeParams p;
    EXPECT_EQ(p.gamma, 0.01);
    EXPECT_EQ(p.u_sn, -6.0);
    EXPECT_EQ(p.alpha_sn, -6.0);
    EXPECT_EQ(p.alpha_pf, 6.0);
    EXPECT_EQ(scalar_rhs(p, 0.0, 3.7), 0.0);
    EXPECT_NEAR(scalar_rhs(p, 1.0, 0.0), -3.85, 1e-12);
    EXPECT_EQ(scalar_rhs(p, -6.0, -6.0), 0.0);
}

TEST(ScalarOde, TranslatedExamples) {
    const ScalarOdeParams p;
    EXPECT_EQ(scalar_translated_rhs(p, 0.0, 0.0, ScalarBifurcation::Pitchfork), 0.0);
    EXPECT_EQ(scalar_translated_rhs(p, 0.0, 0.0, ScalarBifurcation::SaddleNode), 0.0);
    EXPECT_EQ(scalar_translated_rhs(p, 0.0, 0.0, ScalarBifurcation::Transcritical), 0.0);
    EXPECT_DOUBLE_EQ(scalar_translated_rhs(p, 0.1, 0.05, ScalarBifurcation::Pitchfork), scalar_rhs(p, 0.1, 6.05));
    EXPECT_DOUBLE_EQ(scalar_translated_rhs(p, 0.1, 0.05, ScalarBifurcation::SaddleNode),
                     scalar_rhs(p, 0.1 - 6.0, 0.05 - 6.0));
    EXPECT_DOUBLE_EQ(scalar_translated_rhs(p, 0.1, 0.05, ScalarBifurcation::Transcritical),
                     scalar_rhs(p, 0.1, 0.05 - 6.0 - 36.0));
    const auto tc = scalar_bifurcation_point(p, ScalarBifurcation::Transcritical);
    EXPECT_EQ(tc.first, 0.0);
    EXPECT_EQ(tc.second, -42.0);
}

TEST(ScalarOde, TagsAndValidation) {
    EXPECT_EQ(scalar_bifurcation_from_string("SN"), ScalarBifurcation::SaddleNode);
    EXPECT_EQ(scalar_bifurcation_from_string("PF"), ScalarBifurcation::Pitchfork);
    EXPECT_EQ(scalar_bifurcation_from_string("TC"), ScalarBifurcation::Transcritical);
    EXPECT_THROW(scalar_bifurcation_from_string("HB"), ConfigError);
    ScalarOdeParams bad;
    bad.gamma = 0.0;
    EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(ScalarOde, PitchforkFactorsThroughPositiveScaling) {
    const ScalarOdeParams p;
    auto rng = make_rng({21});
    for (int s = 0; s < 200; ++s) {
        const double u = uniform_pm1(rng), a = uniform_pm1(rng);
        const double h = pitchfork_scaling(p, u, a);
        EXPECT_GT(h, 0.0);
        const double lhs = scalar_translated_rhs(p, u, a, ScalarBifurcation::Pitchfork);
        const double rhs = h * u * (a - u * u);
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(std::abs(lhs), 1e-300)) << u << " " << a;
    }
}

TEST(Lorenz96, Examples) {
    Lorenz96Params p;
    EXPECT_EQ(p.n, 64);
    for (double a : {-1.5, 0.0, 0.84975, 8.0})
        EXPECT_EQ(lorenz96_rhs(p, Vector::Constant(64, a), a).cwiseAbs().maxCoeff(), 0.0);

    p.n = 4;
    // Each quadratic term pairs two distinct entries, so a single nonzero
    // entry contributes only through -u_j.
    EXPECT_EQ(lorenz96_rhs(p, vec({1, 0, 0, 0}), 0.0), vec({-1, 0, 0, 0}));
    EXPECT_EQ(lorenz96_rhs(p, vec({1, 2, 3, 4}), 0.0), vec({-5, -3, 3, -7}));

    const Vector u = vec({0.3, -1.2, 2.0, 0.7});
    const Vector d = lorenz96_rhs(p, u, 2.5) - lorenz96_rhs(p, u, -0.5);
    EXPECT_LE((d - Vector::Constant(4, 3.0)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(lorenz96_rhs(p, Vector::Zero(5), 0.0), ArgumentError);
}

TEST(Lorenz96, MatchesIndependentOracle) {
    for (long n : {4L, 5L, 17L, 64L}) {
        Lorenz96Params p;
        p.n = n;
        const Vector u = normform::testing::random_matrix(n, 1, static_cast<std::uint64_t>(n), 3.0);
        EXPECT_LE((lorenz96_rhs(p, u, 0.9) - lorenz96_oracle(u, 0.9)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(Lorenz96, UniformStateIsEquilibriumForRandomForcing) {
    const Lorenz96Params p;
    auto rng = make_rng({22});
    for (int s = 0; s < 50; ++s) {
        const double a = 10.0 * uniform_pm1(rng);
        EXPECT_EQ(lorenz96_rhs(p, Vector::Constant(p.n, a), a).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Lorenz96, TranslatedField) {
    const Lorenz96Params p;
    EXPECT_EQ(kLorenz96AlphaC, 0.84975);
    for (double a : {-0.4, 0.0, 0.3})
        EXPECT_LE(lorenz96_translated_rhs(p, Vector::Zero(p.n), a).cwiseAbs().maxCoeff(), 1e-14);
    const Vector u = Vector::Constant(p.n, 0.1);
    const Vector expect = lorenz96_rhs(p, u + Vector::Constant(p.n, kLorenz96AlphaC), kLorenz96AlphaC);
    EXPECT_LE((lorenz96_translated_rhs(p, u, 0.0) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lorenz96, HopfPairCrossesImaginaryAxisAtZero) {
    const Lorenz96Params p;
    const VectorField f = [&](const Vector& u, double a) { return lorenz96_translated_rhs(p, u, a); };
    auto max_real = [&](double a) {
        Eigen::EigenSolver<Matrix> es(fd_jacobian(f, Vector::Zero(p.n), a));
        return es.eigenvalues().real().maxCoeff();
    };
    EXPECT_LT(max_real(-0.05), 0.0);
    EXPECT_GT(max_real(0.05), 0.0);
}

TEST(NeuralField, DefaultsFromPaperTable) {
    const NeuralFieldParams p;
    EXPECT_EQ(p.kappa, 2.75);
    EXPECT_EQ(p.tau_nf, 10.0);
    EXPECT_EQ(p.w_e, 1.0);
    EXPECT_EQ(p.sigma_e, 1.0);
    EXPECT_EQ(p.beta_nf, 6.0);
    EXPECT_EQ(p.u_thr, 0.375);
    EXPECT_EQ(p.sigma, 1.2);
    EXPECT_EQ(p.grid.x_min, -6.0);
    EXPECT_EQ(p.grid.x_max, 6.0);
    EXPECT_EQ(p.grid.n_points, 64);
}

TEST(NeuralField, RestStateGivesConvolvedBaselineRate) {
    const NeuralFieldParams p;
    const long n = p.grid.n_points;
    const auto [du, da] = neural_field_rhs(p, Vector::Zero(n), Vector::Zero(n), 0.0);
    const double f0 = 1.0 / (1.0 + std::exp(2.25));
    EXPECT_NEAR(firing_rate(p, 0.0), f0, 1e-15);
    const double dx = 12.0 / 63.0;
    for (long i = 0; i < n; ++i) {
        double weight = 0.0;
        for (long j = 0; j < n; ++j) {
            const double r = (-6.0 + dx * i) - (-6.0 + dx * j);
            weight += std::exp(-r * r) * dx / std::sqrt(std::numbers::pi);
        }
        EXPECT_NEAR(du(i), f0 * weight, 1e-12);
    }
    EXPECT_EQ(da.cwiseAbs().maxCoeff(), 0.0);
}

TEST(NeuralField, KernelMass) {
    NeuralFieldParams p;
    p.grid = SpatialGrid{-20.0, 20.0, 401};
    const Matrix k = neural_field_kernel(p);
    EXPECT_NEAR(k.row(200).sum(), 1.0, 1e-10);
    p.unit_mass_kernel = false;
    EXPECT_NEAR(neural_field_kernel(p).row(200).sum(), std::sqrt(std::numbers::pi), 1e-10);
}

TEST(NeuralField, BumpLosesStabilityNearCriticalInput) {
    const SystemInstance s = make_neural_field_system(NeuralFieldParams{});
    s.prepare({-0.1, 0.1});
    Vector u0 = Vector::Zero(128);
    for (long i = 0; i < 64; ++i) u0(i) = 0.01 * std::cos(0.3 * static_cast<double>(i));
    const auto pts = amplitude_vs_parameter(s.rhs, u0, {-0.1, 0.1}, TimeGrid{0.0, 600.0, 3001}, 1e-3);
    EXPECT_LT(pts[0].fluctuation, 1e-3);
    EXPECT_GT(pts[1].amplitude, 1e-2);
}

TEST(NeuralField, AdaptationVanishesWhenUEqualsA) {
    const NeuralFieldParams p;
    const Vector u = normform::testing::random_matrix(p.grid.n_points, 1, 5);
    EXPECT_EQ(neural_field_rhs(p, u, u, 0.4).second.cwiseAbs().maxCoeff(), 0.0);
}

TEST(NeuralField, InputProfile) {
    NeuralFieldParams p;
    p.grid.n_points = 11;  // dx = 1.2 puts x = sigma on the grid
    const Vector in = neural_field_input(p, 0.7);
    EXPECT_DOUBLE_EQ(in(5), 0.7);
    EXPECT_NEAR(in(6), 0.7 / std::exp(1.0), 1e-15);
    EXPECT_NEAR(in(4), 0.7 / std::exp(1.0), 1e-15);
}

TEST(NeuralField, ConvolutionCommutesWithReflection) {
    const NeuralField f{NeuralFieldParams{}};
    const Vector u = normform::testing::random_matrix(f.n(), 1, 6);
    const Vector lhs = f.convolve(u).reverse();
    const Vector rhs = f.convolve(u.reverse());
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(NeuralField, ValidationAndShapes) {
    NeuralFieldParams p;
    p.tau_nf = 0.0;
    EXPECT_THROW(p.validate(), ArgumentError);
    p = NeuralFieldParams{};
    p.grid.n_points = 1;
    EXPECT_THROW(p.validate(), ArgumentError);
    const NeuralFieldParams q;
    EXPECT_THROW(neural_field_rhs(q, Vector::Zero(3), Vector::Zero(64), 0.0), ArgumentError);
}

TEST(EstimateEquilibrium, Examples) {
    const Matrix c = Vector::Constant(3, 1.5).replicate(1, 20);
    EXPECT_EQ(estimate_nf_equilibrium(-0.2, c, 5), Vector::Constant(3, 1.5));
    EXPECT_LE((estimate_nf_equilibrium(0.2, c, 5) - Vector::Constant(3, 1.5)).cwiseAbs().maxCoeff(), 1e-15);

    Matrix t = normform::testing::random_matrix(2, 30, 7);
    EXPECT_EQ(estimate_nf_equilibrium(-0.1, t, 10), Vector(t.col(29)));

    // Four full periods of a sinusoid about m after the trim.
    const long trim = 10, per = 25;
    Matrix s(2, trim + 4 * per);
    for (long k = 0; k < s.cols(); ++k) {
        const double ph = 2.0 * 3.14159265358979323846 * static_cast<double>(k - trim) / per;
        s(0, k) = 0.3 + std::sin(ph);
        s(1, k) = -1.0 + 0.5 * std::cos(ph);
    }
    const Vector m = estimate_nf_equilibrium(0.1, s, trim);
    EXPECT_NEAR(m(0), 0.3, 1e-6);
    EXPECT_NEAR(m(1), -1.0, 1e-6);

    EXPECT_THROW(estimate_nf_equilibrium(0.1, Matrix(0, 0), 0), ArgumentError);
    EXPECT_THROW(estimate_nf_equilibrium(0.1, s, s.cols()), ArgumentError);
}

TEST(SystemInstances, TranslatedFieldsVanishAtOrigin) {
    const ScalarOdeParams p;
    for (auto b : {ScalarBifurcation::SaddleNode, ScalarBifurcation::Pitchfork, ScalarBifurcation::Transcritical}) {
        const SystemInstance s = make_scalar_system(p, b);
        EXPECT_EQ(s.state_dim, 1);
        EXPECT_LT(s.rhs(Vector::Zero(1), 0.0).cwiseAbs().maxCoeff(), 1e-8);
    }
    const SystemInstance l = make_lorenz96_system(Lorenz96Params{});
    EXPECT_EQ(l.state_dim, 64);
    EXPECT_EQ(l.alpha_c, kLorenz96AlphaC);
    EXPECT_LT(l.rhs(Vector::Zero(64), 0.0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SystemInstances, NeuralFieldSettledEquilibriumIsNearlyStationary) {
    const SystemInstance s = make_neural_field_system(NeuralFieldParams{});
    EXPECT_EQ(s.state_dim, 128);
    for (double a : {-0.2, -0.05}) {
        s.prepare({a});
        EXPECT_LT(s.rhs(Vector::Zero(128), a).cwiseAbs().maxCoeff(), 1e-3) << "alpha " << a;
    }
}

TEST(SystemInstances, NeuralFieldCacheIsSafeUnderConcurrentReads) {
    const NeuralFieldEquilibria eqs(NeuralField{NeuralFieldParams{}}, kNeuralFieldAlphaC,
                                    SettleSpec{TimeGrid{0.0, 40.0, 201}, 100});
    const std::vector<double> alphas{-0.3, -0.1, 0.1, 0.3};
    eqs.warm_up(alphas);
    std::vector<Vector> a(16), b(16);
    parallel_for(16, [&](std::size_t i) { a[i] = eqs.get(alphas[i % 4]); });
    for (std::size_t i = 0; i < 16; ++i) b[i] = eqs.compute(alphas[i % 4]);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(a[i], b[i]);
}
