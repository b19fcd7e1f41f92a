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
#ifndef NORMFORM_POD_HPP
#define NORMFORM_POD_HPP

#include "normform/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <string>

namespace normform {

/// Truncated POD basis of one snapshot sequence. Singular values live in the
/// reduced series, so reconstruction multiplies modes by the series directly.
struct PodBasis {
    Vector mean_field;
    Matrix modes;             // space_dim x m, orthonormal columns
    Vector singular_values;   // m, descending
    Matrix gamma;             // m x m, orthogonal

    long m() const { return modes.cols(); }
    long space_dim() const { return modes.rows(); }
};

struct ReducedSeries {
    Matrix Lambda;  // Sigma_m V_m^T, m x t
    Matrix mixed;   // gamma * Lambda
};

struct PodDecomposition {
    PodBasis basis;
    ReducedSeries series;
    /// All singular values of the centered, strided snapshots.
    Vector all_singular_values;
};

/// Centered snapshots exactly as decomposed (trimmed, mean removed, strided).
inline Matrix centered_strided(const Matrix& snapshots, long trim, long stride) {
    const Matrix trimmed = snapshots.rightCols(snapshots.cols() - trim);
    const Vector mean = trimmed.rowwise().mean();
    const long kept = (trimmed.cols() + stride - 1) / stride;
    Matrix X(snapshots.rows(), kept);
    for (long k = 0; k < kept; ++k) X.col(k) = trimmed.col(k * stride) - mean;
    return X;
}

/// Method of snapshots via a thin SVD: trim `trim` leading columns, subtract
/// the temporal mean of what remains, keep every `stride`-th column and
/// truncate to rank m. Gamma is the identity until mixing is applied.
///
/// m may exceed the numerical rank (the extra modes carry zero energy) but
/// not the structural rank min(space_dim, kept columns).
inline PodDecomposition pod_decompose(const Matrix& snapshots, long m, long trim, long stride = 10) {
    require(m >= 1, "pod: m must be >= 1");
    require(stride >= 1, "pod: stride must be >= 1");
    require(trim >= 0, "pod: trim must be non-negative");
    require(snapshots.allFinite(), "pod: snapshots must be finite");
    const long t_total = snapshots.cols();
    if (t_total - trim < m)
        throw RankError("pod: " + std::to_string(t_total - trim) + " snapshots after trimming cannot support m = " +
                            std::to_string(m),
                        std::max(0L, t_total - trim));

    const Vector mean = snapshots.rightCols(t_total - trim).rowwise().mean();
    const Matrix X = centered_strided(snapshots, trim, stride);

    const long structural = std::min<long>(X.rows(), X.cols());
    if (m > structural)
        throw RankError("pod: requested rank " + std::to_string(m) + " exceeds achievable rank " +
                            std::to_string(structural),
                        structural);

    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    PodDecomposition out;
    out.all_singular_values = svd.singularValues();
    Matrix U = svd.matrixU().leftCols(m);
    Matrix V = svd.matrixV().leftCols(m);
    const Vector s = svd.singularValues().head(m);

    // Fix the sign of each mode: its largest-magnitude entry is positive.
    for (long j = 0; j < m; ++j) {
        Eigen::Index imax = 0;
        U.col(j).cwiseAbs().maxCoeff(&imax);
        if (U(imax, j) < 0.0) {
            U.col(j) *= -1.0;
            V.col(j) *= -1.0;
        }
    }

    out.basis.mean_field = mean;
    out.basis.modes = std::move(U);
    out.basis.singular_values = s;
    out.basis.gamma = Matrix::Identity(m, m);
    out.series.Lambda = s.asDiagonal() * V.transpose();
    out.series.mixed = out.series.Lambda;
    return out;
}

/// Orthogonal factor U V^T of a seeded Gaussian matrix.
inline Matrix make_unitary_gamma(long m, std::uint64_t seed) {
    require(m >= 1, "gamma: m must be >= 1");
    auto rng = make_rng({seed, 0x67616d6d61ull});
    Matrix g(m, m);
    for (long c = 0; c < m; ++c)
        for (long r = 0; r < m; ++r) g(r, c) = standard_normal(rng);
    Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// The 4 x 4 mixing matrix of the cylinder-wake experiment, entries exactly
/// as printed. Two of them are off by a digit (see published_gamma), so this
/// one is only orthogonal to about 3.5e-4.
inline Matrix published_gamma_as_printed() {
    Matrix g(4, 4);
    g << 0.154739, -0.523688, 0.675546, 0.495243,  //
        0.87244, 0.298319, 0.249166, -0.29685,     //
        -0.292797, 0.785392, 0.450626, 0.30719,    //
        0.359894, 0.141123, -0.527721, 0.756353;
    return g;
}

/// The cylinder-wake mixing matrix with entries (0,3) = 0.495423 and
/// (1,0) = 0.87224. The printed 0.495243 and 0.87244 leave rows 0 and 1 and
/// columns 0 and 3 off unit norm by ~1e-4; with these two digits restored
/// the matrix is orthogonal to 1.3e-6, the rounding of six printed digits.
inline Matrix published_gamma() {
    Matrix g = published_gamma_as_printed();
    g(0, 3) = 0.495423;
    g(1, 0) = 0.87224;
    return g;
}

inline void apply_gamma(PodDecomposition& d, const Matrix& gamma) {
    require(gamma.rows() == d.basis.m() && gamma.cols() == d.basis.m(), "gamma must be m x m");
    d.basis.gamma = gamma;
    d.series.mixed = gamma * d.series.Lambda;
}

/// mean + modes * gamma^T * mixed_series.
inline Matrix reconstruct(const PodBasis& basis, const Matrix& mixed_series) {
    if (mixed_series.rows() != basis.m() || basis.gamma.rows() != basis.m() || basis.gamma.cols() != basis.m() ||
        basis.mean_field.size() != basis.space_dim())
        throw ArgumentError("pod reconstruct: dimension mismatch");
    Matrix out = basis.modes * (basis.gamma.transpose() * mixed_series);
    out.colwise() += basis.mean_field;
    return out;
}

/// Time derivative of a uniformly sampled series: second-order centered
/// differences inside, second-order one-sided at the ends.
inline Matrix finite_difference(const Matrix& series, double dt) {
    require(dt > 0.0, "finite_difference: dt must be positive");
    const long n = series.cols();
    require(n >= 3, "finite_difference: need at least 3 samples");
    Matrix d(series.rows(), n);
    for (long k = 1; k + 1 < n; ++k) d.col(k) = (series.col(k + 1) - series.col(k - 1)) / (2.0 * dt);
    d.col(0) = (-3.0 * series.col(0) + 4.0 * series.col(1) - series.col(2)) / (2.0 * dt);
    d.col(n - 1) = (3.0 * series.col(n - 1) - 4.0 * series.col(n - 2) + series.col(n - 3)) / (2.0 * dt);
    return d;
}

}  // namespace normform

#endif  // NORMFORM_POD_HPP
