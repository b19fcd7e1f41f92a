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
#ifndef NORMFORM_MLP_HPP
#define NORMFORM_MLP_HPP

#include "normform/core.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace normform {

enum class Activation { Tanh, Elu };

inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "elu"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "elu") return Activation::Elu;
    throw ConfigError("unknown activation '" + s + "'");
}

namespace act {

// elu with unit scale. The second derivative jumps at 0; the left limit
// (e^0 = 1) is used there.
inline double value(Activation a, double x) {
    if (a == Activation::Tanh) return std::tanh(x);
    return x > 0.0 ? x : std::expm1(x);
}
inline double d1(Activation a, double x) {
    if (a == Activation::Tanh) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    return x > 0.0 ? 1.0 : std::exp(x);
}
inline double d2(Activation a, double x) {
    if (a == Activation::Tanh) {
        const double t = std::tanh(x);
        return -2.0 * t * (1.0 - t * t);
    }
    return x > 0.0 ? 0.0 : std::exp(x);
}

inline Matrix apply(Activation a, const Matrix& x) {
    return x.unaryExpr([a](double v) { return value(a, v); });
}
inline Matrix apply_d1(Activation a, const Matrix& x) {
    return x.unaryExpr([a](double v) { return d1(a, v); });
}
inline Matrix apply_d2(Activation a, const Matrix& x) {
    return x.unaryExpr([a](double v) { return d2(a, v); });
}

}  // namespace act

/// Fully connected network; activation on hidden layers, linear output.
struct Mlp {
    std::vector<long> layer_sizes;
    std::vector<Matrix> weights;  // weights[l] : sizes[l+1] x sizes[l]
    std::vector<Vector> biases;
    Activation activation = Activation::Tanh;

    long in_dim() const { return layer_sizes.front(); }
    long out_dim() const { return layer_sizes.back(); }
    std::size_t n_layers() const { return weights.size(); }

    long parameter_count() const {
        long n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }

    void validate() const {
        require(layer_sizes.size() >= 2, "mlp needs at least input and output sizes");
        require(weights.size() + 1 == layer_sizes.size() && biases.size() == weights.size(),
                "mlp parameter lists do not match layer sizes");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            require(weights[l].rows() == layer_sizes[l + 1] && weights[l].cols() == layer_sizes[l] &&
                        biases[l].size() == layer_sizes[l + 1],
                    "mlp layer " + std::to_string(l) + " has inconsistent shape");
        }
    }
};

/// Parameter-shaped container used for gradients and optimizer moments.
struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static MlpGrads zeros_like(const Mlp& net) {
        MlpGrads g;
        for (std::size_t l = 0; l < net.n_layers(); ++l) {
            g.weights.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            g.biases.push_back(Vector::Zero(net.biases[l].size()));
        }
        return g;
    }

    MlpGrads& operator+=(const MlpGrads& o) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += o.weights[l];
            biases[l] += o.biases[l];
        }
        return *this;
    }
};

/// Glorot-uniform weights, zero biases.
inline Mlp init(const std::vector<long>& layer_sizes, Activation activation, std::uint64_t seed) {
    if (layer_sizes.empty()) throw ArgumentError("mlp init: empty layer size list");
    require(layer_sizes.size() >= 2, "mlp init: need input and output sizes");
    for (long s : layer_sizes) require(s >= 1, "mlp init: layer sizes must be >= 1");
    Mlp net;
    net.layer_sizes = layer_sizes;
    net.activation = activation;
    auto rng = make_rng({seed, 0x676c6f726f74ull});
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const long fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (long c = 0; c < fan_in; ++c)
            for (long r = 0; r < fan_out; ++r) w(r, c) = bound * uniform_pm1(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector::Zero(fan_out));
    }
    return net;
}

/// Layer-by-layer values of one forward pass, optionally with a tangent.
struct MlpTrace {
    std::vector<Matrix> act;      // act[0] = x, act[l] = output of layer l
    std::vector<Matrix> pre;      // pre[l] = W_l act[l] + b_l
    std::vector<Matrix> act_dot;  // tangents of act (empty without tangent)
    std::vector<Matrix> pre_dot;

    bool has_tangent() const { return !act_dot.empty(); }
    const Matrix& output() const { return act.back(); }
    const Matrix& output_dot() const { return act_dot.back(); }
};

namespace detail {
inline void check_input(const Mlp& net, const Matrix& x, const char* what) {
    if (x.rows() != net.in_dim())
        throw ArgumentError(std::string(what) + ": input has " + std::to_string(x.rows()) + " rows, network expects " +
                            std::to_string(net.in_dim()));
}
}  // namespace detail

inline MlpTrace trace(const Mlp& net, const Matrix& x, const Matrix* v = nullptr) {
    detail::check_input(net, x, "mlp forward");
    if (v && (v->rows() != x.rows() || v->cols() != x.cols()))
        throw ArgumentError("mlp jvp: tangent shape differs from input");
    const std::size_t L = net.n_layers();
    MlpTrace t;
    t.act.reserve(L + 1);
    t.pre.reserve(L);
    t.act.push_back(x);
    if (v) t.act_dot.push_back(*v);
    for (std::size_t l = 0; l < L; ++l) {
        Matrix z = net.weights[l] * t.act[l];
        z.colwise() += net.biases[l];
        const bool hidden = l + 1 < L;
        if (v) {
            Matrix zd = net.weights[l] * t.act_dot[l];
            t.act_dot.push_back(hidden ? Matrix(act::apply_d1(net.activation, z).cwiseProduct(zd)) : zd);
            t.pre_dot.push_back(std::move(zd));
        }
        t.act.push_back(hidden ? act::apply(net.activation, z) : z);
        t.pre.push_back(std::move(z));
    }
    return t;
}

inline Matrix forward(const Mlp& net, const Matrix& x) { return trace(net, x).output(); }

/// Directional derivative of forward at x along v, column by column.
inline Matrix jvp_input(const Mlp& net, const Matrix& x, const Matrix& v) { return trace(net, x, &v).output_dot(); }

struct MlpBackprop {
    MlpGrads params;
    Matrix dx;
    Matrix dv;  // empty unless the trace carried a tangent
};

/// Reverse pass for S = sum(out_grad .* y) + sum(dot_grad .* y_dot), where y
/// and y_dot are the output and its tangent. Either upstream may be empty.
inline MlpBackprop backward_combined(const Mlp& net, const MlpTrace& t, const Matrix& out_grad,
                                     const Matrix& dot_grad) {
    const std::size_t L = net.n_layers();
    const long cols = t.act[0].cols();
    const bool use_out = out_grad.size() > 0;
    const bool use_dot = dot_grad.size() > 0;
    if (use_dot && !t.has_tangent()) throw ArgumentError("mlp backward: tangent upstream without tangent trace");
    if (use_out && (out_grad.rows() != net.out_dim() || out_grad.cols() != cols))
        throw ArgumentError("mlp backward: upstream shape mismatch");
    if (use_dot && (dot_grad.rows() != net.out_dim() || dot_grad.cols() != cols))
        throw ArgumentError("mlp backward: tangent upstream shape mismatch");

    MlpBackprop bp;
    bp.params = MlpGrads::zeros_like(net);

    // Adjoints of act[l] (primal) and act_dot[l] (tangent), walking down.
    Matrix g_act = use_out ? out_grad : Matrix::Zero(net.out_dim(), cols);
    Matrix g_dot;
    if (use_dot) g_dot = dot_grad;

    for (std::size_t li = L; li-- > 0;) {
        const bool hidden = li + 1 < L;
        Matrix g_pre, g_pre_dot;
        if (hidden) {
            const Matrix d1 = act::apply_d1(net.activation, t.pre[li]);
            g_pre = g_act.cwiseProduct(d1);
            if (use_dot) {
                const Matrix d2 = act::apply_d2(net.activation, t.pre[li]);
                g_pre += g_dot.cwiseProduct(t.pre_dot[li]).cwiseProduct(d2);
                g_pre_dot = g_dot.cwiseProduct(d1);
            }
        } else {
            g_pre = std::move(g_act);
            if (use_dot) g_pre_dot = std::move(g_dot);
        }

        bp.params.weights[li].noalias() += g_pre * t.act[li].transpose();
        bp.params.biases[li] += g_pre.rowwise().sum();
        g_act = net.weights[li].transpose() * g_pre;
        if (use_dot) {
            bp.params.weights[li].noalias() += g_pre_dot * t.act_dot[li].transpose();
            g_dot = net.weights[li].transpose() * g_pre_dot;
        }
    }
    bp.dx = std::move(g_act);
    if (use_dot) {
        bp.dv = std::move(g_dot);
    } else if (t.has_tangent()) {
        bp.dv = Matrix::Zero(t.act[0].rows(), cols);
    }
    return bp;
}

/// Gradients of sum(upstream .* forward(x)).
inline MlpBackprop backward(const Mlp& net, const Matrix& x, const Matrix& upstream) {
    return backward_combined(net, trace(net, x), upstream, Matrix());
}

/// Gradients of sum(upstream .* jvp_input(x, v)) w.r.t. parameters, x and v.
inline MlpBackprop backward_through_jvp(const Mlp& net, const Matrix& x, const Matrix& v, const Matrix& upstream) {
    return backward_combined(net, trace(net, x, &v), Matrix(), upstream);
}

// ---------------------------------------------------------------------------
// ADAM
// ---------------------------------------------------------------------------

/// One optimizable tensor viewed as a flat span.
struct ParamSlot {
    std::string name;
    std::span<double> value;
    std::span<const double> grad;
};

struct AdamState {
    double eta = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Vector> m;
    std::vector<Vector> v;
};

/// Bias-corrected ADAM update of every slot. Moments are allocated on the
/// first call. Non-finite gradients abort before any parameter changes.
inline void adam_step(AdamState& state, const std::vector<ParamSlot>& slots) {
    for (const auto& s : slots) {
        require(s.value.size() == s.grad.size(), "adam: parameter and gradient sizes differ for " + s.name);
        for (double g : s.grad)
            if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in " + s.name);
    }
    if (state.m.empty()) {
        for (const auto& s : slots) {
            state.m.push_back(Vector::Zero(static_cast<long>(s.value.size())));
            state.v.push_back(Vector::Zero(static_cast<long>(s.value.size())));
        }
    }
    require(state.m.size() == slots.size(), "adam: slot count changed between steps");
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto& s = slots[k];
        Vector& m = state.m[k];
        Vector& v = state.v[k];
        require(m.size() == static_cast<long>(s.value.size()), "adam: moment shape mismatch for " + s.name);
        for (std::size_t i = 0; i < s.value.size(); ++i) {
            const double g = s.grad[i];
            m(i) = state.beta1 * m(i) + (1.0 - state.beta1) * g;
            v(i) = state.beta2 * v(i) + (1.0 - state.beta2) * g * g;
            const double mhat = m(i) / c1;
            const double vhat = v(i) / c2;
            s.value[i] -= state.eta * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

/// Slots pairing every tensor of `net` with the matching gradient tensor.
inline void append_slots(std::vector<ParamSlot>& slots, const std::string& prefix, Mlp& net, const MlpGrads& g) {
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        slots.push_back({prefix + ".W" + std::to_string(l),
                         std::span<double>(net.weights[l].data(), static_cast<std::size_t>(net.weights[l].size())),
                         std::span<const double>(g.weights[l].data(), static_cast<std::size_t>(g.weights[l].size()))});
        slots.push_back({prefix + ".b" + std::to_string(l),
                         std::span<double>(net.biases[l].data(), static_cast<std::size_t>(net.biases[l].size())),
                         std::span<const double>(g.biases[l].data(), static_cast<std::size_t>(g.biases[l].size()))});
    }
}

}  // namespace normform

#endif  // NORMFORM_MLP_HPP
