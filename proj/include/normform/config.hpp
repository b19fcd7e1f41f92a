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
#ifndef NORMFORM_CONFIG_HPP
#define NORMFORM_CONFIG_HPP

#include "normform/analysis.hpp"
#include "normform/container.hpp"
#include "normform/dataset.hpp"
#include "normform/io.hpp"
#include "normform/nf_autoencoder.hpp"
#include "normform/systems.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace normform {

// Run configurations are single JSON documents. A document may name a
// "preset"; the preset is the base and the document is merge-patched on top.

namespace presets {

inline const char* const kLorenz96 = R"({
  "system": {"name": "lorenz96", "n": 64, "alpha_c": 0.84975},
  "normal_form": {"kind": "hopf", "omega": 1.0, "tau": 0.825},
  "sampling": {"sigma_u": 0.1, "sigma_alpha": 0.5, "n_train": 1000, "n_test": 20, "seed": 0},
  "time": {"t0": 0.0, "t_end": 80.0, "n_points": 500},
  "trim": 200,
  "loss": {"weights": [1.0, 1e-2, 1e-3, 1e-3, 0.0, 1e-1], "orientation": "same"},
  "network": {"activation": "tanh", "phi1_hidden": [32, 16], "psi1_hidden": [16, 32],
              "phi2_hidden": [16, 16], "psi2_hidden": [16, 16]},
  "training": {"epochs": 1000, "batch_size": 100, "eta": 1e-4, "seed": 0},
  "tau_policy": {"mode": "fixed", "value": 0.825},
  "validation": {"n_ensemble": 20, "spread": 0.1, "seed": 0}
})";

inline const char* const kNeuralField = R"({
  "system": {"name": "neuralfield", "alpha_c": 0.8040,
             "kappa": 2.75, "tau_nf": 10.0, "w_e": 1.0, "sigma_e": 1.0, "beta_nf": 6.0,
             "u_thr": 0.375, "sigma": 1.2, "x_min": -6.0, "x_max": 6.0, "n_points": 64,
             "unit_mass_kernel": true},
  "normal_form": {"kind": "hopf", "omega": 1.0, "tau": 1.4},
  "sampling": {"sigma_u": 0.1, "sigma_alpha": 0.5, "n_train": 1000, "n_test": 20, "seed": 0},
  "time": {"t0": 0.0, "t_end": 100.0, "n_points": 250},
  "trim": 50,
  "loss": {"weights": [1.0, 1e-2, 1e-4, 0.0, 1e-3, 0.0], "orientation": "same"},
  "network": {"activation": "tanh", "phi1_hidden": [64, 32], "psi1_hidden": [32, 64],
              "phi2_hidden": [16, 16], "psi2_hidden": [16, 16]},
  "training": {"epochs": 2000, "batch_size": 250, "eta": 1e-4, "seed": 0},
  "tau_policy": {"mode": "fixed", "value": 1.4},
  "validation": {"n_ensemble": 20, "spread": 0.1, "seed": 0}
})";

inline const char* const kNavierStokesPod = R"({
  "system": {"name": "external", "alpha_c": 44.6},
  "normal_form": {"kind": "hopf", "omega": 1.0, "tau": 0.6},
  "sampling": {"sigma_u": 1e-2, "sigma_alpha": 0.0, "n_train": 220, "n_test": 20, "seed": 0},
  "time": {"t0": 0.0, "t_end": 77.0, "n_points": 6180},
  "trim": 3250,
  "pod": {"m": 4, "trim": 3250, "stride": 10, "gamma": "published", "gamma_seed": 0, "n_test": 20},
  "loss": {"weights": [1.0, 1.0, 1e-4, 1e-4, 0.0, 1e-1], "orientation": "same"},
  "network": {"activation": "tanh", "phi1_hidden": [20, 20, 30], "psi1_hidden": [20, 20, 20],
              "phi2_hidden": [10, 10], "psi2_hidden": [10, 10]},
  "training": {"epochs": 2700, "batch_size": 110, "eta": 1e-3, "seed": 0},
  "tau_policy": {"mode": "fixed", "value": 0.6},
  "validation": {"n_ensemble": 20, "spread": 0.1, "seed": 0}
})";

// Scalar recipe shared by the three scalar bifurcations; only the system tag,
// normal form and orientation differ.
inline const char* const kScalarBase = R"({
  "system": {"name": "scalar", "bifurcation": "SN", "gamma": 0.01, "u_sn": -6.0, "alpha_sn": -6.0, "alpha_pf": 6.0},
  "normal_form": {"kind": "saddle-node", "tau": 1.0},
  "sampling": {"sigma_u": 0.5, "sigma_alpha": 0.5, "n_train": 500, "n_test": 20, "seed": 0},
  "time": {"t0": 0.0, "t_end": 2.0, "n_points": 101},
  "trim": 0,
  "loss": {"weights": [1.0, 1e-2, 1e-2, 1e-2, 0.0, 1e-1], "orientation": "same"},
  "network": {"activation": "elu", "phi1_hidden": [16, 16], "psi1_hidden": [16, 16],
              "phi2_hidden": [16, 16], "psi2_hidden": [16, 16]},
  "training": {"epochs": 1000, "batch_size": 50, "eta": 1e-3, "seed": 0},
  "tau_policy": {"mode": "trainable", "initial": 1.0},
  "validation": {"n_ensemble": 20, "spread": 0.1, "seed": 0}
})";

inline json scalar(const std::string& tag, const std::string& kind, const std::string& orientation, double lambda6) {
    json j = json::parse(kScalarBase);
    j["system"]["bifurcation"] = tag;
    j["normal_form"]["kind"] = kind;
    j["loss"]["orientation"] = orientation;
    j["loss"]["weights"][5] = lambda6;
    return j;
}

inline const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"lorenz96", "neuralfield", "scalar-sn", "scalar-pf", "scalar-tc",
                                            "navierstokes-pod"};
    return n;
}

inline json get(const std::string& name) {
    if (name == "lorenz96") return json::parse(kLorenz96);
    if (name == "neuralfield") return json::parse(kNeuralField);
    if (name == "navierstokes-pod") return json::parse(kNavierStokesPod);
    // In translated coordinates the saddle-node and transcritical data run
    // against the normal form's parameter direction.
    if (name == "scalar-sn") return scalar("SN", "saddle-node", "opposite", 1e-1);
    if (name == "scalar-pf") return scalar("PF", "pitchfork", "same", 1e-1);
    if (name == "scalar-tc") return scalar("TC", "transcritical", "opposite", 0.0);
    throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace presets

enum class TauMode { Trainable, Fixed, Estimate };

struct PodSettings {
    std::string snapshots;
    long m = 4;
    long trim = 0;
    long stride = 10;
    std::string gamma = "random";  // random | published | identity
    std::uint64_t gamma_seed = 0;
    long n_test = 0;
};

struct RunConfig {
    json document;  // fully resolved
    std::string system_name;
    NormalForm nf;
    SamplingSpec sampling;
    TimeGrid grid;
    long trim = 0;
    LossConfig loss;
    ArchitectureSpec arch;
    TrainOptions training;
    TauMode tau_mode = TauMode::Fixed;
    double tau_value = 1.0;
    ValidationOptions validation;
    std::optional<PodSettings> pod;
    std::string output_dir = "normform-out";
    std::string train_path;
    std::string test_path;

    /// Hash of the resolved document without paths.
    std::string hash() const {
        json j = document;
        j.erase("output_dir");
        j.erase("data");
        if (j.contains("pod")) j["pod"].erase("snapshots");
        return json_hash(j);
    }
};

namespace detail {
template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}
}  // namespace detail

inline json resolve_document(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    json base = json::object();
    if (doc.contains("preset")) base = presets::get(doc.at("preset").get<std::string>());
    base.merge_patch(doc);
    return base;
}

/// Parses a run configuration, applying its preset first.
inline RunConfig parse_config(const json& doc) {
    RunConfig c;
    try {
        c.document = resolve_document(doc);
        const json& d = c.document;
        const json& sys = d.at("system");
        c.system_name = sys.at("name").get<std::string>();
        if (c.system_name == "scalar") {
            const std::string tag = sys.at("bifurcation").get<std::string>();
            c.system_name = tag == "SN" ? "scalar-sn" : tag == "PF" ? "scalar-pf" : tag == "TC" ? "scalar-tc" : "";
            if (c.system_name.empty()) throw ConfigError("unknown scalar bifurcation '" + tag + "'");
        }

        c.nf = normal_form_from_json(d.at("normal_form"));

        const json& sm = d.at("sampling");
        c.sampling.sigma_u = sm.at("sigma_u").get<double>();
        c.sampling.sigma_alpha = sm.at("sigma_alpha").get<double>();
        c.sampling.n_train = sm.at("n_train").get<long>();
        c.sampling.n_test = sm.at("n_test").get<long>();
        c.sampling.seed = sm.at("seed").get<std::uint64_t>();

        c.grid = time_grid_from_json(d.at("time"));
        c.trim = detail::get_or<long>(d, "trim", 0);
        c.grid.validate();
        require(c.trim >= 0 && c.trim < c.grid.n_points, "trim must be smaller than the time grid");

        const json& ls = d.at("loss");
        const auto w = ls.at("weights").get<std::vector<double>>();
        if (w.size() != 6) throw ConfigError("loss.weights must have 6 entries");
        std::copy(w.begin(), w.end(), c.loss.weights.lambda.begin());
        c.loss.weights.validate();
        c.loss.orientation = orientation_from_string(detail::get_or<std::string>(ls, "orientation", "same"));
        c.loss.sign_smoothing = detail::get_or<double>(ls, "sign_smoothing", 1e-2);

        const json& nw = d.at("network");
        c.arch.activation = activation_from_string(nw.at("activation").get<std::string>());
        c.arch.phi1_hidden = nw.at("phi1_hidden").get<std::vector<long>>();
        c.arch.psi1_hidden = nw.at("psi1_hidden").get<std::vector<long>>();
        c.arch.phi2_hidden = nw.at("phi2_hidden").get<std::vector<long>>();
        c.arch.psi2_hidden = nw.at("psi2_hidden").get<std::vector<long>>();

        const json& tr = d.at("training");
        c.training.epochs = tr.at("epochs").get<long>();
        c.training.batch_size = tr.at("batch_size").get<long>();
        c.training.eta = tr.at("eta").get<double>();
        c.training.seed = tr.at("seed").get<std::uint64_t>();
        c.training.loss = c.loss;

        const json& tp = d.at("tau_policy");
        const std::string mode = tp.at("mode").get<std::string>();
        if (mode == "trainable") {
            c.tau_mode = TauMode::Trainable;
            c.tau_value = detail::get_or<double>(tp, "initial", 1.0);
        } else if (mode == "fixed") {
            c.tau_mode = TauMode::Fixed;
            c.tau_value = tp.at("value").get<double>();
        } else if (mode == "estimate") {
            c.tau_mode = TauMode::Estimate;
            c.tau_value = 1.0;
        } else {
            throw ConfigError("unknown tau_policy.mode '" + mode + "'");
        }
        if (!(c.tau_value > 0.0)) throw ConfigError("tau must be positive");
        c.nf.tau = c.tau_value;

        if (d.contains("validation")) {
            const json& v = d.at("validation");
            c.validation.n_ensemble = detail::get_or<long>(v, "n_ensemble", 20);
            c.validation.spread = detail::get_or<double>(v, "spread", 0.1);
            c.validation.seed = detail::get_or<std::uint64_t>(v, "seed", 0);
        }
        c.validation.orientation = c.loss.orientation;

        if (d.contains("pod")) {
            const json& p = d.at("pod");
            PodSettings ps;
            ps.snapshots = detail::get_or<std::string>(p, "snapshots", "");
            ps.m = detail::get_or<long>(p, "m", 4);
            ps.trim = detail::get_or<long>(p, "trim", 0);
            ps.stride = detail::get_or<long>(p, "stride", 10);
            ps.gamma = detail::get_or<std::string>(p, "gamma", "random");
            ps.gamma_seed = detail::get_or<std::uint64_t>(p, "gamma_seed", 0);
            ps.n_test = detail::get_or<long>(p, "n_test", 0);
            c.pod = ps;
        }

        c.output_dir = detail::get_or<std::string>(d, "output_dir", "normform-out");
        if (d.contains("data")) {
            c.train_path = detail::get_or<std::string>(d.at("data"), "train", "");
            c.test_path = detail::get_or<std::string>(d.at("data"), "test", "");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.training.epochs < 0 || c.training.batch_size < 1 || !(c.training.eta > 0.0))
        throw ConfigError("config: training needs epochs >= 0, batch_size >= 1 and eta > 0");
    if (c.sampling.n_train < 1 || c.sampling.n_test < 0) throw ConfigError("config: invalid set sizes");
    return c;
}

/// Overrides every seed in the document.
inline void override_seed(json& doc, std::uint64_t seed) {
    for (const char* section : {"sampling", "training", "validation"}) doc[section]["seed"] = seed;
}

inline SystemInstance make_system(const RunConfig& c) {
    const json& sys = c.document.at("system");
    if (c.system_name == "lorenz96") {
        Lorenz96Params p;
        p.n = detail::get_or<long>(sys, "n", 64);
        return make_lorenz96_system(p, detail::get_or<double>(sys, "alpha_c", kLorenz96AlphaC));
    }
    if (c.system_name == "neuralfield") {
        NeuralFieldParams p;
        p.kappa = detail::get_or<double>(sys, "kappa", p.kappa);
        p.tau_nf = detail::get_or<double>(sys, "tau_nf", p.tau_nf);
        p.w_e = detail::get_or<double>(sys, "w_e", p.w_e);
        p.sigma_e = detail::get_or<double>(sys, "sigma_e", p.sigma_e);
        p.beta_nf = detail::get_or<double>(sys, "beta_nf", p.beta_nf);
        p.unit_mass_kernel = detail::get_or<bool>(sys, "unit_mass_kernel", p.unit_mass_kernel);
        p.u_thr = detail::get_or<double>(sys, "u_thr", p.u_thr);
        p.sigma = detail::get_or<double>(sys, "sigma", p.sigma);
        p.grid.x_min = detail::get_or<double>(sys, "x_min", p.grid.x_min);
        p.grid.x_max = detail::get_or<double>(sys, "x_max", p.grid.x_max);
        p.grid.n_points = detail::get_or<long>(sys, "n_points", p.grid.n_points);
        try {
            p.validate();
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
        return make_neural_field_system(p, detail::get_or<double>(sys, "alpha_c", kNeuralFieldAlphaC));
    }
    if (c.system_name.rfind("scalar-", 0) == 0) {
        ScalarOdeParams p;
        p.gamma = detail::get_or<double>(sys, "gamma", p.gamma);
        p.u_sn = detail::get_or<double>(sys, "u_sn", p.u_sn);
        p.alpha_sn = detail::get_or<double>(sys, "alpha_sn", p.alpha_sn);
        p.alpha_pf = detail::get_or<double>(sys, "alpha_pf", p.alpha_pf);
        if (p.gamma == 0.0) throw ConfigError("scalar gamma must be nonzero");
        const ScalarBifurcation b = c.system_name == "scalar-sn"   ? ScalarBifurcation::SaddleNode
                                    : c.system_name == "scalar-pf" ? ScalarBifurcation::Pitchfork
                                                                   : ScalarBifurcation::Transcritical;
        return make_scalar_system(p, b);
    }
    throw ConfigError("system '" + c.system_name + "' cannot generate data (use pod for external data)");
}

inline SamplingSpec make_sampling(const RunConfig& c, const SystemInstance& s) {
    SamplingSpec spec = c.sampling;
    spec.u_center = s.u_center;
    spec.alpha_center = 0.0;
    return spec;
}

}  // namespace normform

#endif  // NORMFORM_CONFIG_HPP
