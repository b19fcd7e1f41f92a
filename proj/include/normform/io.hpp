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
#ifndef NORMFORM_IO_HPP
#define NORMFORM_IO_HPP

#include "normform/analysis.hpp"
#include "normform/container.hpp"
#include "normform/dataset.hpp"
#include "normform/nf_autoencoder.hpp"
#include "normform/pod.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace normform {

inline constexpr int kSchemaVersion = 1;

inline json to_json(const TimeGrid& g) { return {{"t0", g.t0}, {"t_end", g.t_end}, {"n_points", g.n_points}}; }

inline TimeGrid time_grid_from_json(const json& j) {
    TimeGrid g;
    g.t0 = j.at("t0").get<double>();
    g.t_end = j.at("t_end").get<double>();
    g.n_points = j.at("n_points").get<long>();
    return g;
}

// ---------------------------------------------------------------------------
// Datasets (.nfds)
// ---------------------------------------------------------------------------

/// `meta` supplies system, spec, trim and config_hash; grid and dims are
/// filled from the set.
inline Container dataset_container(const TrajectorySet& set, json meta) {
    set.validate();
    Container c;
    c.magic = "NFDS";
    c.header = std::move(meta);
    c.header["schema_version"] = kSchemaVersion;
    c.header["grid"] = to_json(set.grid);
    c.header["dims"] = {{"state_dim", set.state_dim()},
                        {"n_trajectories", set.n_trajectories()},
                        {"t_kept", set.t_kept}};
    c.add("U", set.U);
    c.add("U_dot", set.U_dot);
    c.add("alpha", set.alpha.transpose());
    return c;
}

inline TrajectorySet dataset_from_container(const Container& c) {
    if (c.header.value("schema_version", 0) != kSchemaVersion) throw IoError("dataset: unsupported schema version");
    TrajectorySet set;
    try {
        set.grid = time_grid_from_json(c.header.at("grid"));
        set.t_kept = c.header.at("dims").at("t_kept").get<long>();
    } catch (const json::exception& e) {
        throw IoError(std::string("dataset: malformed header: ") + e.what());
    }
    set.U = c.get("U");
    set.U_dot = c.get("U_dot");
    set.alpha = c.get("alpha").transpose();
    try {
        set.validate();
    } catch (const ArgumentError& e) {
        throw IoError(std::string("dataset: ") + e.what());
    }
    return set;
}

inline void write_dataset(const std::string& path, const TrajectorySet& set, const json& meta) {
    write_container(path, dataset_container(set, meta));
}

struct LoadedDataset {
    TrajectorySet set;
    json header;
};

inline LoadedDataset read_dataset(const std::string& path) {
    Container c = read_container(path, "NFDS");
    LoadedDataset out{dataset_from_container(c), c.header};
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints (.nfck)
// ---------------------------------------------------------------------------

inline void add_network(Container& c, json& nets, const std::string& name, const Mlp& net) {
    nets[name] = {{"layer_sizes", net.layer_sizes}, {"activation", to_string(net.activation)}};
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        c.add(name + ".W" + std::to_string(l), net.weights[l]);
        c.add(name + ".b" + std::to_string(l), net.biases[l]);
    }
}

inline Mlp read_network(const Container& c, const json& nets, const std::string& name) {
    Mlp net;
    const json& j = nets.at(name);
    net.layer_sizes = j.at("layer_sizes").get<std::vector<long>>();
    net.activation = activation_from_string(j.at("activation").get<std::string>());
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        net.weights.push_back(c.get(name + ".W" + std::to_string(l)));
        net.biases.push_back(c.get(name + ".b" + std::to_string(l)).col(0));
    }
    net.validate();
    return net;
}

inline json to_json(const NormalForm& nf) {
    return {{"kind", to_string(nf.kind)}, {"omega", nf.omega}, {"tau", nf.tau}};
}

inline NormalForm normal_form_from_json(const json& j) {
    NormalForm nf;
    nf.kind = normal_form_kind_from_string(j.at("kind").get<std::string>());
    nf.omega = j.value("omega", 1.0);
    nf.tau = j.value("tau", 1.0);
    nf.validate();
    return nf;
}

/// `meta` carries seed, loss weights, orientation and hashes.
inline Container checkpoint_container(const NfAutoencoder& model, json meta) {
    Container c;
    c.magic = "NFCK";
    c.header = std::move(meta);
    c.header["schema_version"] = kSchemaVersion;
    c.header["normal_form"] = to_json(model.normal_form());
    c.header["tau"] = model.tau();
    c.header["tau_trainable"] = model.tau_trainable;
    json nets = json::object();
    add_network(c, nets, "phi1", model.phi1);
    add_network(c, nets, "psi1", model.psi1);
    add_network(c, nets, "phi2", model.phi2);
    add_network(c, nets, "psi2", model.psi2);
    c.header["networks"] = nets;
    Matrix lt(1, 1);
    lt(0, 0) = model.log_tau;
    c.add("log_tau", lt);
    return c;
}

struct LoadedCheckpoint {
    NfAutoencoder model;
    json header;
};

inline LoadedCheckpoint read_checkpoint(const std::string& path) {
    Container c = read_container(path, "NFCK");
    LoadedCheckpoint out;
    out.header = c.header;
    try {
        const json& nets = c.header.at("networks");
        out.model.phi1 = read_network(c, nets, "phi1");
        out.model.psi1 = read_network(c, nets, "psi1");
        out.model.phi2 = read_network(c, nets, "phi2");
        out.model.psi2 = read_network(c, nets, "psi2");
        out.model.nf = normal_form_from_json(c.header.at("normal_form"));
        out.model.tau_trainable = c.header.at("tau_trainable").get<bool>();
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: malformed header: ") + e.what());
    }
    out.model.log_tau = c.get("log_tau")(0, 0);
    out.model.nf.tau = out.model.tau();
    out.model.validate();
    return out;
}

inline void write_checkpoint(const std::string& path, const NfAutoencoder& model, const json& meta) {
    write_container(path, checkpoint_container(model, meta));
}

// ---------------------------------------------------------------------------
// POD basis files (.nfpb)
// ---------------------------------------------------------------------------

inline void add_basis(Container& c, const std::string& prefix, const PodBasis& b) {
    c.add(prefix + "mean", b.mean_field);
    c.add(prefix + "modes", b.modes);
    c.add(prefix + "sigma", b.singular_values);
}

inline PodBasis read_basis(const Container& c, const std::string& prefix) {
    PodBasis b;
    b.mean_field = c.get(prefix + "mean").col(0);
    b.modes = c.get(prefix + "modes");
    b.singular_values = c.get(prefix + "sigma").col(0);
    b.gamma = c.get("gamma");
    return b;
}

// ---------------------------------------------------------------------------
// Text outputs
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string history_csv(const std::vector<HistoryRow>& rows) {
    std::string out = "iteration,l1,l2,l3,l4,l5,l6,total,tau\n";
    for (const auto& r : rows) {
        out += std::to_string(r.iteration);
        for (double v : r.report.l) out += "," + format_double(v);
        out += "," + format_double(r.report.total) + "," + format_double(r.tau) + "\n";
    }
    return out;
}

inline json to_json(const LossReport& r) {
    return {{"l1", r.l[0]}, {"l2", r.l[1]}, {"l3", r.l[2]}, {"l4", r.l[3]},
            {"l5", r.l[4]}, {"l6", r.l[5]}, {"l6_hard", r.l6_hard}, {"total", r.total}};
}

inline json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const ValidationReport& rep) {
    json trajs = json::array();
    for (const auto& t : rep.trajectories) {
        trajs.push_back({{"alpha", t.alpha},
                         {"beta", t.beta},
                         {"mismatch", t.mismatch},
                         {"latent_amplitude", t.latent_amplitude.amplitude},
                         {"latent_fluctuation", t.latent_amplitude.fluctuation}});
    }
    return {{"reconstruction_error", rep.reconstruction_error},
            {"sign_agreement", rep.sign_agreement},
            {"median_mismatch", rep.median_mismatch},
            {"data_period", nan_to_null(rep.data_period)},
            {"latent_period", nan_to_null(rep.latent_period)},
            {"tau", rep.tau},
            {"grid", to_json(rep.grid)},
            {"trajectories", trajs}};
}

/// One row per (trajectory, time): index, t, alpha, beta, z..., lo..., hi...
inline std::string traces_csv(const ValidationReport& rep) {
    std::ostringstream out;
    const long d = rep.trajectories.empty() ? 0 : rep.trajectories.front().latent.rows();
    out << "trajectory,t,alpha,beta";
    for (long i = 0; i < d; ++i) out << ",z" << i + 1;
    for (long i = 0; i < d; ++i) out << ",lo" << i + 1 << ",hi" << i + 1;
    out << "\n";
    for (std::size_t j = 0; j < rep.trajectories.size(); ++j) {
        const auto& tr = rep.trajectories[j];
        for (long k = 0; k < tr.latent.cols(); ++k) {
            out << j << "," << format_double(rep.grid.time(k)) << "," << format_double(tr.alpha) << ","
                << format_double(tr.beta);
            for (long i = 0; i < d; ++i) out << "," << format_double(tr.latent(i, k));
            for (long i = 0; i < d; ++i)
                out << "," << format_double(tr.envelope.lo(i, k)) << "," << format_double(tr.envelope.hi(i, k));
            out << "\n";
        }
    }
    return out.str();
}

/// Latent component `comp` for all test trajectories side by side, each over
/// its normal-form envelope band, separated by vertical rules.
inline std::string latent_svg(const ValidationReport& rep, long comp) {
    const double W = 1200, H = 360, pad = 40;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::size_t n = rep.trajectories.size();
    if (n == 0) {
        s << "</svg>\n";
        return s.str();
    }
    double lo = 1e300, hi = -1e300;
    for (const auto& t : rep.trajectories) {
        lo = std::min({lo, t.latent.row(comp).minCoeff(), t.envelope.lo.row(comp).minCoeff()});
        hi = std::max({hi, t.latent.row(comp).maxCoeff(), t.envelope.hi.row(comp).maxCoeff()});
    }
    if (!(hi > lo)) {
        hi = lo + 1.0;
        lo -= 1.0;
    }
    const double panel = (W - 2 * pad) / static_cast<double>(n);
    auto ypix = [&](double v) { return H - pad - (v - lo) / (hi - lo) * (H - 2 * pad); };
    for (std::size_t j = 0; j < n; ++j) {
        const auto& t = rep.trajectories[j];
        const long T = t.latent.cols();
        auto xpix = [&](long k) { return pad + panel * (static_cast<double>(j) + static_cast<double>(k) / std::max(1L, T - 1)); };
        s << "<polygon fill=\"#f5d76e\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
        for (long k = 0; k < T; ++k) s << xpix(k) << "," << ypix(t.envelope.hi(comp, k)) << " ";
        for (long k = T; k-- > 0;) s << xpix(k) << "," << ypix(t.envelope.lo(comp, k)) << " ";
        s << "\"/>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\" points=\"";
        for (long k = 0; k < T; ++k) s << xpix(k) << "," << ypix(t.latent(comp, k)) << " ";
        s << "\"/>\n";
        if (j > 0)
            s << "<line x1=\"" << xpix(0) << "\" x2=\"" << xpix(0) << "\" y1=\"" << pad << "\" y2=\"" << H - pad
              << "\" stroke=\"gray\" stroke-width=\"0.5\"/>\n";
    }
    s << "<text x=\"" << pad << "\" y=\"" << pad / 2 << "\" font-size=\"14\">z" << comp + 1
      << " vs t (blue) over normal-form ensemble (yellow)</text>\n";
    s << "</svg>\n";
    return s.str();
}

inline void write_text(const std::string& path, const std::string& text) { write_file(path, text); }

}  // namespace normform

#endif  // NORMFORM_IO_HPP
