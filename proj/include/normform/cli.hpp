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
#ifndef NORMFORM_CLI_HPP
#define NORMFORM_CLI_HPP

#include "normform/analysis.hpp"
#include "normform/config.hpp"
#include "normform/container.hpp"
#include "normform/dataset.hpp"
#include "normform/io.hpp"
#include "normform/nf_autoencoder.hpp"
#include "normform/pod.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace normform::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3, kIoError = 4 };

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool force = false;
};

inline RunConfig load_config(const Options& o) {
    json doc;
    try {
        doc = json::parse(read_file(o.config_path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config '" + o.config_path + "': " + e.what());
    }
    doc = resolve_document(doc);
    if (o.seed) override_seed(doc, *o.seed);
    if (o.out) doc["output_dir"] = *o.out;
    return parse_config(doc);
}

inline fs::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

inline std::string file_hash(const std::string& path) { return fnv1a_hex(read_file(path)); }

inline void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                           const std::vector<std::string>& files, json extra = json::object()) {
    json m = std::move(extra);
    m["command"] = command;
    m["config_hash"] = cfg.hash();
    json f = json::object();
    for (const auto& name : files) f[name] = file_hash((dir / name).string());
    m["files"] = f;
    write_text((dir / ("manifest_" + command + ".json")).string(), m.dump(2) + "\n");
    write_text((dir / "config.json").string(), cfg.document.dump(2) + "\n");
}

inline json dataset_meta(const RunConfig& cfg, const std::string& role) {
    return {{"system", cfg.document.at("system")},
            {"spec", cfg.document.at("sampling")},
            {"trim", cfg.trim},
            {"role", role},
            {"config_hash", cfg.hash()}};
}

// ---------------------------------------------------------------------------

/// Builds train/test sets and writes train.nfds, test.nfds and a manifest.
inline void cmd_generate(const RunConfig& cfg) {
    const SystemInstance system = make_system(cfg);
    const SamplingSpec spec = make_sampling(cfg, system);
    DatasetPair sets = build_set(system, spec, cfg.grid, cfg.trim);
    const fs::path dir = ensure_dir(cfg.output_dir);
    write_dataset((dir / "train.nfds").string(), sets.train, dataset_meta(cfg, "train"));
    std::vector<std::string> files{"train.nfds"};
    if (sets.test.n_trajectories() > 0) {
        write_dataset((dir / "test.nfds").string(), sets.test, dataset_meta(cfg, "test"));
        files.push_back("test.nfds");
    }
    write_manifest(dir, cfg, "generate", files, {{"resampled", sets.resampled}});
}

inline std::string resolve_path(const std::string& configured, const RunConfig& cfg, const std::string& fallback) {
    if (!configured.empty()) return configured;
    return (fs::path(cfg.output_dir) / fallback).string();
}

/// Period of the training data (alpha > 0 trajectories, first component) and
/// of the unscaled Hopf normal form; tau = sqrt(ratio).
inline double estimate_tau_from_data(const TrajectorySet& set, const NormalForm& nf) {
    if (nf.kind != NormalFormKind::Hopf) throw ConfigError("tau estimation from data requires a Hopf normal form");
    std::vector<double> periods;
    for (long j = 0; j < set.n_trajectories(); ++j) {
        if (set.alpha(j) <= 0.0) continue;
        try {
            periods.push_back(dominant_period(set.trajectory(j).states.row(0).transpose(), set.grid.dt()));
        } catch (const NoOscillationError&) {
        }
    }
    if (periods.empty()) throw NumericError("tau estimation: no oscillating training trajectory");
    NormalForm unit = nf;
    unit.tau = 1.0;
    const double beta = 0.1;
    const TimeGrid grid{0.0, 40.0 * 2.0 * std::numbers::pi / std::abs(nf.omega), 4001};
    Vector z0(2);
    z0 << std::sqrt(beta), 0.0;
    const Trajectory t = integrate(scaled_field(unit), z0, beta, grid);
    const double nf_period = dominant_period(t.states.row(0).transpose(), grid.dt());
    return estimate_tau(median(periods), nf_period);
}

struct TrainOutcome {
    NfAutoencoder model;
    std::vector<HistoryRow> history;
};

/// Trains per config; writes model.nfck, history.csv and probe.json.
inline TrainOutcome cmd_train(const RunConfig& cfg) {
    const std::string train_path = resolve_path(cfg.train_path, cfg, "train.nfds");
    if (!fs::exists(train_path)) throw IoError("training dataset '" + train_path + "' not found");
    const LoadedDataset data = read_dataset(train_path);

    ArchitectureSpec arch = cfg.arch;
    arch.state_dim = data.set.state_dim();
    NormalForm nf = cfg.nf;
    if (cfg.tau_mode == TauMode::Estimate) nf.tau = estimate_tau_from_data(data.set, nf);
    NfAutoencoder model = make_autoencoder(arch, nf, cfg.tau_mode == TauMode::Trainable, cfg.training.seed);
    if (cfg.training.batch_size > data.set.n_trajectories())
        throw ConfigError("batch_size exceeds the number of training trajectories");

    const fs::path dir = ensure_dir(cfg.output_dir);
    const long per_epoch = data.set.n_trajectories() / cfg.training.batch_size;
    LossReport epoch1{};
    long counted = 0;
    auto cb = [&](const HistoryRow& row) {
        if (row.epoch == 0) {
            for (int k = 0; k < 6; ++k) epoch1.l[k] += row.report.l[k];
            ++counted;
        }
        return true;
    };

    json meta = {{"seed", cfg.training.seed},
                 {"loss_weights", cfg.loss.weights.lambda},
                 {"orientation", to_string(cfg.loss.orientation)},
                 {"config_hash", cfg.hash()},
                 {"dataset_hash", data.header.value("config_hash", "")},
                 {"dataset_file_hash", file_hash(train_path)}};

    TrainOutcome out;
    try {
        out.history = train(model, data.set, cfg.training, cb).history;
    } catch (const TrainingAborted& e) {
        write_text((dir / "history.csv").string(), history_csv(e.history()));
        throw;
    }
    out.model = model;
    write_checkpoint((dir / "model.nfck").string(), model, meta);
    write_text((dir / "history.csv").string(), history_csv(out.history));

    json probe = {{"iterations_per_epoch", per_epoch}, {"target_ratio", 1e-2}};
    if (counted > 0) {
        const ConsistencyRatios r = consistency_ratios(epoch1);
        probe["l3_over_l1"] = r.l3_over_l1;
        probe["l4_over_l1"] = r.l4_over_l1;
    }
    write_text((dir / "probe.json").string(), probe.dump(2) + "\n");
    write_manifest(dir, cfg, "train", {"model.nfck", "history.csv", "probe.json"});
    return out;
}

/// Validates a checkpoint on the test set; writes report.json, traces.csv
/// and one SVG per latent component.
inline ValidationReport cmd_validate(const RunConfig& cfg, bool force) {
    std::string ckpt_path = (fs::path(cfg.output_dir) / "model.nfck").string();
    if (cfg.document.contains("checkpoint")) ckpt_path = cfg.document.at("checkpoint").get<std::string>();
    const std::string test_path = resolve_path(cfg.test_path, cfg, "test.nfds");
    if (!fs::exists(ckpt_path)) throw IoError("checkpoint '" + ckpt_path + "' not found");
    if (!fs::exists(test_path)) throw IoError("test dataset '" + test_path + "' not found");
    const LoadedCheckpoint ck = read_checkpoint(ckpt_path);
    const LoadedDataset test = read_dataset(test_path);

    if (test.set.state_dim() != ck.model.state_dim())
        throw ConfigError("checkpoint expects state dimension " + std::to_string(ck.model.state_dim()) +
                          ", test set has " + std::to_string(test.set.state_dim()));
    const std::string expected = ck.header.value("dataset_hash", "");
    const std::string actual = test.header.value("config_hash", "");
    if (!force && expected != actual)
        throw ConfigError("checkpoint was trained on data with config hash " + expected + " but the test set has " +
                          actual + " (use --force to override)");

    ValidationOptions vopt = cfg.validation;
    vopt.orientation = orientation_from_string(ck.header.value("orientation", "same"));
    const ValidationReport rep = validation_report(ck.model, test.set, vopt);

    const fs::path dir = ensure_dir(cfg.output_dir);
    json j = to_json(rep);
    j["checkpoint"] = ckpt_path;
    j["test_set"] = test_path;
    write_text((dir / "report.json").string(), j.dump(2) + "\n");
    write_text((dir / "traces.csv").string(), traces_csv(rep));
    std::vector<std::string> files{"report.json", "traces.csv"};
    for (long c = 0; c < ck.model.latent_dim(); ++c) {
        const std::string name = "latent_z" + std::to_string(c + 1) + ".svg";
        write_text((dir / name).string(), latent_svg(rep, c));
        files.push_back(name);
    }
    write_manifest(dir, cfg, "validate", files);
    return rep;
}

inline Matrix choose_gamma(const PodSettings& p) {
    if (p.gamma == "published" || p.gamma == "published-as-printed") {
        if (p.m != 4) throw ConfigError("the published gamma is 4 x 4; set pod.m = 4");
        return p.gamma == "published" ? published_gamma() : published_gamma_as_printed();
    }
    if (p.gamma == "identity") return Matrix::Identity(p.m, p.m);
    if (p.gamma == "random") return make_unitary_gamma(p.m, p.gamma_seed);
    throw ConfigError("unknown pod.gamma '" + p.gamma + "'");
}

struct PodOutcome {
    TrajectorySet train;
    TrajectorySet test;
    std::vector<PodDecomposition> decompositions;
};

/// Reduces external snapshots: per-trajectory POD, gamma mixing and
/// finite-difference derivatives. Writes reduced_train.nfds,
/// reduced_test.nfds (when pod.n_test > 0) and pod_basis.nfpb.
inline PodOutcome cmd_pod(const RunConfig& cfg) {
    if (!cfg.pod) throw ConfigError("config has no 'pod' section");
    const PodSettings& p = *cfg.pod;
    if (p.snapshots.empty()) throw ConfigError("pod.snapshots is not set");
    if (!fs::exists(p.snapshots)) throw IoError("snapshot file '" + p.snapshots + "' not found");
    const LoadedDataset snaps = read_dataset(p.snapshots);
    const Matrix gamma = choose_gamma(p);
    const double alpha_c = cfg.document.at("system").value("alpha_c", 0.0);

    const long n = snaps.set.n_trajectories();
    if (p.n_test < 0 || p.n_test >= n) throw ConfigError("pod.n_test must leave at least one training trajectory");
    PodOutcome out;
    out.decompositions.resize(static_cast<std::size_t>(n));
    std::vector<Trajectory> reduced(static_cast<std::size_t>(n));
    const double dt = snaps.set.grid.dt() * static_cast<double>(p.stride);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
        const long j = static_cast<long>(jj);
        PodDecomposition d = pod_decompose(snaps.set.trajectory(j).states, p.m, p.trim, p.stride);
        apply_gamma(d, gamma);
        Trajectory t;
        t.states = d.series.mixed;
        t.derivs = finite_difference(d.series.mixed, dt);
        t.alpha = snaps.set.alpha(j) - alpha_c;
        t.grid.t0 = snaps.set.grid.time(p.trim);
        t.grid.n_points = t.states.cols();
        t.grid.t_end = t.grid.t0 + dt * static_cast<double>(t.grid.n_points - 1);
        reduced[jj] = std::move(t);
        out.decompositions[jj] = std::move(d);
    });

    const long n_train = n - p.n_test;
    out.train = stack(std::vector<Trajectory>(reduced.begin(), reduced.begin() + n_train));
    const fs::path dir = ensure_dir(cfg.output_dir);
    json meta = {{"system", cfg.document.at("system")},
                 {"spec", cfg.document.at("pod")},
                 {"trim", p.trim},
                 {"config_hash", cfg.hash()},
                 {"source", p.snapshots}};
    meta["spec"].erase("snapshots");
    meta["role"] = "train";
    write_dataset((dir / "reduced_train.nfds").string(), out.train, meta);
    std::vector<std::string> files{"reduced_train.nfds"};
    if (p.n_test > 0) {
        out.test = stack(std::vector<Trajectory>(reduced.begin() + n_train, reduced.end()));
        meta["role"] = "test";
        write_dataset((dir / "reduced_test.nfds").string(), out.test, meta);
        files.push_back("reduced_test.nfds");
    }

    Container basis;
    basis.magic = "NFPB";
    basis.header = {{"schema_version", kSchemaVersion}, {"m", p.m}, {"n_trajectories", n},
                    {"alpha", std::vector<double>(snaps.set.alpha.data(), snaps.set.alpha.data() + n)},
                    {"config_hash", cfg.hash()}};
    basis.add("gamma", gamma);
    for (long j = 0; j < n; ++j) add_basis(basis, "traj" + std::to_string(j) + ".", out.decompositions[j].basis);
    write_container((dir / "pod_basis.nfpb").string(), basis);
    files.push_back("pod_basis.nfpb");
    write_manifest(dir, cfg, "pod", files);
    return out;
}

// ---------------------------------------------------------------------------

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
        dynamic_cast<const RankError*>(&e))
        return kConfigError;
    if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const DatasetError*>(&e)) return kNumericError;
    if (dynamic_cast<const IoError*>(&e)) return kIoError;
    return 1;
}

inline int run(int argc, char** argv) {
    CLI::App app{"normform: learn normal-form coordinates for bifurcating systems"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    std::string out;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "run configuration (JSON)")->required();
        sub->add_option("--seed", seed, "override every seed in the config");
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--force", opt.force, "skip the dataset hash check in validate");
    };
    auto* gen = app.add_subcommand("generate", "build and write train/test datasets");
    auto* trn = app.add_subcommand("train", "train the autoencoder pair on a dataset");
    auto* val = app.add_subcommand("validate", "compare a checkpoint against normal-form ensembles");
    auto* pod = app.add_subcommand("pod", "reduce external snapshots with POD");
    for (auto* s : {gen, trn, val, pod}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }
    for (auto* s : {gen, trn, val, pod}) {
        if (s->count("--seed")) opt.seed = seed;
        if (s->count("--out")) opt.out = out;
    }

    try {
        const RunConfig cfg = load_config(opt);
        if (*gen) {
            cmd_generate(cfg);
        } else if (*trn) {
            const auto res = cmd_train(cfg);
            if (!res.history.empty())
                std::cout << "final total loss " << res.history.back().report.total << " (initial "
                          << res.history.front().report.total << ")\n";
        } else if (*val) {
            const auto rep = cmd_validate(cfg, opt.force);
            std::cout << "reconstruction error " << rep.reconstruction_error << ", sign agreement "
                      << rep.sign_agreement << ", median mismatch " << rep.median_mismatch << "\n";
        } else if (*pod) {
            cmd_pod(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "normform: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kOk;
}

}  // namespace normform::cli

#endif  // NORMFORM_CLI_HPP
