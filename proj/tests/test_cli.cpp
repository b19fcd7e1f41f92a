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
#include "normform/io.hpp"
#include "normform/pod.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>

using namespace normform;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
    fs::path path;
    ScratchDir() : path(fs::temp_directory_path() / ("normform_test_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path root() {
    static const ScratchDir dir;
    return dir.path;
}

std::string write_config(const std::string& name, const json& doc) {
    const fs::path p = root() / name;
    std::ofstream(p) << doc.dump(2);
    return p.string();
}

int run(const std::string& args) {
    const std::string cmd = std::string(NORMFORM_CLI_PATH) + " " + args + " >>" + (root() / "cli.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

json smoke_doc() {
    return {{"preset", "scalar-sn"},
            {"sampling", {{"n_train", 2}, {"n_test", 1}}},
            {"training", {{"epochs", 0}, {"batch_size", 1}}}};
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("generate"), 2);
    EXPECT_EQ(run("bogus --config x"), 2);
    EXPECT_EQ(run("generate --config " + write_config("bad.json", json{{"preset", "nope"}})), 2);
    std::ofstream(root() / "garbage.json") << "{not json";
    EXPECT_EQ(run("generate --config " + (root() / "garbage.json").string()), 2);
    EXPECT_EQ(run("generate --config " + (root() / "absent.json").string()), 4);
}

TEST(Cli, GenerateIsFastAndSeedReproducible) {
    const std::string cfg = write_config("smoke.json", smoke_doc());
    const auto t0 = std::chrono::steady_clock::now();
    ASSERT_EQ(run("generate --config " + cfg + " --seed 3 --out " + (root() / "g1").string()), 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 1.0);
    ASSERT_EQ(run("generate --config " + cfg + " --seed 3 --out " + (root() / "g2").string()), 0);
    ASSERT_EQ(run("generate --config " + cfg + " --seed 4 --out " + (root() / "g3").string()), 0);
    for (const char* f : {"train.nfds", "test.nfds", "manifest_generate.json", "config.json"})
        EXPECT_TRUE(fs::exists(root() / "g1" / f)) << f;
    EXPECT_EQ(slurp(root() / "g1" / "train.nfds"), slurp(root() / "g2" / "train.nfds"));
    EXPECT_EQ(slurp(root() / "g1" / "test.nfds"), slurp(root() / "g2" / "test.nfds"));
    EXPECT_EQ(slurp(root() / "g1" / "manifest_generate.json"), slurp(root() / "g2" / "manifest_generate.json"));
    EXPECT_NE(slurp(root() / "g1" / "train.nfds"), slurp(root() / "g3" / "train.nfds"));

    const LoadedDataset d = read_dataset((root() / "g1" / "train.nfds").string());
    EXPECT_EQ(d.set.n_trajectories(), 2);
    EXPECT_EQ(d.set.t_kept, 101);
    const json manifest = json::parse(slurp(root() / "g1" / "manifest_generate.json"));
    EXPECT_EQ(manifest.at("files").at("train.nfds"), fnv1a_hex(slurp(root() / "g1" / "train.nfds")));
}

TEST(Cli, TrainAndValidateChain) {
    const std::string cfg = write_config("chain.json", smoke_doc());
    const std::string dir = (root() / "chain").string();
    EXPECT_EQ(run("train --config " + cfg + " --out " + dir), 4);  // no dataset yet
    ASSERT_EQ(run("generate --config " + cfg + " --seed 1 --out " + dir), 0);
    ASSERT_EQ(run("train --config " + cfg + " --seed 1 --out " + dir), 0);
    for (const char* f : {"model.nfck", "history.csv", "probe.json", "manifest_train.json"})
        EXPECT_TRUE(fs::exists(fs::path(dir) / f)) << f;
    const LoadedCheckpoint ck = read_checkpoint((fs::path(dir) / "model.nfck").string());
    EXPECT_EQ(ck.header.at("seed"), 1);
    EXPECT_EQ(ck.header.at("orientation"), "opposite");
    EXPECT_EQ(ck.header.at("loss_weights").size(), 6u);
    EXPECT_EQ(slurp(fs::path(dir) / "history.csv"), "iteration,l1,l2,l3,l4,l5,l6,total,tau\n");

    ASSERT_EQ(run("validate --config " + cfg + " --seed 1 --out " + dir), 0);
    for (const char* f : {"report.json", "traces.csv", "latent_z1.svg", "manifest_validate.json"})
        EXPECT_TRUE(fs::exists(fs::path(dir) / f)) << f;
    const json rep = json::parse(slurp(fs::path(dir) / "report.json"));
    EXPECT_EQ(rep.at("trajectories").size(), 1u);

    // Test set generated under a different seed: refused unless forced.
    const std::string other = (root() / "chain_other").string();
    ASSERT_EQ(run("generate --config " + cfg + " --seed 2 --out " + other), 0);
    json doc = smoke_doc();
    doc["data"] = {{"test", (fs::path(other) / "test.nfds").string()}};
    doc["checkpoint"] = (fs::path(dir) / "model.nfck").string();
    const std::string cfg2 = write_config("chain2.json", doc);
    const std::string vdir = (root() / "chain_validate").string();
    EXPECT_EQ(run("validate --config " + cfg2 + " --seed 1 --out " + vdir), 2);
    EXPECT_EQ(run("validate --config " + cfg2 + " --seed 1 --out " + vdir + " --force"), 0);

    // Dimension mismatch is a config error even when forced.
    json l96 = {{"preset", "lorenz96"},
                {"system", {{"n", 4}}},
                {"sampling", {{"n_train", 1}, {"n_test", 1}}},
                {"time", {{"t_end", 1.0}, {"n_points", 11}}},
                {"trim", 0}};
    const std::string l96dir = (root() / "l96").string();
    ASSERT_EQ(run("generate --config " + write_config("l96.json", l96) + " --out " + l96dir), 0);
    doc["data"] = {{"test", (fs::path(l96dir) / "test.nfds").string()}};
    EXPECT_EQ(run("validate --config " + write_config("chain3.json", doc) + " --out " + vdir + " --force"), 2);
    EXPECT_EQ(run("validate --config " + cfg + " --out " + (root() / "empty").string()), 4);
}

TEST(Cli, TrainingDivergenceExitsThree) {
    TrajectorySet s;
    s.t_kept = 3;
    s.grid = TimeGrid{0.0, 1.0, 3};
    s.U = Matrix::Constant(1, 6, 1e200);
    s.U_dot = Matrix::Constant(1, 6, 1e200);
    s.alpha = Vector::Ones(2);
    const fs::path dir = root() / "diverge";
    fs::create_directories(dir);
    write_dataset((dir / "train.nfds").string(), s, {{"config_hash", "x"}});
    json doc = smoke_doc();
    doc["training"]["epochs"] = 2;
    EXPECT_EQ(run("train --config " + write_config("diverge.json", doc) + " --out " + dir.string()), 3);
    EXPECT_TRUE(fs::exists(dir / "history.csv"));
    EXPECT_FALSE(fs::exists(dir / "model.nfck"));
}

TEST(Cli, DatasetBlowupExitsThree) {
    json doc = smoke_doc();
    doc["sampling"]["sigma_u"] = 1e4;
    doc["sampling"]["sigma_alpha"] = 0.0;
    EXPECT_EQ(run("generate --config " + write_config("blowup.json", doc) + " --out " + (root() / "blowup").string()),
              3);
}

TEST(Cli, PodReducesAndReconstructs) {
    // Three trajectories of rank-1 fields: mean + a(x) * cos(w t).
    const long space = 20, T = 100;
    std::vector<Trajectory> trajs;
    for (int j = 0; j < 3; ++j) {
        Trajectory t;
        t.grid = TimeGrid{0.0, 9.9, T};
        t.states.resize(space, T);
        for (long k = 0; k < T; ++k)
            for (long i = 0; i < space; ++i)
                t.states(i, k) = 0.1 * i + std::sin(0.3 * (i + 1) * (j + 1)) * std::cos((1.0 + 0.2 * j) * t.grid.time(k));
        t.derivs = Matrix::Zero(space, T);
        t.alpha = 40.0 + 5.0 * j;
        trajs.push_back(t);
    }
    const TrajectorySet snaps = stack(trajs);
    const std::string snap_path = (root() / "snaps.nfds").string();
    write_dataset(snap_path, snaps, {{"config_hash", "ext"}});

    json doc = {{"preset", "navierstokes-pod"},
                {"pod", {{"snapshots", snap_path}, {"m", 1}, {"trim", 10}, {"stride", 2}, {"gamma", "identity"},
                         {"n_test", 1}}}};
    const std::string dir = (root() / "pod1").string();
    ASSERT_EQ(run("pod --config " + write_config("pod1.json", doc) + " --out " + dir), 0);
    const LoadedDataset tr = read_dataset((fs::path(dir) / "reduced_train.nfds").string());
    const LoadedDataset te = read_dataset((fs::path(dir) / "reduced_test.nfds").string());
    EXPECT_EQ(tr.set.n_trajectories(), 2);
    EXPECT_EQ(te.set.n_trajectories(), 1);
    EXPECT_EQ(tr.set.t_kept, 45);
    EXPECT_EQ(tr.set.state_dim(), 1);
    EXPECT_NEAR(tr.set.alpha(0), 40.0 - 44.6, 1e-12);
    EXPECT_NEAR(te.set.alpha(0), 50.0 - 44.6, 1e-12);
    EXPECT_NEAR(tr.set.grid.dt(), 0.2, 1e-12);

    const Container basis = read_container((fs::path(dir) / "pod_basis.nfpb").string(), "NFPB");
    for (long j = 0; j < 3; ++j) {
        const PodBasis b = read_basis(basis, "traj" + std::to_string(j) + ".");
        const Matrix series = j < 2 ? tr.set.trajectory(j).states : te.set.trajectory(0).states;
        const Matrix rec = reconstruct(b, series);
        Matrix target(space, 45);
        for (long k = 0; k < 45; ++k) target.col(k) = trajs[static_cast<std::size_t>(j)].states.col(10 + 2 * k);
        EXPECT_LT((rec - target).cwiseAbs().maxCoeff(), 1e-8) << "trajectory " << j;
    }

    doc["pod"]["m"] = 4;
    doc["pod"]["gamma"] = "published";
    const std::string dir4 = (root() / "pod4").string();
    ASSERT_EQ(run("pod --config " + write_config("pod4.json", doc) + " --out " + dir4), 0);
    const Container b4 = read_container((fs::path(dir4) / "pod_basis.nfpb").string(), "NFPB");
    EXPECT_EQ(b4.get("gamma"), published_gamma());

    doc["pod"]["m"] = 25;
    doc["pod"]["gamma"] = "random";
    EXPECT_EQ(run("pod --config " + write_config("pod25.json", doc) + " --out " + (root() / "pod25").string()), 2);
    doc["pod"]["m"] = 3;
    doc["pod"]["gamma"] = "published";
    EXPECT_EQ(run("pod --config " + write_config("pod3.json", doc) + " --out " + (root() / "pod3").string()), 2);
    doc["pod"]["snapshots"] = (root() / "missing.nfds").string();
    EXPECT_EQ(run("pod --config " + write_config("podmissing.json", doc) + " --out " + (root() / "podm").string()),
              4);
}
