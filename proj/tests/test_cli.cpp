// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "oracle.hpp"
#include "patchprop/io.hpp"
#include "patchprop/transfer.hpp"

#ifndef PATCHPROP_CLI
#error "PATCHPROP_CLI must name the command line binary"
#endif

using namespace patchprop;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

Run run(const std::string& args, const fs::path& dir) {
  const auto log = dir / "cli.log";
  const std::string cmd =
      std::string("\"") + PATCHPROP_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("phantom, train and apply round trip with a config file") {
  const auto dir = oracle::scratch_dir("cli");
  auto r = run("phantom --kind disks --width 96 --height 96 --count 12 --marked-objects 4 --out-dir " +
                   (dir / "ph").string(),
               dir);
  REQUIRE_MESSAGE(r.status == 0, r.output);
  std::ofstream(dir / "cfg.toml") << "log_level = \"warning\"\n"
                                     "[train]\n"
                                     "patch_size = 5\n"
                                     "branching = 3\n"
                                     "layers = 2\n"
                                     "subsample = 3000\n"
                                     "binarise = true\n";
  r = run("--config " + (dir / "cfg.toml").string() + " train --image " +
              (dir / "ph/image.png").string() + " --marks " + (dir / "ph/marks.png").string() +
              " --model " + (dir / "m.ppd").string() + " --out-dir " + (dir / "train").string(),
          dir);
  REQUIRE_MESSAGE(r.status == 0, r.output);
  const auto model = TrainedModel::load((dir / "m.ppd").string());
  CHECK(model.tree->patch_size() == 5);
  CHECK(model.tree->node_count() == 13);

  r = run("apply --model " + (dir / "m.ppd").string() + " --input " +
              (dir / "ph/image.png").string() + " --out-dir " + (dir / "apply").string() +
              " --centres",
          dir);
  REQUIRE_MESSAGE(r.status == 0, r.output);
  const auto a = read_npy((dir / "train/probabilities.npy").string());
  const auto b = read_npy((dir / "apply/probabilities.npy").string());
  CHECK(a.shape == b.shape);
  CHECK(oracle::max_abs_diff(a.values, b.values) <= 1e-12);
  CHECK(fs::exists(dir / "apply/centres.csv"));
  CHECK(fs::exists(dir / "train/segmentation.png"));

  r = run("--config " + (dir / "cfg.toml").string() + " train --patch-size 7 --image " +
              (dir / "ph/image.png").string() + " --marks " + (dir / "ph/marks.png").string() +
              " --model " + (dir / "m7.ppd").string(),
          dir);
  REQUIRE_MESSAGE(r.status == 0, r.output);
  CHECK(TrainedModel::load((dir / "m7.ppd").string()).tree->patch_size() == 7);
  fs::remove_all(dir);
}

TEST_CASE("bad invocations fail") {
  const auto dir = oracle::scratch_dir("cli_bad");
  CHECK(run("train --image x.png", dir).status != 0);
  CHECK(run("frobnicate", dir).status != 0);
  std::ofstream(dir / "bad.toml") << "[train]\npatch_sise = 5\n";
  auto r = run("--config " + (dir / "bad.toml").string() + " train --image a --marks b --model c",
               dir);
  CHECK(r.status != 0);
  CHECK(r.output.find("patch_sise") != std::string::npos);
  r = run("apply --model " + (dir / "missing.ppd").string() + " --input x.png --out-dir o", dir);
  CHECK(r.status != 0);
  CHECK_FALSE(r.output.empty());
  fs::remove_all(dir);
}

TEST_CASE("bench prints a table") {
  const auto dir = oracle::scratch_dir("cli_bench");
  const auto r = run("bench --sizes 64 --patch-size 5 --branching 2 --layers 1,2 --repeats 3", dir);
  REQUIRE_MESSAGE(r.status == 0, r.output);
  CHECK(r.output.find("p50") != std::string::npos);
  std::size_t lines = 0;
  for (char c : r.output) lines += c == '\n';
  CHECK(lines >= 3);
  fs::remove_all(dir);
}

}
