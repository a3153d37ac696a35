#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("HGBA_CLI");
  REQUIRE_MESSAGE(p != nullptr, "HGBA_CLI must point at the command-line binary");
  return p;
}

int run(const std::string& args, const fs::path& stdout_file = "/dev/null") {
  const std::string cmd = cli() + " " + args + " > " + stdout_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / "hgba_cli_test";
  TempDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("exit codes") {
  TempDir t;
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("synth --seed notanumber --out " + t.path.string()) == 2);
  CHECK(run("--config /nonexistent.json synth --out " + t.path.string()) == 2);
  std::ofstream(t.path / "bad.json") << R"({"attack": {"budget": 3}})";
  CHECK(run("--config " + (t.path / "bad.json").string() + " synth --out " + (t.path / "g").string()) == 2);
  CHECK(run("--graph /nonexistent/graph select-trigger --metapath T-A-T") == 3);
}

TEST_CASE("a stage-by-stage session") {
  TempDir t;
  const auto d = [&](const char* name) { return (t.path / name).string(); };
  std::ofstream(t.path / "cfg.json") << R"({"graph": {"synth": {"target_count": 200, "aux_a_count": 60,
      "aux_b_count": 40, "feature_dim": 8}}, "train": {"max_epochs": 20, "patience": 5}, "model": {"hidden": 8}})";
  const std::string cfg = "--config " + d("cfg.json") + " --seed 2 ";

  REQUIRE(run(cfg + "synth --out " + d("g")) == 0);
  CHECK(fs::exists(t.path / "g" / "manifest.json"));
  CHECK(fs::exists(t.path / "g" / "split.txt"));

  REQUIRE(run(cfg + "--graph " + d("g") + " select-trigger --metapath T-A-T", t.path / "scores.csv") == 0);
  const std::string scores = slurp(t.path / "scores.csv");
  CHECK(scores.rfind("node_index,score\n", 0) == 0);
  CHECK(std::count(scores.begin(), scores.end(), '\n') == 201);

  REQUIRE(run(cfg + "--graph " + d("g") + " select-metapath", t.path / "mp.csv") == 0);
  CHECK(slurp(t.path / "mp.csv").rfind("metapath,score\n", 0) == 0);

  REQUIRE(run(cfg + "--graph " + d("g") + " poison --budget 0.05 --target-class 1 --metapath T-A-T --out " + d("p")) == 0);
  CHECK(slurp(t.path / "p" / "plan.json").find("\"y_t\": 1") != std::string::npos);
  CHECK(run(cfg + "--graph " + d("g") + " poison --target-class most --out " + d("p2")) == 2);

  REQUIRE(run(cfg + "--graph " + d("p") + " train --arch gcn --metapaths T-A-T --out " + d("m")) == 0);
  CHECK(slurp(t.path / "m" / "metrics.csv").rfind("test_micro,test_macro", 0) == 0);

  REQUIRE(run(cfg + "--graph " + d("p") + " eval-asr --model " + d("m") + " --plan " + d("p/plan.json"),
              t.path / "asr.csv") == 0);
  CHECK(slurp(t.path / "asr.csv").rfind("asr_self_node,asr_indiscriminate\n", 0) == 0);
  REQUIRE(run(cfg + "--graph " + d("p") + " eval-asr --protocol simultaneous --fraction 0.5 --model " + d("m") +
              " --plan " + d("p/plan.json"), t.path / "sim.csv") == 0);
  CHECK(slurp(t.path / "sim.csv").rfind("fraction,", 0) == 0);

  REQUIRE(run(cfg + "--graph " + d("p") + " sweep-noise --levels 0,1 --model " + d("m") + " --plan " + d("p/plan.json"),
              t.path / "noise.csv") == 0);
  const std::string noise = slurp(t.path / "noise.csv");
  CHECK(std::count(noise.begin(), noise.end(), '\n') == 3);

  REQUIRE(run(cfg + "--graph " + d("p") + " defend --method prune --threshold 0.2 --oracle-metapath T-A-T --out " +
              d("def")) == 0);
  CHECK(slurp(t.path / "def" / "report.json").find("\"method\": \"prune\"") != std::string::npos);
  CHECK(run(cfg + "--graph " + d("p") + " defend --threshold 1.5 --out " + d("def2")) == 2);
}

TEST_CASE("run writes a results directory") {
  TempDir t;
  std::ofstream(t.path / "cfg.json") << R"({"graph": {"synth": {"target_count": 150, "aux_a_count": 45,
      "aux_b_count": 30, "feature_dim": 8}}, "train": {"max_epochs": 15, "patience": 5}, "model": {"hidden": 8},
      "attack": {"budget": 0.05}, "eval": {"seeds": [0]}})";
  REQUIRE(run("--config " + (t.path / "cfg.json").string() + " --out " + (t.path / "out").string() + " run",
              t.path / "summary.csv") == 0);
  CHECK(fs::exists(t.path / "out" / "manifest.json"));
  CHECK(slurp(t.path / "summary.csv").rfind("arch,", 0) == 0);
}
