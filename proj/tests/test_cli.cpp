// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "heal/cli.hpp"
#include "heal/trace_io.hpp"

using namespace heal;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "heal");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir() {
  const auto dir = fs::temp_directory_path() / "heal_unit_cli";
  fs::create_directories(dir);
  return dir;
}

std::string trace_file() {
  const auto path = workdir() / "batch.jsonl";
  write_text_file(path,
                  R"({"prompt_id":"t1","domain":"target","trajectory_index":0,"entropies":[0.0,3.0,0.0],"correct":1,"answer":"4"}
{"prompt_id":"t1","domain":"target","trajectory_index":1,"entropies":[3.0,0.0,3.0],"correct":0}
{"prompt_id":"g1","domain":"general","trajectory_index":0,"entropies":[0.0,3.0,0.0],"correct":1}
{"prompt_id":"g1","domain":"general","trajectory_index":1,"entropies":[1.0,1.0],"correct":0}
{"prompt_id":"g2","domain":"general","trajectory_index":0,"entropies":[2.0],"correct":1}
{"prompt_id":"g2","domain":"general","trajectory_index":1,"entropies":[2.5],"correct":1}
)");
  return path.string();
}

}  // namespace

TEST_CASE("passk") {
  const auto r = run({"passk", "--n", "10", "--c", "3", "--k", "5"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "0.91666666666666663\n");
  CHECK(r.err.find("n=10 c=3 k=5") != std::string::npos);
  CHECK(run({"passk", "--n", "3", "--c", "5", "--k", "1"}).code == kExitValidation);
  CHECK(run({"passk", "--n", "3"}).code == kExitValidation);
  CHECK(run({"passk", "--n", "abc", "--c", "1", "--k", "1"}).code == kExitValidation);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"frobnicate"}).code == kExitValidation);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("select") {
  const auto out = (workdir() / "select.jsonl").string();
  const auto r = run({"select", "--traces", trace_file(), "--k", "1", "--out", out});
  REQUIRE(r.code == kExitOk);
  const std::string text = read_text_file(out);
  CHECK(text.find(R"({"prompt_id":"t1","accuracy":0.5,"uncertainty":1.0,"diversity":3.0,"composite":3.0})") == 0);
  CHECK(text.find(R"({"selected":["t1"]})") != std::string::npos);
  CHECK(r.err.find("k=1") != std::string::npos);
}

TEST_CASE("reward") {
  const auto out = (workdir() / "reward.jsonl").string();
  REQUIRE(run({"reward", "--traces", trace_file(), "--out", out}).code == kExitOk);
  const std::string text = read_text_file(out);
  CHECK(text.find(R"({"trajectory_id":"t1/0","r_acc":1,"r_eda":1,"total":2,)") == 0);
  CHECK(text.find(R"({"trajectory_id":"g2/1","r_acc":1,"r_eda":0,"total":1,"s_intra":null,"s_inter":null})") !=
        std::string::npos);
  CHECK(run({"reward", "--traces", trace_file(), "--sim", "dtw", "--out", out}).code == kExitValidation);
  CHECK(run({"reward", "--traces", (workdir() / "none.jsonl").string(), "--out", out}).code == kExitIo);
}

TEST_CASE("malformed trace input") {
  const auto bad = workdir() / "bad.jsonl";
  write_text_file(bad, "{\"prompt_id\":\"x\"}\n");
  const auto r = run({"select", "--traces", bad.string(), "--out", (workdir() / "o.jsonl").string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("line 1") != std::string::npos);
}

TEST_CASE("heatmap") {
  const auto out = (workdir() / "heat.csv").string();
  REQUIRE(run({"heatmap", "--traces", trace_file(), "--out", out, "--prompt", "t1"}).code == kExitOk);
  const std::string text = read_text_file(out);
  CHECK(text.rfind("id,t1/0,t1/1\n", 0) == 0);
  CHECK(run({"heatmap", "--traces", trace_file(), "--out", out, "--domain", "code"}).code == kExitValidation);
  CHECK(run({"heatmap", "--traces", trace_file(), "--out", out, "--prompt", "zzz"}).code == kExitValidation);
  REQUIRE(run({"heatmap", "--traces", trace_file(), "--out", out, "--domain", "general"}).code == kExitOk);
  CHECK(read_text_file(out).rfind("id,g1/0,g1/1,g2/0,g2/1\n", 0) == 0);
}

TEST_CASE("sim and curves") {
  const auto cfg = workdir() / "run.cfg";
  write_text_file(cfg, "mode = heal\nn_target = 2\nn_general = 4\nbatch_size = 4\nsteps = 3\nlog_interval = 2\nlearning_rate = 1\n");
  const auto dir = workdir() / "run";
  fs::remove_all(dir);
  const auto r = run({"sim", "--config", cfg.string(), "--out", dir.string(), "--seed", "9"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("seed = 9") != std::string::npos);
  CHECK(r.out.rfind("{\"step\":3,", 0) == 0);
  CHECK(fs::exists(dir / "metrics.jsonl"));
  CHECK(fs::exists(dir / "config.echo"));
  CHECK(fs::exists(dir / "policy.bin"));

  const auto c = run({"curves", "--run", dir.string()});
  REQUIRE(c.code == kExitOk);
  CHECK(c.out.rfind("step,mean_entropy_target,mean_entropy_general,reward_rate,eda_rate\n0,", 0) == 0);
  const auto m = run({"curves", "--run", dir.string(), "--run", dir.string(), "--label", "a", "--label", "b"});
  REQUIRE(m.code == kExitOk);
  CHECK(m.out.find("\nb,3,") != std::string::npos);
  CHECK(run({"curves", "--run", dir.string(), "--label", "a", "--label", "b"}).code == kExitValidation);
  CHECK(run({"curves", "--run", (workdir() / "nothing").string()}).code == kExitIo);

  write_text_file(cfg, "mode = fewshot\nsteps = 3\nlearning_rate = 1e308\nn_target = 2\ntemperature = 0.01\n");
  CHECK(run({"sim", "--config", cfg.string(), "--out", (workdir() / "div").string()}).code == kExitDivergence);
  write_text_file(cfg, "mode = fewshot\nsteps = 3\nwat = 1\n");
  CHECK(run({"sim", "--config", cfg.string(), "--out", (workdir() / "bad").string()}).code == kExitValidation);
  CHECK(run({"sim", "--config", (workdir() / "missing.cfg").string()}).code == kExitIo);
  fs::remove_all(workdir());
}
