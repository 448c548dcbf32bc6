// SPDX-License-Identifier: Apache-2.0
#include "heal/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heal/analysis.hpp"
#include "heal/eda_reward.hpp"
#include "heal/error.hpp"
#include "heal/selection.hpp"
#include "heal/simulator.hpp"
#include "heal/trace_io.hpp"

namespace heal {
namespace {

using json = nlohmann::ordered_json;

bool verbose() {
  const char* v = std::getenv("HEAL_LOG");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<Trajectory> trajectories_of(std::span<const TraceRecord> records) {
  std::vector<Trajectory> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_trajectory(r));
  return out;
}

int cmd_select(const std::string& traces, std::size_t k, const std::string& out_path, std::ostream& err) {
  err << "heal select: traces=" << traces << " k=" << k << " out=" << out_path << '\n';
  const auto records = load_traces(traces);
  const auto groups = group_traces(records);
  std::vector<SelectionScore> scores;
  scores.reserve(groups.size());
  std::string text;
  for (const auto& g : groups) {
    scores.push_back(score_group(g));
    const auto& s = scores.back();
    json row = json::object();
    row["prompt_id"] = s.prompt_id;
    row["accuracy"] = s.accuracy;
    row["uncertainty"] = s.uncertainty;
    row["diversity"] = s.diversity;
    row["composite"] = s.composite;
    text += row.dump() + "\n";
  }
  json tail = json::object();
  tail["selected"] = select_top_k(scores, k);
  text += tail.dump() + "\n";
  write_text_file(out_path, text);
  return kExitOk;
}

int cmd_reward(const std::string& traces, const std::string& sim_name, const std::string& out_path, std::ostream& err) {
  const Similarity sim = parse_similarity(sim_name);
  err << "heal reward: traces=" << traces << " sim=" << to_string(sim) << " out=" << out_path << '\n';
  const auto records = load_traces(traces);
  const auto batch = trajectories_of(records);
  std::string text;
  if (!batch.empty()) {
    for (const auto& rec : batch_rewards(batch, sim)) {
      json row = json::object();
      row["trajectory_id"] = rec.trajectory_id;
      row["r_acc"] = rec.r_acc;
      row["r_eda"] = rec.r_eda;
      row["total"] = rec.total;
      row["s_intra"] = optional_json(rec.s_intra);
      row["s_inter"] = optional_json(rec.s_inter);
      text += row.dump() + "\n";
    }
  }
  write_text_file(out_path, text);
  return kExitOk;
}

int cmd_sim(const std::string& config_path, const std::string& out_dir, const std::optional<std::uint64_t>& seed,
            std::ostream& out, std::ostream& err) {
  TrainConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  err << "heal sim: out=" << out_dir << "\n" << format_config(cfg);
  const RunRecord run = train(cfg);
  if (verbose()) {
    for (const auto& row : run.metrics) err << format_metrics_row(row) << '\n';
  }
  save_run(run, out_dir);
  if (!run.metrics.empty()) out << format_metrics_row(run.metrics.back()) << '\n';
  if (run.diverged) {
    err << "heal sim: diverged at " << run.diagnostic << '\n';
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_passk(std::uint64_t n, std::uint64_t c, std::uint64_t k, std::ostream& out, std::ostream& err) {
  err << "heal passk: n=" << n << " c=" << c << " k=" << k << '\n';
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", pass_at_k({n, c, k}));
  out << buf << '\n';
  return kExitOk;
}

int cmd_curves(const std::vector<std::string>& runs, const std::vector<std::string>& labels, bool label_column,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
  if (!labels.empty() && labels.size() != runs.size()) {
    throw ValidationError("curves: --label must be given once per --run");
  }
  err << "heal curves: runs=" << runs.size() << " out=" << (out_path.empty() ? "-" : out_path) << '\n';
  std::vector<LabelledRun> loaded;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    loaded.push_back(load_run_curves(runs[i], labels.empty() ? std::string{} : labels[i]));
  }
  const std::string csv = format_curves(loaded, label_column || runs.size() > 1);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_text_file(out_path, csv);
  }
  return kExitOk;
}

int cmd_heatmap(const std::string& traces, const std::string& out_path, const std::string& domain,
                const std::string& prompt, std::ostream& err) {
  if (domain != "all") parse_domain(domain);
  err << "heal heatmap: traces=" << traces << " domain=" << domain << " prompt=" << (prompt.empty() ? "*" : prompt)
      << " out=" << out_path << '\n';
  const auto records = load_traces(traces);
  std::vector<EntropyDynamics> dyn;
  for (const auto& r : records) {
    if (domain != "all" && to_string(r.domain) != domain) continue;
    if (!prompt.empty() && r.prompt_id != prompt) continue;
    dyn.push_back(EntropyDynamics::from_trajectory(to_trajectory(r)));
  }
  if (dyn.empty()) throw ValidationError("heatmap: no trajectories match the filters");
  export_heatmap(dyn, out_path);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-dynamics tooling for RLVR rollouts: selection, EDA rewards, simulation, analysis", "heal"};
  app.require_subcommand(1);

  std::string traces, out_path, sim_name = "kl", config_path, out_dir = "heal_run", domain = "all", prompt;
  std::size_t k = kDefaultSelectK;
  std::uint64_t n = 1, c = 0, kk = 1, seed_value = 0;
  std::vector<std::string> runs, labels;
  bool label_column = false;

  auto* select = app.add_subcommand("select", "score prompt groups and keep the top K");
  select->add_option("--traces", traces, "trace JSONL")->required();
  select->add_option("--k", k, "number of prompts to keep")->capture_default_str();
  select->add_option("--out", out_path, "output JSONL")->required();

  auto* reward = app.add_subcommand("reward", "EDA rewards for every trajectory of a batch");
  reward->add_option("--traces", traces, "trace JSONL (one batch)")->required();
  reward->add_option("--sim", sim_name, "similarity: kl|hti|pl")->capture_default_str();
  reward->add_option("--out", out_path, "output JSONL")->required();

  auto* sim = app.add_subcommand("sim", "run the toy RLVR simulator");
  sim->add_option("--config", config_path, "key = value config file")->required();
  sim->add_option("--out", out_dir, "run directory")->capture_default_str();
  auto* seed_opt = sim->add_option("--seed", seed_value, "override the config seed");

  auto* passk = app.add_subcommand("passk", "unbiased pass@k estimate");
  passk->add_option("--n", n, "samples per problem")->required();
  passk->add_option("--c", c, "correct samples")->required();
  passk->add_option("--k", kk, "k")->required();

  auto* curves = app.add_subcommand("curves", "per-step entropy and reward series as CSV");
  curves->add_option("--run", runs, "run directory (repeatable)")->required();
  curves->add_option("--label", labels, "label per run (repeatable)");
  curves->add_flag("--multi", label_column, "always emit the run column");
  curves->add_option("--out", out_path, "output CSV (default stdout)");

  auto* heatmap = app.add_subcommand("heatmap", "pairwise entropy-dynamics distance matrix as CSV");
  heatmap->add_option("--traces", traces, "trace JSONL")->required();
  heatmap->add_option("--out", out_path, "output CSV")->required();
  heatmap->add_option("--domain", domain, "target|general|all")->capture_default_str();
  heatmap->add_option("--prompt", prompt, "restrict to one prompt id");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*select) return cmd_select(traces, k, out_path, err);
    if (*reward) return cmd_reward(traces, sim_name, out_path, err);
    if (*sim) {
      std::optional<std::uint64_t> seed;
      if (*seed_opt) seed = seed_value;
      return cmd_sim(config_path, out_dir, seed, out, err);
    }
    if (*passk) return cmd_passk(n, c, kk, out, err);
    if (*curves) return cmd_curves(runs, labels, label_column, out_path, out, err);
    if (*heatmap) return cmd_heatmap(traces, out_path, domain, prompt, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace heal
