// SPDX-License-Identifier: Apache-2.0
#include "heal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heal/eda_reward.hpp"
#include "heal/entropy.hpp"
#include "heal/error.hpp"

namespace heal {

RolloutGroup rollout(const ToyPolicy& policy, const SynthTask& task, const RolloutOptions& options, Rng& rng) {
  if (options.rollouts == 0) throw ValidationError("rollout: need at least one trajectory");
  if (!(options.temperature > 0.0)) throw DomainError("rollout: temperature must be positive");
  const auto v = static_cast<std::size_t>(policy.vocab_size());

  std::vector<Trajectory> trajs;
  trajs.reserve(options.rollouts);
  std::vector<double> p(v);
  for (std::size_t i = 0; i < options.rollouts; ++i) {
    Trajectory t;
    t.prompt_id = task.prompt_id;
    t.domain = task.domain;
    t.index = static_cast<int>(i);
    std::vector<int> history = task.prompt_tokens;
    for (std::size_t step = 0; step < options.max_len; ++step) {
      const std::size_t row = policy.context_row(history);
      softmax_into(policy.row(row), options.temperature, p);

      std::size_t tok = 0;
      if (options.greedy) {
        tok = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      } else {
        const double u = rng.uniform();
        double cum = 0.0;
        tok = v;
        for (std::size_t k = 0; k < v; ++k) {
          cum += p[k];
          if (u < cum) {
            tok = k;
            break;
          }
        }
        if (tok == v) {  // u landed in the rounding gap above the final cumulative sum
          tok = v - 1;
          while (tok > 0 && p[tok] == 0.0) --tok;
        }
      }

      t.context_rows.push_back(row);
      t.tokens.push_back(static_cast<int>(tok));
      t.step_entropies.push_back(entropy_of(p));
      t.step_logprobs.push_back(std::log(p[tok]));
      t.step_dists.emplace_back(p);
      history.push_back(static_cast<int>(tok));
      if (static_cast<int>(tok) == kEosToken) break;
    }
    t.correct = check_answer(task, t.tokens);
    trajs.push_back(std::move(t));
  }
  std::string truth;
  for (int d : task.ground_truth) truth += std::to_string(d);
  return RolloutGroup(task.prompt_id, task.domain, std::move(trajs), truth);
}

std::vector<double> grpo_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw EmptyInputError("grpo_advantages: need at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd == 0.0) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sd + kAdvantageEpsilon);
  return adv;
}

namespace {

// k distinct pool entries, uniformly, in draw order (partial Fisher-Yates).
std::vector<std::size_t> draw_distinct(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::pair<std::size_t, std::size_t> batch_quota(const TrainConfig& c, std::size_t n_tgt, std::size_t n_gen) {
  const std::size_t total = c.batch_size;
  if (n_gen == 0) return {std::min(total, n_tgt), 0};
  if (n_tgt == 0) return {0, std::min(total, n_gen)};
  const double frac = c.target_fraction < 0.0
                          ? static_cast<double>(n_tgt) / static_cast<double>(n_tgt + n_gen)
                          : c.target_fraction;
  auto q_t = static_cast<std::size_t>(std::llround(frac * static_cast<double>(total)));
  if (frac > 0.0 && q_t == 0) q_t = 1;
  if (frac < 1.0 && q_t == total && total > 1) q_t = total - 1;
  const std::size_t q_g = total - q_t;
  return {std::min(q_t, n_tgt), std::min(q_g, n_gen)};
}

double domain_entropy(std::span<const Trajectory> trajs, CurveWeighting w) {
  return w == CurveWeighting::Token ? mean_vocab_entropy(trajs) : sequence_mean_vocab_entropy(trajs);
}

MetricsRow make_metrics(std::size_t step, std::span<const Trajectory> batch, std::span<const double> totals,
                        std::span<const RewardRecord> eda, CurveWeighting weighting) {
  MetricsRow row;
  row.step = step;
  std::vector<Trajectory> tgt, gen;
  std::vector<EntropyDynamics> tgt_dyn;
  std::size_t eda_hits = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].domain == Domain::Target) {
      tgt.push_back(batch[b]);
      tgt_dyn.push_back(EntropyDynamics::from_trajectory(batch[b]));
      if (!eda.empty()) eda_hits += static_cast<std::size_t>(eda[b].r_eda);
    } else {
      gen.push_back(batch[b]);
    }
  }
  if (!tgt.empty()) row.mean_entropy_target = domain_entropy(tgt, weighting);
  if (!gen.empty()) row.mean_entropy_general = domain_entropy(gen, weighting);
  row.reward_rate = totals.empty() ? 0.0
                                   : std::accumulate(totals.begin(), totals.end(), 0.0) /
                                         static_cast<double>(totals.size());
  row.eda_rate = tgt.empty() ? 0.0 : static_cast<double>(eda_hits) / static_cast<double>(tgt.size());
  if (tgt_dyn.size() >= 2) row.mean_ed_distance = pairwise_distance_matrix(tgt_dyn).mean_off_diagonal();
  return row;
}

}  // namespace

RunRecord train(const TrainConfig& config) {
  validate(config);
  RunRecord run;
  run.config = config;
  run.policy = ToyPolicy(kTaskVocabSize, static_cast<int>(config.context_window));
  const ToyPolicy reference = run.policy;

  const bool uses_target = config.mode != TrainMode::OnlyGeneral;
  const bool uses_general = config.mode == TrainMode::OnlyGeneral || config.mode == TrainMode::Hybrid ||
                            config.mode == TrainMode::Heal;
  const bool heal = config.mode == TrainMode::Heal;
  const std::size_t n_tgt = uses_target ? config.n_target : 0;
  const std::size_t n_gen_pool =
      uses_general ? config.n_general * (heal ? config.selection_pool_factor : 1) : 0;
  const auto tasks = make_task_suite(config.seed, n_tgt, n_gen_pool);

  RolloutOptions ro;
  ro.rollouts = config.rollouts_per_prompt;
  ro.temperature = config.temperature;
  ro.max_len = config.max_len;

  std::vector<std::size_t> target_pool, general_pool;
  for (std::size_t i = 0; i < n_tgt; ++i) target_pool.push_back(i);
  if (heal) {
    // Score every candidate under the initial policy and keep the best n_general.
    std::vector<SelectionScore> scores;
    scores.reserve(n_gen_pool);
    for (std::size_t i = n_tgt; i < tasks.size(); ++i) {
      Rng rng(derive_seed(config.seed, hash_string("select"), hash_string(tasks[i].prompt_id)));
      scores.push_back(score_group(rollout(run.policy, tasks[i], ro, rng)));
    }
    run.selected_general = select_top_k(scores, config.n_general);
    for (const auto& id : run.selected_general) {
      for (std::size_t i = n_tgt; i < tasks.size(); ++i) {
        if (tasks[i].prompt_id == id) {
          general_pool.push_back(i);
          break;
        }
      }
    }
  } else {
    for (std::size_t i = n_tgt; i < tasks.size(); ++i) general_pool.push_back(i);
  }

  const auto [q_tgt, q_gen] = batch_quota(config, target_pool.size(), general_pool.size());

  UpdateSettings settings;
  settings.temperature = config.temperature;
  settings.regularizer = config.regularizer;
  settings.reg = config.reg;
  settings.reference_kl = config.reference_kl;

  for (std::size_t step = 0; step <= config.steps; ++step) {
    Rng batch_rng(derive_seed(config.seed, hash_string("batch"), step));
    std::vector<std::size_t> picked = draw_distinct(target_pool, q_tgt, batch_rng);
    const auto gen_picked = draw_distinct(general_pool, q_gen, batch_rng);
    picked.insert(picked.end(), gen_picked.begin(), gen_picked.end());

    std::vector<Trajectory> batch;
    std::vector<std::size_t> group_start;
    for (std::size_t slot = 0; slot < picked.size(); ++slot) {
      const auto& task = tasks[picked[slot]];
      Rng rng(derive_seed(config.seed, hash_string(task.prompt_id), step, slot));
      auto group = rollout(run.policy, task, ro, rng);
      group_start.push_back(batch.size());
      for (const auto& t : group.trajectories()) batch.push_back(t);
    }
    group_start.push_back(batch.size());

    std::vector<double> totals(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) totals[b] = *batch[b].correct ? 1.0 : 0.0;
    std::vector<RewardRecord> eda;
    if (heal && step >= config.eda_warmup) {
      eda = batch_rewards(batch, config.sim_choice);
      for (std::size_t b = 0; b < batch.size(); ++b) totals[b] = static_cast<double>(eda[b].total);
    }

    if (step % config.log_interval == 0 || step == config.steps) {
      run.metrics.push_back(make_metrics(step, batch, totals, eda, config.entropy_curve_weighting));
    }
    if (step == config.steps) {
      run.final_rollouts = std::move(batch);
      break;
    }

    std::vector<double> advantages(batch.size());
    for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
      const auto first = static_cast<std::ptrdiff_t>(group_start[g]);
      const auto last = static_cast<std::ptrdiff_t>(group_start[g + 1]);
      const auto adv = grpo_advantages(std::span<const double>(totals.data() + first, totals.data() + last));
      std::copy(adv.begin(), adv.end(), advantages.begin() + first);
    }
    UpdateBatch update{batch, advantages, &reference};
    try {
      run.policy = policy_gradient_step(run.policy, update, config.learning_rate, settings, config.ppo_epochs);
    } catch (const DivergenceError& e) {
      run.diverged = true;
      run.diagnostic = "step " + std::to_string(step) + ": " + e.what();
      run.final_rollouts = std::move(batch);
      break;
    }
  }
  return run;
}

void save_run(const RunRecord& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  write_metrics(run.metrics, dir / "metrics.jsonl");
  write_text_file(dir / "config.echo", format_config(run.config));
  write_policy(run.policy, dir / "policy.bin");
  if (run.config.dump_traces) {
    std::vector<TraceRecord> recs;
    recs.reserve(run.final_rollouts.size());
    for (const auto& t : run.final_rollouts) recs.push_back(to_trace_record(t));
    write_traces(recs, dir / "traces.jsonl");
  }
}

}  // namespace heal
