// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heal/dynamics.hpp"
#include "heal/policy.hpp"
#include "heal/regularizers.hpp"
#include "heal/rng.hpp"
#include "heal/selection.hpp"
#include "heal/tasks.hpp"
#include "heal/trace_io.hpp"

namespace heal {

enum class TrainMode { FewShot, FullShot, OnlyGeneral, Hybrid, Heal };
enum class CurveWeighting { Token, Sequence };

std::string_view to_string(TrainMode m);
TrainMode parse_mode(std::string_view s);
std::string_view to_string(CurveWeighting w);
CurveWeighting parse_weighting(std::string_view s);

/// Every field is a key of the flat `key = value` config file.
struct TrainConfig {
  TrainMode mode = TrainMode::Hybrid;
  std::size_t n_target = 32;
  std::size_t n_general = 384;
  std::size_t rollouts_per_prompt = 8;
  double temperature = 0.7;
  std::size_t batch_size = 128;  // prompts per step
  std::size_t steps = 200;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  RegularizerKind regularizer = RegularizerKind::None;
  RegularizerConfig reg;
  Similarity sim_choice = Similarity::Kl;
  CurveWeighting entropy_curve_weighting = CurveWeighting::Token;

  std::size_t max_len = 8;
  std::size_t context_window = 2;
  /// Share of each batch drawn from the target pool; negative means
  /// proportional to the pool sizes.
  double target_fraction = -1.0;
  /// First step at which EDA rewards are added (heal only).
  std::size_t eda_warmup = 0;
  std::size_t log_interval = 10;
  /// heal: selection scores a general pool this many times n_general.
  std::size_t selection_pool_factor = 4;
  std::size_t ppo_epochs = 1;
  bool reference_kl = false;
  bool dump_traces = false;
};

/// ValidationError naming the first bad field.
void validate(const TrainConfig& config);

/// Parses `key = value` lines; '#' starts a comment. Unknown keys, malformed
/// values and duplicate keys are ValidationErrors naming the line.
TrainConfig parse_config(std::string_view text);
/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const TrainConfig& config);
TrainConfig load_config(const std::filesystem::path& path);

struct RolloutOptions {
  std::size_t rollouts = kDefaultRolloutsPerPrompt;
  double temperature = 0.7;
  std::size_t max_len = 8;
  /// Argmax decoding (ties to the lowest token). Entropies and log-probs are
  /// still those of the temperature-T distribution.
  bool greedy = false;
};

/// Samples options.rollouts trajectories autoregressively. Stops at the end
/// token or max_len.
RolloutGroup rollout(const ToyPolicy& policy, const SynthTask& task, const RolloutOptions& options, Rng& rng);

/// (r - mean) / (population std + 1e-6); all zeros when std == 0.
/// EmptyInputError for fewer than two rewards.
std::vector<double> grpo_advantages(std::span<const double> rewards);

inline constexpr double kAdvantageEpsilon = 1e-6;

struct RunRecord {
  TrainConfig config;
  std::vector<MetricsRow> metrics;
  ToyPolicy policy{kTaskVocabSize, 2};
  /// Rollouts sampled at the last logged step.
  std::vector<Trajectory> final_rollouts;
  /// heal: general prompt ids kept by selection, best first.
  std::vector<std::string> selected_general;
  bool diverged = false;
  std::string diagnostic;
};

/// Full training loop. Deterministic in the config (including seed). A
/// divergence stops the loop and is reported through `diverged`, keeping the
/// rows logged so far.
RunRecord train(const TrainConfig& config);

/// Writes metrics.jsonl, config.echo, policy.bin and, when dump_traces is
/// set, traces.jsonl (final rollouts) under `dir`.
void save_run(const RunRecord& run, const std::filesystem::path& dir);

}  // namespace heal
