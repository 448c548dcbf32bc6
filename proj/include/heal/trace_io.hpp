// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "heal/dynamics.hpp"
#include "heal/policy.hpp"
#include "heal/selection.hpp"
#include "heal/trajectory.hpp"

namespace heal {

/// One line of a trace JSONL file. Field order on output is fixed; unknown
/// fields are kept in `extra` and written back after the known ones.
struct TraceRecord {
  std::string prompt_id;
  Domain domain = Domain::Target;
  std::int64_t trajectory_index = 0;
  std::optional<std::vector<std::int64_t>> tokens;
  std::vector<double> entropies;
  std::optional<std::vector<double>> logprobs;
  int correct = 0;
  std::optional<std::string> answer;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Parses and validates one JSON line. `line_no` is 1-based and appears in
/// every error message together with the offending field.
TraceRecord parse_trace_line(std::string_view line, std::size_t line_no);
std::string format_trace_line(const TraceRecord& rec);

/// Reads a JSONL trace file in file order. Blank lines are skipped. Throws
/// IoError if the file cannot be read and ValidationError on a bad line or on
/// a prompt_id that appears under two domains.
std::vector<TraceRecord> load_traces(const std::filesystem::path& path);
void write_traces(std::span<const TraceRecord> records, const std::filesystem::path& path);

Trajectory to_trajectory(const TraceRecord& rec);
TraceRecord to_trace_record(const Trajectory& traj);

/// Groups by prompt_id in order of first appearance.
std::vector<RolloutGroup> group_traces(std::span<const TraceRecord> records);

/// One logged training step.
struct MetricsRow {
  std::size_t step = 0;
  std::optional<double> mean_entropy_target;
  std::optional<double> mean_entropy_general;
  double reward_rate = 0.0;  // mean total reward over the batch, in [0, 2]
  double eda_rate = 0.0;     // share of target trajectories with r_eda = 1
  std::optional<double> mean_ed_distance;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

std::string format_metrics_row(const MetricsRow& row);
MetricsRow parse_metrics_row(std::string_view line, std::size_t line_no);
/// ValidationError if steps are not strictly increasing.
void write_metrics(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

/// CSV with a header row and column of source ids; cell (i, j) is
/// -sim_kl(tau_i, tau_j) printed with 9 significant digits.
std::string format_heatmap(std::span<const EntropyDynamics> dynamics);
void export_heatmap(std::span<const EntropyDynamics> dynamics, const std::filesystem::path& path);

/// policy.bin: "HEALPOL1", vocab_size u32 LE, context_window u32 LE, then
/// vocab_size^(context_window+1) float64 LE logits, row-major by context.
void write_policy(const ToyPolicy& policy, const std::filesystem::path& path);
ToyPolicy read_policy(const std::filesystem::path& path);

/// Whole-file helpers that map stream failures to IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace heal
