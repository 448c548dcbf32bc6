// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "heal/trace_io.hpp"

namespace heal {

/// n samples per problem, c of them correct, k drawn.
struct PassAtKInput {
  std::uint64_t n = 1;
  std::uint64_t c = 0;
  std::uint64_t k = 1;
};

/// Exact binomial coefficient; 0 when b > a. Throws DomainError on overflow.
std::uint64_t binomial(std::uint64_t a, std::uint64_t b);

/// Unbiased estimator 1 - C(n-c, k) / C(n, k). Exact integer arithmetic for
/// n <= 64, a stable product form above. DomainError unless 0 <= c <= n and
/// 1 <= k <= n.
double pass_at_k(const PassAtKInput& input);

/// One run's metrics, labelled for multi-run output.
struct LabelledRun {
  std::string label;
  std::vector<MetricsRow> rows;
};

/// Loads <run_dir>/metrics.jsonl. IoError if missing.
LabelledRun load_run_curves(const std::filesystem::path& run_dir, std::string label = {});

/// CSV: step,mean_entropy_target,mean_entropy_general,reward_rate,eda_rate,
/// prefixed by a run column when `with_label` is set. Absent values are empty.
std::string format_curves(std::span<const LabelledRun> runs, bool with_label);

}  // namespace heal
