// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heal/trajectory.hpp"

namespace heal {

// Shared vocabulary: digits 0-9, a separator that closes every prompt, and
// an end token that stops generation.
inline constexpr int kNumDigits = 10;
inline constexpr int kSepToken = 10;
inline constexpr int kEosToken = 11;
inline constexpr int kTaskVocabSize = 12;

/// Target family: modular arithmetic. General families: sequence transforms.
enum class TaskFamily {
  ModSum,     // target: (sum of the three prompt digits) mod 10
  CopyFirst,  // general: the first prompt digit
  Parity,     // general: number of odd prompt digits mod 2
  MaxDigit,   // general: the largest prompt digit
};

std::string_view to_string(TaskFamily f);

struct SynthTask {
  std::string prompt_id;
  Domain domain = Domain::Target;
  std::vector<int> prompt_tokens;  // digits followed by kSepToken
  std::vector<int> ground_truth;   // single answer digit
  TaskFamily family = TaskFamily::ModSum;
};

/// Exact answer of a family on the prompt digits.
std::vector<int> solve_task(TaskFamily family, std::span<const int> digits);

/// Final answer of a generation: the last digit emitted before the first end
/// token (or before max length). nullopt when no digit was emitted.
std::optional<int> extract_answer(std::span<const int> generated);

bool check_answer(const SynthTask& task, std::span<const int> generated);

/// Target tasks "tgt-0000".. and general tasks "gen-0000".. drawn from
/// independent streams of `seed`, so the first k general tasks do not depend
/// on n_general.
std::vector<SynthTask> make_task_suite(std::uint64_t seed, std::size_t n_target, std::size_t n_general);

}  // namespace heal
