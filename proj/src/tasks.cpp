// SPDX-License-Identifier: Apache-2.0
#include "heal/tasks.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "heal/error.hpp"
#include "heal/rng.hpp"

namespace heal {

std::string_view to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::ModSum: return "modsum";
    case TaskFamily::CopyFirst: return "copy_first";
    case TaskFamily::Parity: return "parity";
    case TaskFamily::MaxDigit: return "max_digit";
  }
  return "modsum";
}

std::vector<int> solve_task(TaskFamily family, std::span<const int> digits) {
  if (digits.empty()) throw ValidationError("solve_task: no prompt digits");
  switch (family) {
    case TaskFamily::ModSum:
      return {std::accumulate(digits.begin(), digits.end(), 0) % kNumDigits};
    case TaskFamily::CopyFirst:
      return {digits.front()};
    case TaskFamily::Parity:
      return {static_cast<int>(std::count_if(digits.begin(), digits.end(), [](int d) { return d % 2 == 1; })) % 2};
    case TaskFamily::MaxDigit:
      return {*std::max_element(digits.begin(), digits.end())};
  }
  return {};
}

std::optional<int> extract_answer(std::span<const int> generated) {
  std::optional<int> last;
  for (int tok : generated) {
    if (tok == kEosToken) break;
    if (tok >= 0 && tok < kNumDigits) last = tok;
  }
  return last;
}

bool check_answer(const SynthTask& task, std::span<const int> generated) {
  const auto ans = extract_answer(generated);
  return ans && task.ground_truth.size() == 1 && *ans == task.ground_truth[0];
}

namespace {

SynthTask make_task(Rng& rng, Domain domain, std::size_t index) {
  SynthTask task;
  task.domain = domain;
  char id[32];
  std::snprintf(id, sizeof(id), "%s-%04zu", domain == Domain::Target ? "tgt" : "gen", index);
  task.prompt_id = id;

  std::size_t n_digits = 3;
  if (domain == Domain::Target) {
    task.family = TaskFamily::ModSum;
  } else {
    static constexpr TaskFamily kGeneral[] = {TaskFamily::CopyFirst, TaskFamily::Parity, TaskFamily::MaxDigit};
    task.family = kGeneral[rng.below(3)];
    n_digits = 4;
  }
  std::vector<int> digits(n_digits);
  for (int& d : digits) d = static_cast<int>(rng.below(kNumDigits));
  task.ground_truth = solve_task(task.family, digits);
  task.prompt_tokens = digits;
  task.prompt_tokens.push_back(kSepToken);
  return task;
}

}  // namespace

std::vector<SynthTask> make_task_suite(std::uint64_t seed, std::size_t n_target, std::size_t n_general) {
  std::vector<SynthTask> tasks;
  tasks.reserve(n_target + n_general);
  Rng target_rng(derive_seed(seed, hash_string("tasks/target")));
  for (std::size_t i = 0; i < n_target; ++i) tasks.push_back(make_task(target_rng, Domain::Target, i));
  Rng general_rng(derive_seed(seed, hash_string("tasks/general")));
  for (std::size_t i = 0; i < n_general; ++i) tasks.push_back(make_task(general_rng, Domain::General, i));
  return tasks;
}

}  // namespace heal
