// SPDX-License-Identifier: Apache-2.0
#include "heal/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heal/dynamics.hpp"
#include "heal/error.hpp"

namespace heal {

RolloutGroup::RolloutGroup(std::string prompt_id, Domain domain, std::vector<Trajectory> trajectories,
                           std::string ground_truth)
    : prompt_id_(std::move(prompt_id)),
      domain_(domain),
      trajectories_(std::move(trajectories)),
      ground_truth_(std::move(ground_truth)) {
  if (trajectories_.empty()) throw ValidationError("RolloutGroup '" + prompt_id_ + "': no trajectories");
  for (const auto& t : trajectories_) {
    if (t.prompt_id != prompt_id_) {
      throw ValidationError("RolloutGroup '" + prompt_id_ + "': trajectory from prompt '" + t.prompt_id + "'");
    }
    if (t.domain != domain_) {
      throw ValidationError("RolloutGroup '" + prompt_id_ + "': mixed domains");
    }
  }
}

double accuracy(const RolloutGroup& group) {
  std::size_t hits = 0;
  for (const auto& t : group.trajectories()) {
    if (!t.correct) throw ValidationError("accuracy: trajectory " + t.id() + " has no correctness verdict");
    hits += *t.correct ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(group.size());
}

double uncertainty(double acc) {
  if (!(acc >= 0.0 && acc <= 1.0)) throw DomainError("uncertainty: accuracy must lie in [0, 1]");
  // 1 - 2|acc - 1/2| = 2 min(acc, 1 - acc). The smaller side is taken on the
  // grid of 1 - x so that u(a) and u(1 - a) round identically.
  const double low_side = acc <= 0.5 ? 1.0 - (1.0 - acc) : 1.0 - acc;
  return 2.0 * low_side;
}

double diversity(const RolloutGroup& group) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : group.trajectories()) {
    const auto& h = t.step_entropies;
    if (h.empty()) continue;
    for (std::size_t idx : top_indices(h, top_fifth_count(h.size()))) sum += h[idx];
    count += top_fifth_count(h.size());
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double composite_score(double u, double d) { return u * d; }

SelectionScore score_group(const RolloutGroup& group) {
  SelectionScore s;
  s.prompt_id = group.prompt_id();
  s.accuracy = accuracy(group);
  s.uncertainty = uncertainty(s.accuracy);
  s.diversity = diversity(group);
  s.composite = composite_score(s.uncertainty, s.diversity);
  return s;
}

std::vector<std::string> select_top_k(std::span<const SelectionScore> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].composite > scores[b].composite; });
  order.resize(std::min(k, order.size()));
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (std::size_t i : order) ids.push_back(scores[i].prompt_id);
  return ids;
}

}  // namespace heal
