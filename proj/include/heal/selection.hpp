// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "heal/trajectory.hpp"

namespace heal {

/// Rollouts per prompt used throughout training and selection.
inline constexpr int kDefaultRolloutsPerPrompt = 8;
/// Default number of general-domain prompts kept by selection.
inline constexpr std::size_t kDefaultSelectK = 384;

/// The N trajectories sampled for one prompt. All share prompt_id and domain.
class RolloutGroup {
 public:
  RolloutGroup(std::string prompt_id, Domain domain, std::vector<Trajectory> trajectories,
               std::string ground_truth = {});

  const std::string& prompt_id() const { return prompt_id_; }
  Domain domain() const { return domain_; }
  std::span<const Trajectory> trajectories() const { return trajectories_; }
  std::size_t size() const { return trajectories_.size(); }
  const std::string& ground_truth() const { return ground_truth_; }

 private:
  std::string prompt_id_;
  Domain domain_;
  std::vector<Trajectory> trajectories_;
  std::string ground_truth_;
};

struct SelectionScore {
  std::string prompt_id;
  double accuracy = 0.0;
  double uncertainty = 0.0;
  double diversity = 0.0;
  double composite = 0.0;
};

/// Fraction of trajectories marked correct. Missing verdicts are a ValidationError.
double accuracy(const RolloutGroup& group);

/// 1 - 2 |acc - 1/2|. DomainError outside [0, 1].
double uncertainty(double acc);

/// Pools the top-ceil(20%) highest-entropy steps of every trajectory and
/// returns the pooled mean.
double diversity(const RolloutGroup& group);

double composite_score(double u, double d);

SelectionScore score_group(const RolloutGroup& group);

/// Prompt ids of the K best composite scores in descending order. Equal
/// scores keep their input order.
std::vector<std::string> select_top_k(std::span<const SelectionScore> scores, std::size_t k);

}  // namespace heal
