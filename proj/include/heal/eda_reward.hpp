// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heal/dynamics.hpp"
#include "heal/trajectory.hpp"

namespace heal {

/// Target- and general-domain entropy dynamics collected from one batch.
class DynamicsBuffer {
 public:
  /// Throws ValidationError if an entry carries the wrong domain tag.
  DynamicsBuffer(std::vector<EntropyDynamics> target, std::vector<EntropyDynamics> general);

  std::span<const EntropyDynamics> target() const { return target_; }
  std::span<const EntropyDynamics> general() const { return general_; }

  /// Position of `tau` in target(): the first entry with the same source id
  /// and identical values. ValidationError when absent.
  std::size_t locate_target(const EntropyDynamics& tau) const;

 private:
  std::vector<EntropyDynamics> target_;
  std::vector<EntropyDynamics> general_;
};

struct RewardRecord {
  std::string trajectory_id;
  int r_acc = 0;
  int r_eda = 0;
  int total = 0;
  std::optional<double> s_intra;
  std::optional<double> s_inter;
};

/// max over other target entries of sim(tau_i, tau_j); nullopt if there is none.
std::optional<double> intra_similarity(std::size_t target_index, const DynamicsBuffer& buffer, Similarity sim);
std::optional<double> intra_similarity(const EntropyDynamics& tau, const DynamicsBuffer& buffer, Similarity sim);

/// max over general entries of sim(tau_i, tau_k); nullopt when general is empty.
std::optional<double> inter_similarity(std::size_t target_index, const DynamicsBuffer& buffer, Similarity sim);
std::optional<double> inter_similarity(const EntropyDynamics& tau, const DynamicsBuffer& buffer, Similarity sim);

/// 1 iff s_inter > s_intra, with an absent side treated as -infinity and
/// both-absent giving 0.
int eda_decision(std::optional<double> s_intra, std::optional<double> s_inter);

int eda_reward(const EntropyDynamics& tau, const DynamicsBuffer& buffer, Similarity sim);

/// One record per trajectory in batch order. The batch is its own buffer:
/// target trajectories are scored against the other target trajectories and
/// every general trajectory; general trajectories get r_eda = 0.
/// Every trajectory needs a correctness verdict and at least one step.
std::vector<RewardRecord> batch_rewards(std::span<const Trajectory> batch, Similarity sim);

}  // namespace heal
