// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heal/regularizers.hpp"
#include "heal/trajectory.hpp"

namespace heal {

/// Tabular autoregressive policy: one logit row per window of the last
/// `context_window` tokens. Row index is the base-|V| number formed by the
/// window, oldest token most significant. A fresh policy is all zeros.
class ToyPolicy {
 public:
  static constexpr int kMaxVocab = 32;
  static constexpr int kMaxWindow = 3;

  ToyPolicy(int vocab_size, int context_window);

  int vocab_size() const { return vocab_size_; }
  int context_window() const { return context_window_; }
  std::size_t num_contexts() const { return num_contexts_; }
  std::size_t num_params() const { return logits_.size(); }

  std::span<const double> row(std::size_t ctx) const;
  std::span<double> row(std::size_t ctx);
  std::span<const double> params() const { return logits_; }
  std::span<double> params() { return logits_; }

  /// Row for the last context_window tokens of `history`. ValidationError if
  /// the history is shorter than the window or holds an out-of-vocabulary token.
  std::size_t context_row(std::span<const int> history) const;

  friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

 private:
  int vocab_size_;
  int context_window_;
  std::size_t num_contexts_;
  std::vector<double> logits_;
};

struct UpdateSettings {
  double temperature = 0.7;
  RegularizerKind regularizer = RegularizerKind::None;
  RegularizerConfig reg;
  /// Symmetric PPO clip used by every baseline except clip_higher and kl_cov.
  double clip_eps = 0.2;
  /// mask_8020 only: add beta * KL(pi || pi_ref) averaged over tokens.
  bool reference_kl = false;
};

/// Rollouts plus one advantage per trajectory. Each trajectory must carry
/// context_rows, tokens, step_logprobs and step_entropies recorded at
/// sampling time; kl_cov additionally needs step_dists.
struct UpdateBatch {
  std::span<const Trajectory> trajectories;
  std::span<const double> advantages;
  const ToyPolicy* reference = nullptr;  // required when reference_kl is set
};

/// Loss minimized by one update:
///   -(1/Z) sum_{i,t} m_{i,t} min(rho A_i, clip(rho) A_i)  + regularizer terms
/// with rho = pi_theta / pi_rollout at temperature T. Z is the trajectory
/// count, or the selected-token count N_HE under mask_8020.
double surrogate_loss(const ToyPolicy& policy, const UpdateBatch& batch, const UpdateSettings& settings);

/// Exact gradient of surrogate_loss with respect to every logit.
std::vector<double> surrogate_gradient(const ToyPolicy& policy, const UpdateBatch& batch,
                                       const UpdateSettings& settings);

/// entropy_loss_term evaluated on the policy's current distributions at the
/// batch's visited contexts, and its gradient.
double entropy_bonus_loss(const ToyPolicy& policy, std::span<const Trajectory> trajectories, double alpha,
                          double temperature);
std::vector<double> entropy_bonus_gradient(const ToyPolicy& policy, std::span<const Trajectory> trajectories,
                                           double alpha, double temperature);

/// theta - lr * grad, repeated `epochs` times against the same rollout
/// log-probs. Throws DivergenceError if a gradient or parameter goes non-finite.
ToyPolicy policy_gradient_step(const ToyPolicy& policy, const UpdateBatch& batch, double learning_rate,
                               const UpdateSettings& settings, std::size_t epochs = 1);

}  // namespace heal
