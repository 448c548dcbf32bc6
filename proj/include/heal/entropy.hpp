// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "heal/prob_dist.hpp"
#include "heal/trajectory.hpp"

namespace heal {

/// Probabilities below this are treated as exact zeros inside entropy sums.
inline constexpr double kEntropyZeroCutoff = 1e-15;

/// Shannon entropy in nats, with 0 ln 0 = 0. Result lies in [0, ln |V|].
double token_entropy(const ProbDist& dist);

/// Same sum over a raw probability span. No validation.
double entropy_of(std::span<const double> probs);

/// softmax(z / T), max-subtracted. Throws DomainError when T <= 0.
ProbDist softmax_temperature(const Logits& logits, double temperature);

/// Writes softmax(z / T) into `out` (same length as `logits`). No validation;
/// this is the allocation-free kernel behind softmax_temperature.
void softmax_into(std::span<const double> logits, double temperature, std::span<double> out);

/// Token-weighted mean of every H_t in the batch.
/// Throws EmptyInputError on an empty batch (or one with no steps at all).
double mean_vocab_entropy(std::span<const Trajectory> batch);

/// Per-trajectory mean of H_t, then averaged over trajectories.
double sequence_mean_vocab_entropy(std::span<const Trajectory> batch);

/// -(1/|batch|) sum_x (1/|o|) sum_t log pi(o_t | .) using the recorded
/// chosen-token log-probs. Throws ValidationError if a trajectory has no
/// log-prob channel or its length disagrees with its token count.
double sampled_policy_entropy(std::span<const Trajectory> batch);

}  // namespace heal
