// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "heal/prob_dist.hpp"

namespace heal {

/// Constants of the four entropy-regularization baselines. Defaults are the
/// values published with each method.
struct RegularizerConfig {
  double alpha = 0.001;    // entropy-loss coefficient
  double gamma = 0.20;     // 80/20: fraction of high-entropy tokens updated
  double eps_low = 0.20;   // clip-higher lower threshold
  double eps_high = 0.28;  // clip-higher upper threshold
  double k_frac = 0.0002;  // KL-Cov: fraction of high-covariance tokens
  double beta = 1.0;       // KL penalty weight
};

enum class RegularizerKind { None, EntropyLoss, Mask8020, ClipHigher, KlCov };

std::string_view to_string(RegularizerKind k);
/// none | entropy_loss | mask_8020 | clip_higher | kl_cov
RegularizerKind parse_regularizer(std::string_view s);

/// Per-trajectory token entropies H_t^i, one inner vector per trajectory.
using BatchEntropies = std::span<const std::vector<double>>;

/// -(alpha / G) sum_i mean_t H_t^i. EmptyInputError for G == 0 or an empty trajectory.
double entropy_loss_term(BatchEntropies entropies, double alpha);

/// Per-token 0/1 mask shaped like the input.
using TokenMask = std::vector<std::vector<std::uint8_t>>;

/// Selects the ceil(gamma * N_T) highest-entropy tokens of the whole batch;
/// ties at the threshold go to the earlier (trajectory, step).
TokenMask high_entropy_mask(BatchEntropies entropies, double gamma);

/// ceil(frac * n), snapping products within 1e-9 of an integer to it.
std::size_t ceil_fraction(double frac, std::size_t n);

double clip_ratio_asymmetric(double rho, double eps_low, double eps_high);

/// Top max(1, round(k_frac * N_T)) tokens by centered covariance score
/// (lp_t - mean lp)(A_t - mean A), ties by index, returned in rank order.
/// ValidationError on length mismatch, EmptyInputError on empty input.
std::vector<std::size_t> kl_cov_select(std::span<const double> logprobs, std::span<const double> advantages,
                                       double k_frac);

/// KL(p || q) over full vocabularies. ValidationError on size mismatch.
double kl_divergence(const ProbDist& p, const ProbDist& q);

/// beta * sum over selected t of KL(old_t || new_t).
double kl_penalty_term(std::span<const ProbDist> old_dists, std::span<const ProbDist> new_dists,
                       std::span<const std::size_t> selected, double beta);

}  // namespace heal
