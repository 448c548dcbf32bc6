// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heal/trajectory.hpp"

namespace heal {

/// Per-step entropy sequence tau = (H_1, ..., H_|y|) of one trajectory.
/// Invariants: length >= 1, every entry finite and >= 0.
class EntropyDynamics {
 public:
  explicit EntropyDynamics(std::vector<double> values, std::string source_id = {},
                           Domain domain = Domain::Target);

  static EntropyDynamics from_trajectory(const Trajectory& traj);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& source_id() const { return source_id_; }
  Domain domain() const { return domain_; }

 private:
  std::vector<double> values_;
  std::string source_id_;
  Domain domain_;
};

/// Softmax of an entropy sequence. Weights are strictly positive and sum to 1;
/// log_weights holds ln(weight) computed directly from the logits.
struct NormalizedDynamics {
  std::vector<double> weights;
  std::vector<double> log_weights;

  std::size_t size() const { return weights.size(); }
};

/// Nearest-neighbour resampling with endpoint-anchored index
/// idx(j) = round_half_up(j (L-1) / (target_len-1)). Requesting the current
/// length returns an exact copy. Throws DomainError when target_len == 0.
EntropyDynamics resample_nearest(const EntropyDynamics& tau, std::size_t target_len);

/// Temperature-1 softmax over the sequence.
NormalizedDynamics normalize_dynamics(const EntropyDynamics& tau);

/// KL(p || q) over two equal-length normalized sequences, clamped at 0.
double kl_normalized(const NormalizedDynamics& p, const NormalizedDynamics& q);

/// -KL(softmax(tau_i') || softmax(tau_j')) after stretching the shorter input
/// to the longer length. Always <= 0, and exactly 0 for identical inputs.
double sim_kl(const EntropyDynamics& tau_i, const EntropyDynamics& tau_j);

/// Overlap of the top-20% high-entropy steps after resampling both sequences
/// to the longer length. Symmetric and >= 0.
double sim_hti(const EntropyDynamics& tau_i, const EntropyDynamics& tau_j);

/// |cos(atan k_i - atan k_j) * r_i * r_j| from per-sequence least-squares
/// lines against the step index. No resampling. A constant or length-1
/// sequence has r = 0.
double sim_pl(const EntropyDynamics& tau_i, const EntropyDynamics& tau_j);

enum class Similarity { Kl, Hti, Pl };

std::string_view to_string(Similarity s);
/// Accepts "kl", "hti" or "pl".
Similarity parse_similarity(std::string_view s);
double similarity(Similarity kind, const EntropyDynamics& a, const EntropyDynamics& b);

/// ceil(n / 5) with a floor of 1: the size of a "top 20%" step set.
std::size_t top_fifth_count(std::size_t n);

/// Indices of the `count` largest values, largest first; ties go to the lower index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count);

/// Row-major square matrix.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> cells;

  double operator()(std::size_t i, std::size_t j) const { return cells[i * n + j]; }
  /// Mean over i != j; 0 for n < 2.
  double mean_off_diagonal() const;
};

/// M[i][j] = -sim_kl(tau_i, tau_j); zero diagonal. Throws EmptyInputError on
/// an empty list.
DistanceMatrix pairwise_distance_matrix(std::span<const EntropyDynamics> dynamics);

/// Memoizes normalize_dynamics(resample_nearest(tau, L)) per (sequence, L) so
/// that many KL similarities over one batch reuse the softmax work. Results
/// are bit-identical to sim_kl.
class KlSimilarityCache {
 public:
  explicit KlSimilarityCache(std::span<const EntropyDynamics> dynamics);

  double sim(std::size_t i, std::size_t j);
  std::size_t size() const { return dynamics_.size(); }

 private:
  const NormalizedDynamics& normalized(std::size_t i, std::size_t len);

  std::span<const EntropyDynamics> dynamics_;
  std::size_t max_len_ = 0;
  // forms_[i][len - size(i)] for len in [size(i), max_len_]
  std::vector<std::vector<NormalizedDynamics>> forms_;
};

}  // namespace heal
