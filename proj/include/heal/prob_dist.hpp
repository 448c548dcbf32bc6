// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace heal {

/// Tolerance on |sum(p) - 1| accepted at construction. Inputs inside the band
/// are renormalized, inputs outside it are rejected.
inline constexpr double kProbSumTolerance = 1e-9;

/// Probability vector over a finite vocabulary.
class ProbDist {
 public:
  /// Throws ValidationError on negative/non-finite entries, an empty vector,
  /// or a sum further than kProbSumTolerance from 1 (the message names the sum).
  explicit ProbDist(std::vector<double> probs);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  friend bool operator==(const ProbDist&, const ProbDist&) = default;

 private:
  std::vector<double> probs_;
};

/// Pre-softmax scores. Entries must be finite.
class Logits {
 public:
  explicit Logits(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

}  // namespace heal
