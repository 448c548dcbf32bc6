// SPDX-License-Identifier: Apache-2.0
#include "heal/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "heal/error.hpp"

namespace heal {

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("ProbDist: empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const double p = probs_[i];
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("ProbDist: entry " + std::to_string(i) + " is negative or non-finite");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "ProbDist: probabilities sum to %.17g, not 1", sum);
    throw ValidationError(buf);
  }
  if (sum != 1.0) {
    for (double& p : probs_) p /= sum;
  }
}

Logits::Logits(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("Logits: empty vector");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("Logits: entry " + std::to_string(i) + " is not finite");
    }
  }
}

std::string_view to_string(Domain d) { return d == Domain::Target ? "target" : "general"; }

Domain parse_domain(std::string_view s) {
  if (s == "target") return Domain::Target;
  if (s == "general") return Domain::General;
  throw ValidationError("unknown domain '" + std::string(s) + "' (expected target|general)");
}

std::string Trajectory::id() const { return prompt_id + "/" + std::to_string(index); }

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p < kEntropyZeroCutoff) continue;
    h -= p * std::log(p);
  }
  return h > 0.0 ? h : 0.0;
}

double token_entropy(const ProbDist& dist) { return entropy_of(dist.probs()); }

void softmax_into(std::span<const double> logits, double temperature, std::span<double> out) {
  const double inv_t = 1.0 / temperature;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp((logits[j] - peak) * inv_t);
    sum += out[j];
  }
  for (double& p : out) p /= sum;
}

ProbDist softmax_temperature(const Logits& logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("softmax_temperature: temperature must be positive and finite");
  }
  std::vector<double> p(logits.size());
  softmax_into(logits.values(), temperature, p);
  return ProbDist(std::move(p));
}

double mean_vocab_entropy(std::span<const Trajectory> batch) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& traj : batch) {
    for (double h : traj.step_entropies) sum += h;
    count += traj.step_entropies.size();
  }
  if (count == 0) throw EmptyInputError("mean_vocab_entropy: batch has no steps");
  return sum / static_cast<double>(count);
}

double sequence_mean_vocab_entropy(std::span<const Trajectory> batch) {
  if (batch.empty()) throw EmptyInputError("sequence_mean_vocab_entropy: empty batch");
  double total = 0.0;
  for (const auto& traj : batch) {
    if (traj.step_entropies.empty()) {
      throw ValidationError("sequence_mean_vocab_entropy: trajectory " + traj.id() + " has no steps");
    }
    total += std::accumulate(traj.step_entropies.begin(), traj.step_entropies.end(), 0.0) /
             static_cast<double>(traj.step_entropies.size());
  }
  return total / static_cast<double>(batch.size());
}

double sampled_policy_entropy(std::span<const Trajectory> batch) {
  if (batch.empty()) throw EmptyInputError("sampled_policy_entropy: empty batch");
  double total = 0.0;
  for (const auto& traj : batch) {
    if (traj.step_logprobs.empty()) {
      throw ValidationError("sampled_policy_entropy: trajectory " + traj.id() + " has no log-prob channel");
    }
    if (!traj.tokens.empty() && traj.tokens.size() != traj.step_logprobs.size()) {
      throw ValidationError("sampled_policy_entropy: trajectory " + traj.id() +
                            " has mismatched token and log-prob counts");
    }
    double s = 0.0;
    for (double lp : traj.step_logprobs) s += lp;
    total += -s / static_cast<double>(traj.step_logprobs.size());
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace heal
