// SPDX-License-Identifier: Apache-2.0
#include "heal/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heal/error.hpp"

namespace heal {

EntropyDynamics::EntropyDynamics(std::vector<double> values, std::string source_id, Domain domain)
    : values_(std::move(values)), source_id_(std::move(source_id)), domain_(domain) {
  if (values_.empty()) throw ValidationError("EntropyDynamics: empty sequence (" + source_id_ + ")");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw ValidationError("EntropyDynamics: entry " + std::to_string(i) + " of '" + source_id_ +
                            "' is negative or non-finite");
    }
  }
}

EntropyDynamics EntropyDynamics::from_trajectory(const Trajectory& traj) {
  return EntropyDynamics(traj.step_entropies, traj.id(), traj.domain);
}

EntropyDynamics resample_nearest(const EntropyDynamics& tau, std::size_t target_len) {
  if (target_len == 0) throw DomainError("resample_nearest: target length must be >= 1");
  const std::size_t len = tau.size();
  if (target_len == len) return tau;
  std::vector<double> out(target_len);
  if (target_len == 1) {
    out[0] = tau[0];
  } else {
    // round_half_up(j (L-1) / (L'-1)) in exact integer arithmetic
    const std::size_t den = target_len - 1;
    for (std::size_t j = 0; j < target_len; ++j) {
      const std::size_t num = j * (len - 1);
      out[j] = tau[(2 * num + den) / (2 * den)];
    }
  }
  return EntropyDynamics(std::move(out), tau.source_id(), tau.domain());
}

NormalizedDynamics normalize_dynamics(const EntropyDynamics& tau) {
  const auto v = tau.values();
  const double peak = *std::max_element(v.begin(), v.end());
  NormalizedDynamics out;
  out.weights.resize(v.size());
  out.log_weights.resize(v.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    out.weights[t] = std::exp(v[t] - peak);
    sum += out.weights[t];
  }
  const double log_sum = std::log(sum);
  for (std::size_t t = 0; t < v.size(); ++t) {
    out.weights[t] /= sum;
    out.log_weights[t] = (v[t] - peak) - log_sum;
  }
  return out;
}

double kl_normalized(const NormalizedDynamics& p, const NormalizedDynamics& q) {
  double kl = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p.weights[t] < 1e-300) continue;
    kl += p.weights[t] * (p.log_weights[t] - q.log_weights[t]);
  }
  return kl > 0.0 ? kl : 0.0;
}

namespace {

double neg(double kl) { return kl > 0.0 ? -kl : 0.0; }

}  // namespace

double sim_kl(const EntropyDynamics& tau_i, const EntropyDynamics& tau_j) {
  const std::size_t len = std::max(tau_i.size(), tau_j.size());
  const auto p = normalize_dynamics(tau_i.size() == len ? tau_i : resample_nearest(tau_i, len));
  const auto q = normalize_dynamics(tau_j.size() == len ? tau_j : resample_nearest(tau_j, len));
  return neg(kl_normalized(p, q));
}

std::size_t top_fifth_count(std::size_t n) { return std::max<std::size_t>(1, (n + 4) / 5); }

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  idx.resize(count);
  return idx;
}

double sim_hti(const EntropyDynamics& tau_i, const EntropyDynamics& tau_j) {
  const std::size_t len = std::max(tau_i.size(), tau_j.size());
  const auto a = resample_nearest(tau_i, len);
  const auto b = resample_nearest(tau_j, len);
  const std::size_t m = top_fifth_count(len);

  std::vector<double> masked_a(len, 0.0), masked_b(len, 0.0);
  for (std::size_t t : top_indices(a.values(), m)) masked_a[t] = a[t];
  for (std::size_t t : top_indices(b.values(), m)) masked_b[t] = b[t];

  double s = 0.0;
  for (std::size_t t = 0; t < len; ++t) s += std::min(masked_a[t], masked_b[t]);
  return s;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double pearson = 0.0;
};

LineFit fit_against_index(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) return {};
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) return {};
  const double mean_t = static_cast<double>(n - 1) / 2.0;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - mean_t;
    const double dy = y[t] - mean_y;
    sxy += dt * dy;
    sxx += dt * dt;
    syy += dy * dy;
  }
  if (syy == 0.0) return {};
  return {sxy / sxx, sxy / std::sqrt(sxx * syy)};
}

}  // namespace

double sim_pl(const EntropyDynamics& tau_i, const EntropyDynamics& tau_j) {
  const LineFit a = fit_against_index(tau_i.values());
  const LineFit b = fit_against_index(tau_j.values());
  const double s = std::abs(std::cos(std::atan(a.slope) - std::atan(b.slope)) * a.pearson * b.pearson);
  return std::min(s, 1.0);
}

std::string_view to_string(Similarity s) {
  switch (s) {
    case Similarity::Kl: return "kl";
    case Similarity::Hti: return "hti";
    case Similarity::Pl: return "pl";
  }
  return "kl";
}

Similarity parse_similarity(std::string_view s) {
  if (s == "kl") return Similarity::Kl;
  if (s == "hti") return Similarity::Hti;
  if (s == "pl") return Similarity::Pl;
  throw ValidationError("unknown similarity '" + std::string(s) + "' (expected kl|hti|pl)");
}

double similarity(Similarity kind, const EntropyDynamics& a, const EntropyDynamics& b) {
  switch (kind) {
    case Similarity::Kl: return sim_kl(a, b);
    case Similarity::Hti: return sim_hti(a, b);
    case Similarity::Pl: return sim_pl(a, b);
  }
  return sim_kl(a, b);
}

double DistanceMatrix::mean_off_diagonal() const {
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += cells[i * n + j];
  return s / static_cast<double>(n * (n - 1));
}

KlSimilarityCache::KlSimilarityCache(std::span<const EntropyDynamics> dynamics)
    : dynamics_(dynamics), forms_(dynamics.size()) {
  for (const auto& d : dynamics_) max_len_ = std::max(max_len_, d.size());
}

const NormalizedDynamics& KlSimilarityCache::normalized(std::size_t i, std::size_t len) {
  auto& slots = forms_[i];
  const std::size_t base = dynamics_[i].size();
  if (slots.empty()) slots.resize(max_len_ - base + 1);
  auto& slot = slots[len - base];
  if (slot.weights.empty()) {
    slot = normalize_dynamics(len == base ? dynamics_[i] : resample_nearest(dynamics_[i], len));
  }
  return slot;
}

double KlSimilarityCache::sim(std::size_t i, std::size_t j) {
  const std::size_t len = std::max(dynamics_[i].size(), dynamics_[j].size());
  const auto& p = normalized(i, len);
  const auto& q = normalized(j, len);
  return neg(kl_normalized(p, q));
}

DistanceMatrix pairwise_distance_matrix(std::span<const EntropyDynamics> dynamics) {
  if (dynamics.empty()) throw EmptyInputError("pairwise_distance_matrix: empty list");
  const std::size_t n = dynamics.size();
  DistanceMatrix m{n, std::vector<double>(n * n, 0.0)};
  KlSimilarityCache cache(dynamics);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        const double s = cache.sim(i, j);
        m.cells[i * n + j] = s < 0.0 ? -s : 0.0;
      }
  return m;
}

}  // namespace heal
