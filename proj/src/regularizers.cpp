// SPDX-License-Identifier: Apache-2.0
#include "heal/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "heal/error.hpp"

namespace heal {

std::string_view to_string(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::None: return "none";
    case RegularizerKind::EntropyLoss: return "entropy_loss";
    case RegularizerKind::Mask8020: return "mask_8020";
    case RegularizerKind::ClipHigher: return "clip_higher";
    case RegularizerKind::KlCov: return "kl_cov";
  }
  return "none";
}

RegularizerKind parse_regularizer(std::string_view s) {
  for (auto k : {RegularizerKind::None, RegularizerKind::EntropyLoss, RegularizerKind::Mask8020,
                 RegularizerKind::ClipHigher, RegularizerKind::KlCov}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("unknown regularizer '" + std::string(s) +
                        "' (expected none|entropy_loss|mask_8020|clip_higher|kl_cov)");
}

double entropy_loss_term(BatchEntropies entropies, double alpha) {
  if (entropies.empty()) throw EmptyInputError("entropy_loss_term: empty batch");
  double total = 0.0;
  for (const auto& h : entropies) {
    if (h.empty()) throw EmptyInputError("entropy_loss_term: trajectory without steps");
    total += std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
  }
  return -alpha * total / static_cast<double>(entropies.size());
}

std::size_t ceil_fraction(double frac, std::size_t n) {
  const double x = frac * static_cast<double>(n);
  const double r = std::round(x);
  if (std::abs(x - r) < 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

TokenMask high_entropy_mask(BatchEntropies entropies, double gamma) {
  struct Slot {
    double h;
    std::size_t traj, step;
  };
  std::vector<Slot> slots;
  TokenMask mask(entropies.size());
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    mask[i].assign(entropies[i].size(), 0);
    for (std::size_t t = 0; t < entropies[i].size(); ++t) slots.push_back({entropies[i][t], i, t});
  }
  const std::size_t keep = std::min(slots.size(), ceil_fraction(gamma, slots.size()));
  // slots are already in (trajectory, step) order, so a stable sort keeps scan order on ties
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.h > b.h; });
  for (std::size_t k = 0; k < keep; ++k) mask[slots[k].traj][slots[k].step] = 1;
  return mask;
}

double clip_ratio_asymmetric(double rho, double eps_low, double eps_high) {
  return std::min(std::max(rho, 1.0 - eps_low), 1.0 + eps_high);
}

std::vector<std::size_t> kl_cov_select(std::span<const double> logprobs, std::span<const double> advantages,
                                       double k_frac) {
  if (logprobs.size() != advantages.size()) {
    throw ValidationError("kl_cov_select: " + std::to_string(logprobs.size()) + " log-probs vs " +
                          std::to_string(advantages.size()) + " advantages");
  }
  const std::size_t n = logprobs.size();
  if (n == 0) throw EmptyInputError("kl_cov_select: no tokens");
  const double mean_lp = std::accumulate(logprobs.begin(), logprobs.end(), 0.0) / static_cast<double>(n);
  const double mean_a = std::accumulate(advantages.begin(), advantages.end(), 0.0) / static_cast<double>(n);
  std::vector<double> score(n);
  for (std::size_t t = 0; t < n; ++t) score[t] = (logprobs[t] - mean_lp) * (advantages[t] - mean_a);

  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(k_frac * static_cast<double>(n))));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(std::min(count, n));
  std::partial_sort(idx.begin(), mid, idx.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  idx.erase(mid, idx.end());
  return idx;
}

double kl_divergence(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size()) throw ValidationError("kl_divergence: vocabulary sizes differ");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] < 1e-300) continue;
    kl += p[j] * std::log(p[j] / q[j]);
  }
  return kl > 0.0 ? kl : 0.0;
}

double kl_penalty_term(std::span<const ProbDist> old_dists, std::span<const ProbDist> new_dists,
                       std::span<const std::size_t> selected, double beta) {
  double total = 0.0;
  for (std::size_t t : selected) {
    if (t >= old_dists.size() || t >= new_dists.size()) {
      throw ValidationError("kl_penalty_term: no stored distribution for token " + std::to_string(t));
    }
    total += kl_divergence(old_dists[t], new_dists[t]);
  }
  return beta * total;
}

}  // namespace heal
