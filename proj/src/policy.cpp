// SPDX-License-Identifier: Apache-2.0
#include "heal/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heal/error.hpp"

namespace heal {

ToyPolicy::ToyPolicy(int vocab_size, int context_window)
    : vocab_size_(vocab_size), context_window_(context_window), num_contexts_(1) {
  if (vocab_size < 2 || vocab_size > kMaxVocab) throw ValidationError("ToyPolicy: vocab_size must be in [2, 32]");
  if (context_window < 1 || context_window > kMaxWindow) {
    throw ValidationError("ToyPolicy: context_window must be in [1, 3]");
  }
  for (int i = 0; i < context_window; ++i) num_contexts_ *= static_cast<std::size_t>(vocab_size);
  logits_.assign(num_contexts_ * static_cast<std::size_t>(vocab_size), 0.0);
}

std::span<const double> ToyPolicy::row(std::size_t ctx) const {
  return std::span<const double>(logits_).subspan(ctx * static_cast<std::size_t>(vocab_size_),
                                                  static_cast<std::size_t>(vocab_size_));
}

std::span<double> ToyPolicy::row(std::size_t ctx) {
  return std::span<double>(logits_).subspan(ctx * static_cast<std::size_t>(vocab_size_),
                                            static_cast<std::size_t>(vocab_size_));
}

std::size_t ToyPolicy::context_row(std::span<const int> history) const {
  const auto w = static_cast<std::size_t>(context_window_);
  if (history.size() < w) throw ValidationError("ToyPolicy: history shorter than the context window");
  std::size_t idx = 0;
  for (int tok : history.subspan(history.size() - w)) {
    if (tok < 0 || tok >= vocab_size_) throw ValidationError("ToyPolicy: token " + std::to_string(tok) + " out of vocabulary");
    idx = idx * static_cast<std::size_t>(vocab_size_) + static_cast<std::size_t>(tok);
  }
  return idx;
}

namespace {

// log-softmax of z / T, returned together with the probabilities.
struct RowDist {
  std::vector<double> p;
  std::vector<double> logp;
};

RowDist row_dist(std::span<const double> z, double temperature) {
  const double peak = *std::max_element(z.begin(), z.end());
  RowDist d{std::vector<double>(z.size()), std::vector<double>(z.size())};
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    d.logp[k] = (z[k] - peak) / temperature;
    sum += std::exp(d.logp[k]);
  }
  const double log_sum = std::log(sum);
  for (std::size_t k = 0; k < z.size(); ++k) {
    d.logp[k] -= log_sum;
    d.p[k] = std::exp(d.logp[k]);
  }
  return d;
}

double row_entropy(const RowDist& d) {
  double h = 0.0;
  for (std::size_t k = 0; k < d.p.size(); ++k) h -= d.p[k] * d.logp[k];
  return h;
}

struct TokenTerm {
  std::size_t traj;
  std::size_t step;
  std::size_t row;
  int token;
  double old_logprob;
  double advantage;
  double weight;  // 1/Z for updated tokens, 0 for masked-out ones
  bool kl_selected;
};

struct Plan {
  std::vector<TokenTerm> tokens;
  std::size_t num_trajectories = 0;
  std::size_t num_tokens = 0;
};

void check_channels(const Trajectory& t, const ToyPolicy& policy, bool need_dists) {
  const std::size_t n = t.tokens.size();
  if (n == 0 || t.context_rows.size() != n || t.step_logprobs.size() != n || t.step_entropies.size() != n) {
    throw ValidationError("policy update: trajectory " + t.id() + " lacks per-step rows, log-probs or entropies");
  }
  if (need_dists && t.step_dists.size() != n) {
    throw ValidationError("policy update: trajectory " + t.id() + " has no stored step distributions");
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (t.context_rows[s] >= policy.num_contexts() || t.tokens[s] < 0 || t.tokens[s] >= policy.vocab_size()) {
      throw ValidationError("policy update: trajectory " + t.id() + " references a row or token outside the policy");
    }
  }
}

Plan make_plan(const ToyPolicy& policy, const UpdateBatch& batch, const UpdateSettings& settings) {
  const auto trajs = batch.trajectories;
  if (trajs.size() != batch.advantages.size()) {
    throw ValidationError("policy update: " + std::to_string(trajs.size()) + " trajectories vs " +
                          std::to_string(batch.advantages.size()) + " advantages");
  }
  if (trajs.empty()) throw EmptyInputError("policy update: empty batch");
  const bool kl_cov = settings.regularizer == RegularizerKind::KlCov;
  for (const auto& t : trajs) check_channels(t, policy, kl_cov);
  if (settings.reference_kl && settings.regularizer == RegularizerKind::Mask8020) {
    if (batch.reference == nullptr || batch.reference->num_params() != policy.num_params()) {
      throw ValidationError("policy update: reference KL requested without a matching reference policy");
    }
  }

  Plan plan;
  plan.num_trajectories = trajs.size();

  TokenMask mask;
  double z = static_cast<double>(trajs.size());
  if (settings.regularizer == RegularizerKind::Mask8020) {
    std::vector<std::vector<double>> ent;
    ent.reserve(trajs.size());
    for (const auto& t : trajs) ent.push_back(t.step_entropies);
    mask = high_entropy_mask(ent, settings.reg.gamma);
    std::size_t n_he = 0;
    for (const auto& m : mask) n_he += static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
    z = static_cast<double>(n_he);
  }

  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& t = trajs[i];
    for (std::size_t s = 0; s < t.tokens.size(); ++s) {
      const bool on = mask.empty() || mask[i][s] != 0;
      plan.tokens.push_back({i, s, t.context_rows[s], t.tokens[s], t.step_logprobs[s], batch.advantages[i],
                             on ? 1.0 / z : 0.0, false});
    }
  }
  plan.num_tokens = plan.tokens.size();

  if (kl_cov) {
    std::vector<double> lp, adv;
    lp.reserve(plan.num_tokens);
    adv.reserve(plan.num_tokens);
    for (const auto& tok : plan.tokens) {
      lp.push_back(tok.old_logprob);
      adv.push_back(tok.advantage);
    }
    for (std::size_t k : kl_cov_select(lp, adv, settings.reg.k_frac)) plan.tokens[k].kl_selected = true;
  }
  return plan;
}

std::pair<double, double> clip_band(const UpdateSettings& s) {
  if (s.regularizer == RegularizerKind::ClipHigher) return {1.0 - s.reg.eps_low, 1.0 + s.reg.eps_high};
  return {1.0 - s.clip_eps, 1.0 + s.clip_eps};
}

// Old distribution at a planned token, looked up through its trajectory.
const ProbDist& old_dist(const UpdateBatch& batch, const Plan& plan, std::size_t k) {
  const auto& tok = plan.tokens[k];
  return batch.trajectories[tok.traj].step_dists[tok.step];
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DivergenceError(std::string("policy update: non-finite ") + what);
  }
}

}  // namespace

double entropy_bonus_loss(const ToyPolicy& policy, std::span<const Trajectory> trajectories, double alpha,
                          double temperature) {
  std::vector<std::vector<double>> ent;
  ent.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    std::vector<double> h;
    h.reserve(t.context_rows.size());
    for (std::size_t row : t.context_rows) h.push_back(row_entropy(row_dist(policy.row(row), temperature)));
    ent.push_back(std::move(h));
  }
  return entropy_loss_term(ent, alpha);
}

std::vector<double> entropy_bonus_gradient(const ToyPolicy& policy, std::span<const Trajectory> trajectories,
                                           double alpha, double temperature) {
  if (trajectories.empty()) throw EmptyInputError("entropy_bonus_gradient: empty batch");
  std::vector<double> grad(policy.num_params(), 0.0);
  const auto v = static_cast<std::size_t>(policy.vocab_size());
  const double g = static_cast<double>(trajectories.size());
  for (const auto& t : trajectories) {
    if (t.context_rows.empty()) throw EmptyInputError("entropy_bonus_gradient: trajectory without steps");
    const double scale = -alpha / (g * static_cast<double>(t.context_rows.size()));
    for (std::size_t row : t.context_rows) {
      const RowDist d = row_dist(policy.row(row), temperature);
      const double h = row_entropy(d);
      // dH/dz_k = -(1/T) p_k (log p_k + H)
      for (std::size_t k = 0; k < v; ++k) {
        grad[row * v + k] += scale * (-(d.p[k] * (d.logp[k] + h)) / temperature);
      }
    }
  }
  return grad;
}

double surrogate_loss(const ToyPolicy& policy, const UpdateBatch& batch, const UpdateSettings& settings) {
  const Plan plan = make_plan(policy, batch, settings);
  const double temp = settings.temperature;
  const auto [lo, hi] = clip_band(settings);
  const bool kl_cov = settings.regularizer == RegularizerKind::KlCov;

  double loss = 0.0;
  for (std::size_t k = 0; k < plan.tokens.size(); ++k) {
    const auto& tok = plan.tokens[k];
    const RowDist d = row_dist(policy.row(tok.row), temp);
    const double rho = std::exp(d.logp[static_cast<std::size_t>(tok.token)] - tok.old_logprob);
    const double obj =
        kl_cov ? rho * tok.advantage : std::min(rho * tok.advantage, std::clamp(rho, lo, hi) * tok.advantage);
    loss -= tok.weight * obj;
    if (tok.kl_selected) {
      loss += settings.reg.beta * kl_divergence(old_dist(batch, plan, k), ProbDist(d.p)) /
              static_cast<double>(plan.num_trajectories);
    }
    if (settings.reference_kl && settings.regularizer == RegularizerKind::Mask8020) {
      const RowDist r = row_dist(batch.reference->row(tok.row), temp);
      double kl = 0.0;
      for (std::size_t j = 0; j < d.p.size(); ++j) kl += d.p[j] * (d.logp[j] - r.logp[j]);
      loss += settings.reg.beta * kl / static_cast<double>(plan.num_tokens);
    }
  }
  if (settings.regularizer == RegularizerKind::EntropyLoss) {
    loss += entropy_bonus_loss(policy, batch.trajectories, settings.reg.alpha, temp);
  }
  return loss;
}

std::vector<double> surrogate_gradient(const ToyPolicy& policy, const UpdateBatch& batch,
                                       const UpdateSettings& settings) {
  const Plan plan = make_plan(policy, batch, settings);
  const double temp = settings.temperature;
  const auto [lo, hi] = clip_band(settings);
  const bool kl_cov = settings.regularizer == RegularizerKind::KlCov;
  const auto v = static_cast<std::size_t>(policy.vocab_size());

  std::vector<double> grad(policy.num_params(), 0.0);
  for (std::size_t k = 0; k < plan.tokens.size(); ++k) {
    const auto& tok = plan.tokens[k];
    const RowDist d = row_dist(policy.row(tok.row), temp);
    const auto a = static_cast<std::size_t>(tok.token);
    const double rho = std::exp(d.logp[a] - tok.old_logprob);
    double* g = grad.data() + tok.row * v;

    // The clipped branch is constant in theta; only the unclipped branch has a gradient.
    const bool live = kl_cov || rho * tok.advantage <= std::clamp(rho, lo, hi) * tok.advantage;
    if (live && tok.weight != 0.0) {
      // d(rho)/dz_k = rho (1/T)(1[k=a] - p_k)
      const double c = -tok.weight * tok.advantage * rho / temp;
      for (std::size_t j = 0; j < v; ++j) g[j] += c * ((j == a ? 1.0 : 0.0) - d.p[j]);
    }
    if (tok.kl_selected) {
      // d KL(old || p) / dz_k = (1/T)(p_k - old_k)
      const ProbDist& old = old_dist(batch, plan, k);
      const double c = settings.reg.beta / (static_cast<double>(plan.num_trajectories) * temp);
      for (std::size_t j = 0; j < v; ++j) g[j] += c * (d.p[j] - old[j]);
    }
    if (settings.reference_kl && settings.regularizer == RegularizerKind::Mask8020) {
      // d KL(p || r) / dz_k = (1/T) p_k (log p_k - log r_k - KL)
      const RowDist r = row_dist(batch.reference->row(tok.row), temp);
      double kl = 0.0;
      for (std::size_t j = 0; j < v; ++j) kl += d.p[j] * (d.logp[j] - r.logp[j]);
      const double c = settings.reg.beta / (static_cast<double>(plan.num_tokens) * temp);
      for (std::size_t j = 0; j < v; ++j) g[j] += c * d.p[j] * (d.logp[j] - r.logp[j] - kl);
    }
  }
  if (settings.regularizer == RegularizerKind::EntropyLoss) {
    const auto eg = entropy_bonus_gradient(policy, batch.trajectories, settings.reg.alpha, temp);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += eg[i];
  }
  return grad;
}

ToyPolicy policy_gradient_step(const ToyPolicy& policy, const UpdateBatch& batch, double learning_rate,
                               const UpdateSettings& settings, std::size_t epochs) {
  for (double a : batch.advantages) {
    if (!std::isfinite(a)) throw DivergenceError("policy update: non-finite advantage");
  }
  ToyPolicy next = policy;
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto grad = surrogate_gradient(next, batch, settings);
    check_finite(grad, "gradient");
    auto params = next.params();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
    check_finite(params, "parameter");
  }
  return next;
}

}  // namespace heal
