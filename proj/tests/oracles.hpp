// SPDX-License-Identifier: Apache-2.0
// Slow reference implementations used only by the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "heal/policy.hpp"
#include "heal/trajectory.hpp"

namespace oracle {

inline std::vector<double> stretch(const std::vector<double>& v, std::size_t len) {
  if (v.size() == len) return v;
  std::vector<double> out(len);
  for (std::size_t j = 0; j < len; ++j) {
    if (len == 1) {
      out[j] = v[0];
      continue;
    }
    const double pos = static_cast<double>(j) * static_cast<double>(v.size() - 1) / static_cast<double>(len - 1);
    out[j] = v[static_cast<std::size_t>(std::floor(pos + 0.5))];
  }
  return out;
}

struct Soft {
  std::vector<double> p, logp;
};

inline Soft softmax(const std::vector<double>& v) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : v) peak = std::max(peak, x);
  Soft s{std::vector<double>(v.size()), std::vector<double>(v.size())};
  double z = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    s.p[t] = std::exp(v[t] - peak);
    z += s.p[t];
  }
  const double lz = std::log(z);
  for (std::size_t t = 0; t < v.size(); ++t) {
    s.p[t] /= z;
    s.logp[t] = (v[t] - peak) - lz;
  }
  return s;
}

/// -KL(softmax(a') || softmax(b')) computed from scratch on every call.
inline double sim_kl(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t len = std::max(a.size(), b.size());
  const Soft p = softmax(stretch(a, len));
  const Soft q = softmax(stretch(b, len));
  double kl = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    if (p.p[t] < 1e-300) continue;
    kl += p.p[t] * (p.logp[t] - q.logp[t]);
  }
  return kl > 0.0 ? -kl : 0.0;
}

struct Reward {
  int r_eda = 0;
  std::optional<double> s_intra, s_inter;
};

/// Pairwise double loop over the whole batch, no caching.
inline std::vector<Reward> eda_rewards(const std::vector<heal::Trajectory>& batch) {
  std::vector<Reward> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].domain != heal::Domain::Target) continue;
    std::optional<double> intra, inter;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i) continue;
      const double s = sim_kl(batch[i].step_entropies, batch[j].step_entropies);
      auto& slot = batch[j].domain == heal::Domain::Target ? intra : inter;
      if (!slot || s > *slot) slot = s;
    }
    const double lo = intra.value_or(-std::numeric_limits<double>::infinity());
    const double hi = inter.value_or(-std::numeric_limits<double>::infinity());
    out[i] = {hi > lo ? 1 : 0, intra, inter};
  }
  return out;
}

/// Probability that a uniformly random k-subset of n items with c correct
/// holds at least one correct item, by enumerating every subset bitmask.
inline double pass_at_k_enumerate(unsigned n, unsigned c, unsigned k) {
  std::uint64_t hit = 0, total = 0;
  const std::uint32_t correct_mask = (c == 0) ? 0u : ((1u << c) - 1u);
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    if (static_cast<unsigned>(__builtin_popcount(m)) != k) continue;
    ++total;
    if ((m & correct_mask) != 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

/// Central difference of f at every coordinate of x.
inline std::vector<double> central_difference(std::vector<double> x, const std::function<double(const std::vector<double>&)>& f,
                                              double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(1e-8, max_i |b_i|)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

/// Random trajectories over a policy's rows, with channels recorded from
/// `behaviour` at the given temperature.
inline std::vector<heal::Trajectory> sample_trajectories(const heal::ToyPolicy& behaviour, std::size_t count,
                                                         std::size_t max_len, double temperature, std::mt19937_64& gen) {
  std::vector<heal::Trajectory> out;
  const auto v = static_cast<std::size_t>(behaviour.vocab_size());
  std::uniform_int_distribution<std::size_t> row_pick(0, behaviour.num_contexts() - 1);
  std::uniform_int_distribution<std::size_t> len_pick(1, max_len);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    heal::Trajectory t;
    t.prompt_id = "p" + std::to_string(i / 2);
    t.index = static_cast<int>(i % 2);
    const std::size_t len = len_pick(gen);
    for (std::size_t s = 0; s < len; ++s) {
      const std::size_t row = row_pick(gen);
      std::vector<double> z(behaviour.row(row).begin(), behaviour.row(row).end());
      for (double& x : z) x /= temperature;
      const Soft d = softmax(z);
      double r = u(gen), acc = 0.0;
      std::size_t tok = v - 1;
      for (std::size_t k = 0; k < v; ++k) {
        acc += d.p[k];
        if (r < acc) {
          tok = k;
          break;
        }
      }
      double h = 0.0;
      for (std::size_t k = 0; k < v; ++k) h -= d.p[k] * d.logp[k];
      t.context_rows.push_back(row);
      t.tokens.push_back(static_cast<int>(tok));
      t.step_logprobs.push_back(d.logp[tok]);
      t.step_entropies.push_back(h);
      t.step_dists.emplace_back(d.p);
    }
    t.correct = u(gen) < 0.5;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace oracle
