// SPDX-License-Identifier: Apache-2.0
#include "heal/eda_reward.hpp"

#include <algorithm>
#include <functional>

#include "heal/error.hpp"

namespace heal {

DynamicsBuffer::DynamicsBuffer(std::vector<EntropyDynamics> target, std::vector<EntropyDynamics> general)
    : target_(std::move(target)), general_(std::move(general)) {
  for (const auto& d : target_) {
    if (d.domain() != Domain::Target) throw ValidationError("DynamicsBuffer: '" + d.source_id() + "' is not target-domain");
  }
  for (const auto& d : general_) {
    if (d.domain() != Domain::General) throw ValidationError("DynamicsBuffer: '" + d.source_id() + "' is not general-domain");
  }
}

std::size_t DynamicsBuffer::locate_target(const EntropyDynamics& tau) const {
  for (std::size_t i = 0; i < target_.size(); ++i) {
    const auto& d = target_[i];
    if (d.source_id() == tau.source_id() && std::ranges::equal(d.values(), tau.values())) return i;
  }
  throw ValidationError("trajectory '" + tau.source_id() + "' is not in the target buffer");
}

namespace {


// Max of sim(i, j) over candidate indices, skipping `skip`.
std::optional<double> max_over(std::size_t count, std::size_t skip, const std::function<double(std::size_t)>& sim) {
  std::optional<double> best;
  for (std::size_t j = 0; j < count; ++j) {
    if (j == skip) continue;
    const double s = sim(j);
    if (!best || s > *best) best = s;
  }
  return best;
}

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

}  // namespace

std::optional<double> intra_similarity(std::size_t i, const DynamicsBuffer& buffer, Similarity sim) {
  const auto tgt = buffer.target();
  if (i >= tgt.size()) throw ValidationError("intra_similarity: index outside the target buffer");
  return max_over(tgt.size(), i, [&](std::size_t j) { return similarity(sim, tgt[i], tgt[j]); });
}

std::optional<double> intra_similarity(const EntropyDynamics& tau, const DynamicsBuffer& buffer, Similarity sim) {
  return intra_similarity(buffer.locate_target(tau), buffer, sim);
}

std::optional<double> inter_similarity(std::size_t i, const DynamicsBuffer& buffer, Similarity sim) {
  const auto tgt = buffer.target();
  const auto gen = buffer.general();
  if (i >= tgt.size()) throw ValidationError("inter_similarity: index outside the target buffer");
  return max_over(gen.size(), kNoSkip, [&](std::size_t k) { return similarity(sim, tgt[i], gen[k]); });
}

std::optional<double> inter_similarity(const EntropyDynamics& tau, const DynamicsBuffer& buffer, Similarity sim) {
  return inter_similarity(buffer.locate_target(tau), buffer, sim);
}

int eda_decision(std::optional<double> s_intra, std::optional<double> s_inter) {
  if (!s_inter) return 0;
  if (!s_intra) return 1;
  return *s_inter > *s_intra ? 1 : 0;
}

int eda_reward(const EntropyDynamics& tau, const DynamicsBuffer& buffer, Similarity sim) {
  const std::size_t i = buffer.locate_target(tau);
  return eda_decision(intra_similarity(i, buffer, sim), inter_similarity(i, buffer, sim));
}

std::vector<RewardRecord> batch_rewards(std::span<const Trajectory> batch, Similarity sim) {
  // All dynamics in batch order; target/general index lists into it.
  std::vector<EntropyDynamics> all;
  all.reserve(batch.size());
  std::vector<std::size_t> tgt, gen;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& t = batch[b];
    if (!t.correct) throw ValidationError("batch_rewards: trajectory " + t.id() + " has no correctness verdict");
    all.push_back(EntropyDynamics::from_trajectory(t));
    (t.domain == Domain::Target ? tgt : gen).push_back(b);
  }

  KlSimilarityCache cache(all);
  auto pair_sim = [&](std::size_t a, std::size_t b) {
    return sim == Similarity::Kl ? cache.sim(a, b) : similarity(sim, all[a], all[b]);
  };

  std::vector<RewardRecord> records(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto& rec = records[b];
    rec.trajectory_id = batch[b].id();
    rec.r_acc = *batch[b].correct ? 1 : 0;
  }
  for (std::size_t ti = 0; ti < tgt.size(); ++ti) {
    const std::size_t b = tgt[ti];
    auto& rec = records[b];
    rec.s_intra = max_over(tgt.size(), ti, [&](std::size_t tj) { return pair_sim(b, tgt[tj]); });
    rec.s_inter = max_over(gen.size(), kNoSkip, [&](std::size_t gk) { return pair_sim(b, gen[gk]); });
    rec.r_eda = eda_decision(rec.s_intra, rec.s_inter);
  }
  for (auto& rec : records) rec.total = rec.r_acc + rec.r_eda;
  return records;
}

}  // namespace heal
