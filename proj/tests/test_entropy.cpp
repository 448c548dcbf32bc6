// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "heal/entropy.hpp"
#include "heal/error.hpp"

using namespace heal;

TEST_CASE("token entropy of uniform and one-hot distributions") {
  CHECK(token_entropy(ProbDist({1.0, 0.0, 0.0})) == 0.0);
  CHECK(token_entropy(ProbDist(std::vector<double>(32, 1.0 / 32))) == doctest::Approx(std::log(32.0)).epsilon(1e-14));
  CHECK(token_entropy(ProbDist({0.5, 0.5})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("probabilities below the cutoff contribute nothing") {
  CHECK(entropy_of(std::vector<double>{1.0, 1e-16}) == 0.0);
  CHECK(entropy_of(std::vector<double>{1.0, 1e-14}) > 0.0);
}

TEST_CASE("ProbDist validates its input") {
  CHECK_THROWS_AS(ProbDist({}), ValidationError);
  CHECK_THROWS_AS(ProbDist({0.7, 0.4}), ValidationError);
  CHECK_THROWS_AS(ProbDist({1.2, -0.2}), ValidationError);
  CHECK_THROWS_AS(ProbDist({NAN, 1.0}), ValidationError);
  const ProbDist near({0.5 + 4e-10, 0.5});
  CHECK(near[0] + near[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("softmax with temperature") {
  const auto p = softmax_temperature(Logits({std::log(2.0), 0.0}), 1.0);
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto sharp = softmax_temperature(Logits({1.0, 0.0}), 0.5);
  CHECK(sharp[0] == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)));

  const auto big = softmax_temperature(Logits({1000.0, 999.0}), 1.0);
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));

  CHECK_THROWS_AS(softmax_temperature(Logits({0.0, 1.0}), 0.0), DomainError);
  CHECK_THROWS_AS(softmax_temperature(Logits({0.0, 1.0}), -1.0), DomainError);
  CHECK_THROWS(Logits({INFINITY, 0.0}));
}

TEST_CASE("higher temperature never lowers entropy") {
  const Logits z({2.0, -1.0, 0.5, 0.0, 3.0});
  double prev = -1.0;
  for (double t : {0.1, 0.3, 0.7, 1.0, 2.0, 10.0}) {
    const double h = token_entropy(softmax_temperature(z, t));
    CHECK(h >= prev);
    CHECK(h <= std::log(5.0) + 1e-12);
    prev = h;
  }
}

namespace {

Trajectory traj(std::vector<double> h, std::vector<double> lp = {}) {
  Trajectory t;
  t.prompt_id = "p";
  t.step_entropies = std::move(h);
  t.step_logprobs = std::move(lp);
  t.tokens.assign(t.step_entropies.size(), 0);
  return t;
}

}  // namespace

TEST_CASE("batch entropy aggregates") {
  const std::vector<Trajectory> batch{traj({1.0, 1.0, 1.0}), traj({4.0})};
  CHECK(mean_vocab_entropy(batch) == doctest::Approx(7.0 / 4.0));
  CHECK(sequence_mean_vocab_entropy(batch) == doctest::Approx(2.5));
  CHECK_THROWS_AS(mean_vocab_entropy(std::vector<Trajectory>{}), EmptyInputError);
}

TEST_CASE("sampled policy entropy uses recorded log-probs") {
  const std::vector<Trajectory> batch{traj({0.1, 0.2}, {-1.0, -3.0}), traj({0.3}, {-0.5})};
  CHECK(sampled_policy_entropy(batch) == doctest::Approx((2.0 + 0.5) / 2.0));
  const std::vector<Trajectory> missing{traj({0.1})};
  CHECK_THROWS_AS(sampled_policy_entropy(missing), ValidationError);
}
