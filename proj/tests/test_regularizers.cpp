// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "heal/error.hpp"
#include "heal/regularizers.hpp"

using namespace heal;

TEST_CASE("published defaults") {
  const RegularizerConfig c;
  CHECK(c.alpha == 0.001);
  CHECK(c.gamma == 0.2);
  CHECK(c.eps_low == 0.2);
  CHECK(c.eps_high == 0.28);
  CHECK(c.k_frac == 0.0002);
  CHECK(c.beta == 1.0);
}

TEST_CASE("regularizer names round-trip") {
  for (auto k : {RegularizerKind::None, RegularizerKind::EntropyLoss, RegularizerKind::Mask8020,
                 RegularizerKind::ClipHigher, RegularizerKind::KlCov}) {
    CHECK(parse_regularizer(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_regularizer("dropout"), ValidationError);
}

TEST_CASE("entropy loss term") {
  const std::vector<std::vector<double>> zero{{0.0, 0.0}};
  CHECK(entropy_loss_term(zero, 0.001) == 0.0);
  const std::vector<std::vector<double>> one{{1.0, 3.0}};
  CHECK(entropy_loss_term(one, 0.001) == doctest::Approx(-0.002));

  std::mt19937_64 gen(8);
  std::vector<std::vector<double>> batch(7);
  for (auto& t : batch) {
    t.resize(1 + gen() % 9);
    for (auto& h : t) h = std::uniform_real_distribution<double>(0, 2)(gen);
  }
  double sum = 0.0;
  for (const auto& t : batch) {
    double s = 0.0;
    for (double h : t) s += h;
    sum += s / static_cast<double>(t.size());
  }
  CHECK(entropy_loss_term(batch, 0.01) == doctest::Approx(-0.01 * sum / 7.0).epsilon(1e-13));
  CHECK_THROWS_AS(entropy_loss_term(std::vector<std::vector<double>>{}, 0.001), EmptyInputError);
  CHECK_THROWS_AS(entropy_loss_term(std::vector<std::vector<double>>{{}}, 0.001), EmptyInputError);
}

TEST_CASE("80/20 mask") {
  const std::vector<std::vector<double>> ten{{0.1, 0.2, 5.0, 0.3, 0.4}, {0.5, 9.0, 0.6, 0.7, 0.8}};
  const auto m = high_entropy_mask(ten, 0.2);
  CHECK(m == TokenMask{{0, 0, 1, 0, 0}, {0, 1, 0, 0, 0}});

  const std::vector<std::vector<double>> flat{{1, 1, 1, 1}, {1, 1, 1, 1, 1, 1}};
  CHECK(high_entropy_mask(flat, 0.2) == TokenMask{{1, 1, 0, 0}, {0, 0, 0, 0, 0, 0}});

  const auto all = high_entropy_mask(ten, 1.0);
  for (const auto& row : all) CHECK(std::all_of(row.begin(), row.end(), [](auto x) { return x == 1; }));

  CHECK(ceil_fraction(0.2, 10) == 2);
  CHECK(ceil_fraction(0.2, 11) == 3);
  CHECK(ceil_fraction(0.1, 30) == 3);
  CHECK(ceil_fraction(0.0, 30) == 0);
}

TEST_CASE("asymmetric ratio clip") {
  CHECK(clip_ratio_asymmetric(1.0, 0.2, 0.28) == 1.0);
  CHECK(clip_ratio_asymmetric(1.5, 0.2, 0.28) == 1.28);
  CHECK(clip_ratio_asymmetric(0.5, 0.2, 0.28) == 0.8);
  CHECK(clip_ratio_asymmetric(1.27, 0.2, 0.28) == 1.27);
}

TEST_CASE("KL-Cov token selection") {
  const std::vector<double> lp{-1.0, -2.0, -0.5};
  const std::vector<double> flat_adv{0.3, 0.3, 0.3};
  CHECK(kl_cov_select(lp, flat_adv, 0.0002) == std::vector<std::size_t>{0});
  CHECK(kl_cov_select(std::vector<double>{-1.0}, std::vector<double>{2.0}, 0.0002) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(kl_cov_select(lp, std::vector<double>{1.0}, 0.1), ValidationError);

  std::mt19937_64 gen(13);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> l(1000), a(1000);
  for (auto& x : l) x = -std::abs(n(gen));
  for (auto& x : a) x = n(gen);
  const double ml = std::accumulate(l.begin(), l.end(), 0.0) / 1000.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / 1000.0;
  std::vector<std::size_t> order(1000);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return (l[x] - ml) * (a[x] - ma) > (l[y] - ml) * (a[y] - ma);
  });
  CHECK(kl_cov_select(l, a, 0.002) == std::vector<std::size_t>{order[0], order[1]});
}

TEST_CASE("KL penalty") {
  const std::vector<ProbDist> old{ProbDist({0.5, 0.5})}, next{ProbDist({0.75, 0.25})};
  const std::size_t sel[] = {0};
  CHECK(kl_penalty_term(old, next, sel, 1.0) == doctest::Approx(0.143841036225890).epsilon(1e-12));
  CHECK(kl_penalty_term(old, next, {}, 1.0) == 0.0);
  CHECK(kl_penalty_term(old, old, sel, 1.0) == 0.0);
  CHECK(kl_penalty_term(old, next, sel, 2.0) == doctest::Approx(2 * 0.143841036225890));
  CHECK_THROWS_AS(kl_divergence(ProbDist({1.0}), ProbDist({0.5, 0.5})), ValidationError);
}
