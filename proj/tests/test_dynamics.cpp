#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "acemad/dynamics.hpp"
#include "acemad/rng.hpp"

using namespace acemad;
using Catch::Matchers::WithinAbs;

namespace {

BeliefDistribution b(std::initializer_list<double> p) { return BeliefDistribution::from_probs(p); }

BeliefDistribution random_belief(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> raw(k);
  for (auto& x : raw) x = e(rng) + 1e-9;
  return normalize(raw);
}

std::vector<BeliefDistribution> random_beliefs(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<BeliefDistribution> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_belief(rng, k));
  return out;
}

std::vector<double> coordinate_mean(const std::vector<BeliefDistribution>& beliefs) {
  std::vector<double> m(beliefs[0].size(), 0.0);
  for (const auto& p : beliefs) {
    for (std::size_t y = 0; y < m.size(); ++y) m[y] += p[y];
  }
  for (auto& x : m) x /= static_cast<double>(beliefs.size());
  return m;
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

TEST_CASE("influence matrices") {
  const auto u = InfluenceMatrix::uniform(4, 0.5);
  CHECK(u.doubly_stochastic());
  CHECK(u(0, 0) == 0.0);
  CHECK_THAT(u(0, 1), WithinAbs(1.0 / 3.0, 1e-15));

  const auto c = InfluenceMatrix::centralized(4, 1, 0.5);
  CHECK(c(0, 1) == 1.0);
  CHECK(c(2, 1) == 1.0);
  CHECK_THAT(c(1, 3), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_FALSE(c.doubly_stochastic());

  Rng rng(3);
  for (std::size_t n = 3; n <= 9; ++n) {
    for (std::size_t d = 1; d < n; ++d) {
      const auto s = InfluenceMatrix::sparse(n, d, 0.4, rng);
      CHECK(s.doubly_stochastic());
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(s(i, i) == 0.0);
        std::size_t nonzero = 0;
        for (std::size_t j = 0; j < n; ++j) nonzero += s(i, j) > 0.0;
        CHECK(nonzero == d);
      }
    }
  }
  // Full degree is the uniform matrix.
  CHECK(InfluenceMatrix::sparse(5, 4, 0.5, rng).omega() == InfluenceMatrix::uniform(5, 0.5).omega());

  CHECK_THROWS_AS(InfluenceMatrix({{0.0, 0.5}, {1.0, 0.0}}, 0.5), Error);
  CHECK_THROWS_AS(InfluenceMatrix({{1.0, 0.0}, {1.0, 0.0}}, 0.5), Error);
  CHECK_THROWS_AS(InfluenceMatrix::uniform(3, 1.5), Error);
}

TEST_CASE("linear update examples") {
  std::mt19937_64 rng(1);
  const auto beliefs = random_beliefs(rng, 5, 3);
  CHECK(linear_update(beliefs, InfluenceMatrix::uniform(5, 0.0)) == beliefs);

  const std::vector<BeliefDistribution> same(4, b({0.2, 0.3, 0.5}));
  for (const auto& p : linear_update(same, InfluenceMatrix::uniform(4, 0.7))) {
    for (std::size_t y = 0; y < 3; ++y) CHECK_THAT(p[y], WithinAbs(same[0][y], 1e-15));
  }

  const std::vector<BeliefDistribution> two{b({1.0, 0.0}), b({0.0, 1.0})};
  for (const auto& p : linear_update(two, InfluenceMatrix::uniform(2, 0.5))) CHECK(p == b({0.5, 0.5}));

  CHECK_THROWS_AS(linear_update(two, InfluenceMatrix::uniform(3, 0.5)), Error);
}

TEST_CASE("doubly stochastic influence preserves the mean belief") {
  std::mt19937_64 rng(2);
  Rng ring(9);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const std::size_t k = 2 + trial % 4;
    const double alpha = (trial % 11) / 10.0;
    auto beliefs = random_beliefs(rng, n, k);
    const auto before = coordinate_mean(beliefs);
    const auto infl = (trial % 2 == 0 || n == 2) ? InfluenceMatrix::uniform(n, alpha)
                                                 : InfluenceMatrix::sparse(n, 1 + trial % (n - 1), alpha, ring);
    for (int step = 0; step < 10; ++step) beliefs = linear_update(beliefs, infl);
    const auto after = coordinate_mean(beliefs);
    for (std::size_t y = 0; y < k; ++y) CHECK_THAT(after[y], WithinAbs(before[y], 1e-12));
  }
}

TEST_CASE("multiplicative weight update") {
  const auto w = WeightVector::uniform(2);
  const auto next = mwu_update(w, ScoreVector{{1.0, -1.0}, 1}, 1.0);
  const double e2 = std::exp(2.0);
  CHECK_THAT(next[0], WithinAbs(e2 / (e2 + 1.0), 1e-15));
  CHECK_THAT(next[1], WithinAbs(1.0 / (e2 + 1.0), 1e-15));
  CHECK_THAT(next[0], WithinAbs(0.8808, 5e-5));

  const WeightVector skewed{{0.1, 0.2, 0.7}, true};
  const auto flat = mwu_update(skewed, ScoreVector{{0.4, 0.4, 0.4}, 1}, 2.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(flat[i], WithinAbs(skewed[i], 1e-15));

  const auto tiny = mwu_update(skewed, ScoreVector{{1.0, -1.0, 0.3}, 1}, 1e-300);
  for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(tiny[i], WithinAbs(skewed[i], 1e-15));

  for (double eta : {0.0, -1.0}) {
    try {
      mwu_update(skewed, ScoreVector{{0.0, 0.0, 0.0}, 1}, eta);
      FAIL("accepted eta " << eta);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NonPositiveEta);
    }
  }
}

TEST_CASE("weight update ignores a common score shift") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> s(-1.0, 1.0);
  std::uniform_real_distribution<double> c(-0.5, 0.5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 6;
    WeightVector w = WeightVector::uniform(n);
    std::vector<double> scores(n);
    for (auto& x : scores) x = s(rng);
    const double shift = c(rng);
    std::vector<double> shifted = scores;
    for (auto& x : shifted) x += shift;
    const auto a = mwu_update(w, ScoreVector{scores, 1}, 2.0);
    const auto bb = mwu_update(w, ScoreVector{shifted, 1}, 2.0);
    for (std::size_t i = 0; i < n; ++i) CHECK_THAT(a[i], WithinAbs(bb[i], 1e-12));
  }
}

TEST_CASE("aggregation examples") {
  std::mt19937_64 rng(6);
  const auto beliefs = random_beliefs(rng, 4, 3);
  const auto avg = uniform_aggregate(beliefs);
  const auto mean = coordinate_mean(beliefs);
  for (std::size_t y = 0; y < 3; ++y) CHECK_THAT(avg[y], WithinAbs(mean[y], 1e-15));

  CHECK(weighted_aggregate(beliefs, WeightVector{{0.0, 1.0, 0.0, 0.0}, true}) == beliefs[1]);
  const std::vector<BeliefDistribution> two{b({1.0, 0.0}), b({0.0, 1.0})};
  CHECK(weighted_aggregate(two, WeightVector{{0.75, 0.25}, true}) == b({0.75, 0.25}));
  CHECK_THROWS_AS(weighted_aggregate(two, WeightVector{{0.75, 0.75}, false}), Error);
}

TEST_CASE("weighted aggregate stays inside the coordinate hull") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const auto beliefs = random_beliefs(rng, n, 4);
    std::vector<double> raw(n);
    for (auto& x : raw) x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto w = normalized(WeightVector{raw, false});
    const auto agg = weighted_aggregate(beliefs, w);
    for (std::size_t y = 0; y < 4; ++y) {
      double lo = 1.0;
      double hi = 0.0;
      for (const auto& p : beliefs) {
        lo = std::min(lo, p[y]);
        hi = std::max(hi, p[y]);
      }
      CHECK(agg[y] >= lo - 1e-15);
      CHECK(agg[y] <= hi + 1e-15);
    }
  }
}

TEST_CASE("decision rules") {
  const std::vector<BeliefDistribution> single{b({0.3, 0.7})};
  CHECK(final_decision(single, WeightVector::uniform(1)) == 1);

  const std::vector<BeliefDistribution> three{b({0.1, 0.9}), b({0.9, 0.1}), b({0.9, 0.1})};
  CHECK(final_decision(three, WeightVector{{0.5, 0.25, 0.25}, true}) == 1);
  CHECK(uniform_aggregate(three).argmax() == 0);
  CHECK(majority_vote(three) == 0);

  auto votes = [](std::vector<std::size_t> argmaxes) {
    std::vector<BeliefDistribution> out;
    for (auto a : argmaxes) out.push_back(BeliefDistribution::vertex(2, a));
    return majority_vote(out);
  };
  CHECK(votes({0, 0, 1}) == 0);
  CHECK(votes({0, 1}) == 0);
  CHECK(votes({1, 1, 1, 0, 0}) == 1);
  CHECK(final_decision(std::vector<BeliefDistribution>{b({0.5, 0.5})}, WeightVector::uniform(1)) == 0);
}

TEST_CASE("final decision follows a relabeling of the answers") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const auto beliefs = random_beliefs(rng, 5, k);
    std::vector<double> raw(5);
    for (auto& x : raw) x = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    const auto w = normalized(WeightVector{raw, false});
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<BeliefDistribution> permuted;
    for (const auto& p : beliefs) {
      std::vector<double> q(k);
      for (std::size_t y = 0; y < k; ++y) q[perm[y]] = p[y];
      permuted.push_back(BeliefDistribution::from_probs(q));
    }
    CHECK(final_decision(permuted, w) == perm[final_decision(beliefs, w)]);
  }
}

TEST_CASE("two-agent weight share") {
  CHECK(two_agent_weight_share(0.3, 0.0, 2.0) == 0.3);
  const double x = 0.2 * std::exp(0.25);
  CHECK_THAT(two_agent_weight_share(0.2, 0.5, 0.5), WithinAbs(x / (x + 0.8), 1e-15));
  CHECK_THAT(two_agent_weight_share(0.2, 0.5, 0.5), WithinAbs(0.24300, 5e-6));
  CHECK_THROWS_AS(two_agent_weight_share(1.0, 0.1, 1.0), Error);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> a(1e-6, 1.0 - 1e-6);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::uniform_real_distribution<double> eta(1e-3, 4.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const double ae = a(rng);
    const double gap = d(rng);
    CHECK(sign(two_agent_weight_share(ae, gap, eta(rng)) - ae) == sign(gap));
  }
}
