#include "helpers.hpp"
#include "oracles.hpp"

#include "metabal/balance.hpp"
#include "metabal/egger.hpp"
#include "metabal/errors.hpp"
#include "metabal/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace metabal;
using testing::make_set;
using testing::to_set;

namespace {

double pct_total(const BalanceState& b) {
  double t = 0.0;
  for (const BalanceMass& m : b.masses) {
    if (!m.excluded) t += m.mass_pct;
  }
  return t;
}

double torque_scale(const BalanceState& b) {
  double t = 0.0;
  for (const BalanceMass& m : b.masses) t += m.weight * std::abs(m.x);
  return t;
}

}  // namespace

TEST_CASE("two equal studies balance in the middle") {
  const StudySet set = make_set({{-1.0, 0.5}, {1.0, 0.5}});
  const BalanceState b = build_balance(set, fixed_effect(set), fixed_heterogeneity(set));
  CHECK(b.pivot == 0.0);
  CHECK(b.masses[0].mass_pct == 50.0);
  CHECK(b.masses[1].mass_pct == 50.0);
  CHECK(b.masses[0].hole_len == 0.0);
  CHECK(b.torque_residual == 0.0);
  CHECK(*b.masses[0].height == 2.0);
  CHECK(b.stand_low < b.pivot);
  CHECK(b.pivot < b.stand_high);
}

TEST_CASE("drilled holes under an additive model") {
  std::mt19937_64 rng(17);
  oracle::Data d;
  do {
    d = oracle::random_data(rng, 12, 0.5);
  } while (oracle::generalized_q(d, 0.0) <= 11.0);
  const StudySet set = to_set(d);
  const PoolingFit pm = pm_fit(set);
  REQUIRE(pm.heterogeneity.tau2 > 0.0);
  const BalanceState b = build_balance(set, pm.estimate, pm.heterogeneity);
  const double tau2 = pm.heterogeneity.tau2;
  for (std::size_t i = 0; i < d.se.size(); ++i) {
    const double s2 = d.se[i] * d.se[i];
    const double expected = 1.0 / s2 - 1.0 / (s2 + tau2);
    CHECK(std::abs(b.masses[i].hole_len * b.masses[i].hole_len - expected) <= 1e-12 * (1.0 / s2));
    CHECK(b.masses[i].hole_len * b.masses[i].hole_len + b.masses[i].weight ==
          doctest::Approx(1.0 / s2).epsilon(1e-12));
  }
  CHECK(pct_total(b) == doctest::Approx(100.0).epsilon(1e-11));
  CHECK(std::abs(b.torque_residual) < 1e-8 * torque_scale(b));

  // Fixed and multiplicative views never drill.
  const PoolingFit mult = multiplicative_fit(set);
  for (const BalanceMass& m : build_balance(set, mult.estimate, mult.heterogeneity).masses) {
    CHECK(m.hole_len == 0.0);
  }
}

TEST_CASE("DL mass ranking follows the random-effects weights") {
  std::mt19937_64 rng(23);
  const oracle::Data d = oracle::random_data(rng, 20, 0.4);
  const StudySet set = to_set(d);
  const PoolingFit dl = dl_fit(set);
  const BalanceState b = build_balance(set, dl.estimate, dl.heterogeneity);

  const oracle::DL h = oracle::dersimonian_laird(d);
  std::vector<std::size_t> expected(d.se.size()), actual(d.se.size());
  std::iota(expected.begin(), expected.end(), 0);
  std::iota(actual.begin(), actual.end(), 0);
  std::sort(expected.begin(), expected.end(), [&](std::size_t a, std::size_t c) {
    return 1.0 / (d.se[a] * d.se[a] + h.tau2) > 1.0 / (d.se[c] * d.se[c] + h.tau2);
  });
  std::sort(actual.begin(), actual.end(),
            [&](std::size_t a, std::size_t c) { return b.masses[a].mass_pct > b.masses[c].mass_pct; });
  CHECK(actual == expected);
}

TEST_CASE("excluded studies stay on the beam with zero mass") {
  const StudySet set = make_set({{0.1, 0.2}, {0.4, 0.3}, {2.0, 0.25}}).excluding({"s3"});
  const BalanceState b = build_balance(set, fixed_effect(set), fixed_heterogeneity(set));
  REQUIRE(b.masses.size() == 3);
  CHECK(b.masses[2].excluded);
  CHECK(b.masses[2].weight == 0.0);
  CHECK(b.masses[2].mass_pct == 0.0);
  CHECK(b.masses[2].x == 2.0);
  CHECK(pct_total(b) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("multiplicative stand widens by sqrt(phi)") {
  const StudySet set = simulate_studies(SimModel::eq4, SimParams{.phi = 3.0}, 30, 5);
  const PoolingFit fe{fixed_effect(set), fixed_heterogeneity(set)};
  const PoolingFit mult = multiplicative_fit(set);
  const BalanceState a = build_balance(set, fe.estimate, fe.heterogeneity);
  const BalanceState b = build_balance(set, mult.estimate, mult.heterogeneity);
  CHECK(b.pivot == a.pivot);
  CHECK(std::abs(b.stand_width() / a.stand_width() - std::sqrt(*mult.heterogeneity.phi)) < 1e-10);
  for (std::size_t i = 0; i < a.masses.size(); ++i) {
    CHECK(b.masses[i].mass_pct == doctest::Approx(a.masses[i].mass_pct).epsilon(1e-12));
    CHECK(*b.masses[i].height == doctest::Approx(*a.masses[i].height / std::sqrt(*mult.heterogeneity.phi)).epsilon(1e-12));
  }
}

TEST_CASE("Egger balance uses the transformed positions") {
  const StudySet set = simulate_studies(SimModel::eq10, SimParams{.mu = 0.2, .phi = 1.5, .beta0 = 1.0}, 200, 8);
  const EggerFit fit = egger_wls(set);
  const BalanceState b = build_balance(set, fit);
  CHECK(b.model == ModelTag::egger);
  CHECK(b.pivot == fit.mu.estimate);
  CHECK(std::abs(b.torque_residual) < 1e-8 * torque_scale(b));
  std::vector<double> x, h;
  for (std::size_t i = 0; i < b.masses.size(); ++i) {
    CHECK(b.masses[i].x == fit.transformed[i].y);
    x.push_back(b.masses[i].x);
    h.push_back(*b.masses[i].height);
  }
  CHECK(std::abs(oracle::pearson(x, h)) < 0.1);

  const ModelFit as_model = fit_model(set, ModelSpec{.tag = ModelTag::egger});
  CHECK(build_balance(set, as_model) == b);
}

TEST_CASE("contract errors") {
  const StudySet set = make_set({{0.1, 0.2}, {0.4, 0.3}, {0.9, 0.5}});
  const StudySet other = make_set({{0.1, 0.2}, {0.4, 0.3}, {0.9, 0.6}});
  const StudySet shorter = make_set({{0.1, 0.2}, {0.4, 0.3}});
  CHECK_THROWS_AS(build_balance(other, fixed_effect(set), fixed_heterogeneity(set)), ContractError);
  CHECK_THROWS_AS(build_balance(shorter, fixed_effect(set), fixed_heterogeneity(set)), ContractError);
  PooledEstimate shifted = fixed_effect(set);
  shifted.mu_hat += 0.1;
  CHECK_THROWS_AS(build_balance(set, shifted, fixed_heterogeneity(set)), ContractError);
  const StudySet moved = make_set({{0.1, 0.2}, {0.4, 0.3}, {5.0, 0.5}});
  CHECK_THROWS_AS(build_balance(moved, fixed_effect(set), fixed_heterogeneity(set)), ContractError);
  const StudySet sloped = make_set({{0.1, 0.2}, {0.4, 0.3}, {0.9, 0.5}, {1.1, 0.9}});
  CHECK_THROWS_AS(build_balance(make_set({{0.1, 0.2}, {0.4, 0.3}, {0.9, 0.5}, {3.1, 0.9}}), egger_wls(sloped)),
                  ContractError);
}

TEST_CASE("ghost keeps the previous state") {
  const StudySet full = make_set({{0.1, 0.2}, {0.4, 0.3}, {2.0, 0.25}});
  const BalanceState before = build_balance(full, fixed_effect(full), fixed_heterogeneity(full));
  const StudySet reduced = full.excluding({"s3"});
  BalanceState after = build_balance(reduced, fixed_effect(reduced), fixed_heterogeneity(reduced));
  after = with_ghost(after, before);
  REQUIRE(after.ghost);
  CHECK(after.ghost->pivot == before.pivot);
  CHECK(after.pivot != before.pivot);
  const BalanceState again = with_ghost(before, after);
  CHECK_FALSE(again.ghost->ghost);
}

TEST_CASE("leave-one-out") {
  SUBCASE("two identical studies") {
    const StudySet set = make_set({{0.3, 0.4}, {0.3, 0.4}});
    const auto entries = leave_one_out(set, ModelSpec{});
    REQUIRE(entries.size() == 2);
    for (const auto& e : entries) {
      REQUIRE(e.fit);
      CHECK(e.fit->pooled.mu_hat == 0.3);
      CHECK(e.fit->pooled.se_mu == 0.4);
    }
  }
  SUBCASE("entries match direct fits on the reduced set") {
    std::mt19937_64 rng(5);
    const StudySet set = to_set(oracle::random_data(rng, 9, 0.3));
    const ModelSpec spec{.tag = ModelTag::re_additive_pm};
    for (const auto& e : leave_one_out(set, spec)) {
      REQUIRE(e.fit);
      CHECK(*e.fit == fit_model(set.excluding({e.excluded_id}), spec));
    }
  }
  SUBCASE("reduced sets below the model minimum are flagged") {
    const auto entries = leave_one_out(make_set({{0.1, 0.3}, {0.5, 0.2}}), ModelSpec{.tag = ModelTag::re_additive_dl});
    REQUIRE(entries.size() == 2);
    for (const auto& e : entries) {
      CHECK_FALSE(e.fit);
      CHECK(e.error);
    }
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(leave_one_out(make_set({{0.1, 0.3}}), ModelSpec{}), DomainError);
    CHECK_THROWS_AS(leave_one_out(make_set({{0.1, 0.3}, {0.2, 0.4}, {0.5, 0.6}}), ModelSpec{.tag = ModelTag::egger}),
                    DomainError);
  }
  SUBCASE("negligible mass barely moves the pivot") {
    const StudySet set = make_set({{0.1, 0.2}, {0.4, 0.3}, {50.0, 1e6}});
    const double full = fixed_effect(set).mu_hat;
    const auto entries = leave_one_out(set, ModelSpec{});
    CHECK(std::abs(entries[2].fit->pooled.mu_hat - full) < 1e-9);
  }
  SUBCASE("planted outlier gives the largest drop in tau2") {
    std::mt19937_64 rng(808);
    oracle::Data d = oracle::random_data(rng, 8, 0.05);
    d.y[4] += 3.0;
    d.se[4] = 0.2;
    const StudySet set = to_set(d);
    const auto entries = leave_one_out(set, ModelSpec{.tag = ModelTag::re_additive_dl});
    // Exhaustive oracle: refit each reduced set directly.
    std::size_t best = 0;
    double best_tau2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      oracle::Data r;
      for (std::size_t j = 0; j < d.y.size(); ++j) {
        if (j == i) continue;
        r.y.push_back(d.y[j]);
        r.se.push_back(d.se[j]);
      }
      const double t = oracle::dersimonian_laird(r).tau2;
      CHECK(entries[i].fit->heterogeneity.tau2 == doctest::Approx(t).epsilon(1e-12));
      if (t < best_tau2) {
        best_tau2 = t;
        best = i;
      }
    }
    CHECK(best == 4);
    CHECK(entries[4].excluded_id == "s5");
  }
}
