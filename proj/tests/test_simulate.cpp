#include "metabal/errors.hpp"
#include "metabal/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace metabal;

TEST_CASE("SplitMix64 streams") {
  SplitMix64 a(1), b(1), c(2);
  CHECK(a() == b());
  CHECK(a() != c());
  CHECK(stream_seed(5, 0) != stream_seed(5, 1));
  CHECK(stream_seed(5, 0) != stream_seed(6, 0));
  std::set<std::uint64_t> seen;
  SplitMix64 g(0);
  for (int i = 0; i < 1000; ++i) seen.insert(g());
  CHECK(seen.size() == 1000);
}

TEST_CASE("model nesting reproduces the simplest generator") {
  const StudySet base = simulate_studies(SimModel::eq1, SimParams{.mu = 0.2}, 50, 11);
  CHECK(simulate_studies(SimModel::eq3, SimParams{.mu = 0.2, .tau2 = 0.0}, 50, 11) == base);
  CHECK(simulate_studies(SimModel::eq10, SimParams{.mu = 0.2, .phi = 1.0, .beta0 = 0.0}, 50, 11) == base);
  CHECK(simulate_studies(SimModel::eq4, SimParams{.mu = 0.2, .phi = 1.0}, 50, 11) == base);
  CHECK(simulate_studies(SimModel::eq8, SimParams{.mu = 0.2, .beta0 = 0.0}, 50, 11) == base);
  CHECK(simulate_studies(SimModel::eq12, SimParams{.mu = 0.2}, 50, 11) == base);
}

TEST_CASE("determinism and prefix stability") {
  const SimParams p{.tau2 = 0.3};
  const StudySet a = simulate_studies(SimModel::eq3, p, 30, 99);
  CHECK(a == simulate_studies(SimModel::eq3, p, 30, 99));
  CHECK_FALSE(a == simulate_studies(SimModel::eq3, p, 30, 100));
  const StudySet longer = simulate_studies(SimModel::eq3, p, 60, 99);
  for (std::size_t i = 0; i < 30; ++i) CHECK(longer.studies()[i] == a.studies()[i]);
}

TEST_CASE("default precision law and sample sizes") {
  const StudySet set = simulate_studies(SimModel::eq1, {}, 2000, 1);
  for (const Study& s : set.studies()) {
    CHECK(s.se >= 0.05);
    CHECK(s.se <= 1.0);
    REQUIRE(s.n.has_value());
    CHECK(*s.n == std::round(4.0 / (s.se * s.se)));
  }
  CHECK(set.studies().front().id == "s1");
}

TEST_CASE("eq3 moment check") {
  const double tau2 = 0.1;
  const std::size_t k = 10000;
  const StudySet set = simulate_studies(SimModel::eq3, SimParams{.mu = 0.0, .tau2 = tau2}, k, 2025);
  const Eigen::ArrayXd y = set.y();
  const Eigen::ArrayXd s2 = set.se().square();
  // Each (y_i^2 - s_i^2) has mean tau2 given mu = 0; compare against its own MC error.
  const Eigen::ArrayXd d = y.square() - s2;
  const double mean = d.mean();
  const double sd = std::sqrt((d - mean).square().sum() / static_cast<double>(k - 1));
  CHECK(std::abs(mean - tau2) < 3.0 * sd / std::sqrt(static_cast<double>(k)));
}

TEST_CASE("MR simulation") {
  const MRDataset data = simulate_mr(SimParams{.mu = 0.4, .se_xg = 0.05}, 20, 3);
  CHECK(data.size() == 20);
  for (const MRVariant& v : data.variants()) {
    CHECK(v.mu_xg > 0.0);
    CHECK(v.se_xg == 0.05);
    CHECK(v.se_yg == 1.0);
  }
  CHECK(data.variants().front().id == "v1");
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(simulate_studies(SimModel::eq3, SimParams{.tau2 = -0.1}, 5, 1), DomainError);
  CHECK_THROWS_AS(simulate_studies(SimModel::eq4, SimParams{.phi = 0.0}, 5, 1), DomainError);
  CHECK_THROWS_AS(simulate_studies(SimModel::eq12, SimParams{.sigma2_beta0 = -1.0}, 5, 1), DomainError);
  CHECK_THROWS_AS(simulate_studies(SimModel::eq1, SimParams{.s_min = 0.0}, 5, 1), DomainError);
  CHECK_THROWS_AS(simulate_studies(SimModel::eq1, SimParams{.s_min = 2.0, .s_max = 1.0}, 5, 1), DomainError);
  CHECK_THROWS_AS(simulate_studies(SimModel::eq1, {}, 0, 1), DomainError);
  CHECK_THROWS_AS(simulate_mr(SimParams{.se_xg = 0.0}, 5, 1), DomainError);
  CHECK(parse_sim_model("eq10") == SimModel::eq10);
  CHECK_FALSE(parse_sim_model("eq2").has_value());
}
