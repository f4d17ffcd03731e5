#include "metabal/simulate.hpp"

#include "metabal/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace metabal {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  mix();
  return mix();
}

std::string_view to_string(SimModel model) {
  switch (model) {
    case SimModel::eq1: return "eq1";
    case SimModel::eq3: return "eq3";
    case SimModel::eq4: return "eq4";
    case SimModel::eq8: return "eq8";
    case SimModel::eq10: return "eq10";
    case SimModel::eq12: return "eq12";
  }
  return "eq1";
}

std::optional<SimModel> parse_sim_model(std::string_view text) {
  for (SimModel m : {SimModel::eq1, SimModel::eq3, SimModel::eq4, SimModel::eq8, SimModel::eq10,
                     SimModel::eq12}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

namespace {

void validate(const SimParams& p, std::size_t k) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (k == 0) throw DomainError("simulate: k must be >= 1");
  if (!finite(p.mu) || !finite(p.beta0)) throw DomainError("simulate: mu and beta0 must be finite");
  if (!(p.tau2 >= 0.0) || !finite(p.tau2)) throw DomainError("simulate: tau2 must be >= 0");
  if (!(p.phi > 0.0) || !finite(p.phi)) throw DomainError("simulate: phi must be > 0");
  if (!(p.sigma2_beta0 >= 0.0) || !finite(p.sigma2_beta0)) {
    throw DomainError("simulate: sigma2_beta0 must be >= 0");
  }
  if (!(p.s_min > 0.0) || !(p.s_max >= p.s_min) || !finite(p.s_max)) {
    throw DomainError("simulate: need 0 < s_min <= s_max");
  }
  if (!(p.n_scale > 0.0) || !(p.se_xg > 0.0)) throw DomainError("simulate: n_scale and se_xg must be > 0");
}

struct Draw {
  double s;
  double y;
};

Draw draw_study(SimModel model, const SimParams& p, std::uint64_t seed, std::size_t i) {
  SplitMix64 rng(stream_seed(seed, i));
  std::uniform_real_distribution<double> s_law(p.s_min, p.s_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = p.s_min == p.s_max ? p.s_min : s_law(rng);
  const double e = normal(rng);
  switch (model) {
    case SimModel::eq1:
      return {s, p.mu + s * e};
    case SimModel::eq3:
      return {s, p.mu + s * e + std::sqrt(p.tau2) * normal(rng)};
    case SimModel::eq4:
      return {s, p.mu + std::sqrt(p.phi) * s * e};
    case SimModel::eq8:
      return {s, p.mu + p.beta0 * s + s * e};
    case SimModel::eq10:
      return {s, p.mu + p.beta0 * s + std::sqrt(p.phi) * s * e};
    case SimModel::eq12:
      return {s, p.mu + p.beta0 * s + s * (e + std::sqrt(p.sigma2_beta0) * normal(rng))};
  }
  return {s, p.mu};
}

}  // namespace

StudySet simulate_studies(SimModel model, const SimParams& params, std::size_t k,
                          std::uint64_t seed) {
  validate(params, k);
  std::vector<Study> studies;
  studies.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Draw d = draw_study(model, params, seed, i);
    studies.push_back(Study{"s" + std::to_string(i + 1), d.y, d.s,
                            std::round(params.n_scale / (d.s * d.s)), true});
  }
  return StudySet(std::move(studies));
}

MRDataset simulate_mr(const SimParams& params, std::size_t k, std::uint64_t seed) {
  validate(params, k);
  std::vector<MRVariant> variants;
  variants.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Draw d = draw_study(SimModel::eq12, params, seed, i);
    const double mu_xg = 1.0 / d.s;
    variants.push_back(MRVariant{"v" + std::to_string(i + 1), mu_xg, params.se_xg, d.y * mu_xg, 1.0});
  }
  return MRDataset(std::move(variants));
}

}  // namespace metabal
