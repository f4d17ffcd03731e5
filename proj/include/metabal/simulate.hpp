#pragma once

#include "metabal/mr.hpp"
#include "metabal/study.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

namespace metabal {

/// SplitMix64: a counter-style 64-bit generator. Streams derived with
/// `stream_seed` are independent of the order in which they are consumed,
/// so parallel replicates reproduce regardless of scheduling.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed for sub-stream `index` of `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Generating models:
///   eq1  y = mu + s e
///   eq3  y = mu + s e + delta,                 delta ~ N(0, tau2)
///   eq4  y = mu + sqrt(phi) s e
///   eq8  y = mu + beta0 s + s e
///   eq10 y = mu + beta0 s + sqrt(phi) s e
///   eq12 y = mu + beta0 s + s (e + psi),       psi ~ N(0, sigma2_beta0), psi independent of s
enum class SimModel { eq1, eq3, eq4, eq8, eq10, eq12 };

std::string_view to_string(SimModel model);
std::optional<SimModel> parse_sim_model(std::string_view text);

struct SimParams {
  double mu = 0.0;
  double tau2 = 0.0;
  double phi = 1.0;
  double beta0 = 0.0;
  double sigma2_beta0 = 0.0;
  // s_i ~ Uniform[s_min, s_max]
  double s_min = 0.05;
  double s_max = 1.0;
  /// Sample size attached to each study: n_i = round(n_scale / s_i^2).
  double n_scale = 4.0;
  /// Gene-exposure standard error attached to simulated variants (unused by
  /// the first-order Wald ratio).
  double se_xg = 0.05;
};

/// Study-level simulation. Study i draws, from its own stream, s_i then e_i
/// then the model's extra term, so nested models agree exactly at the
/// nesting parameter values. eq12 is returned as Wald-ratio studies.
StudySet simulate_studies(SimModel model, const SimParams& params, std::size_t k,
                          std::uint64_t seed);

/// eq12 as an MR panel: mu_xg = 1/s_i, se_yg = 1, mu_yg = y_i mu_xg, so the
/// Wald ratios reproduce simulate_studies(eq12, ...) up to rounding.
MRDataset simulate_mr(const SimParams& params, std::size_t k, std::uint64_t seed);

}  // namespace metabal
