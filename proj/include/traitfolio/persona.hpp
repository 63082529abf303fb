#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "traitfolio/env.hpp"
#include "traitfolio/error.hpp"

namespace traitfolio {

inline constexpr std::size_t kNumTraits = 5;

enum class Trait : std::size_t {
  Openness = 0,
  Conscientiousness,
  Extraversion,
  Agreeableness,
  Neuroticism
};

inline constexpr std::array<Trait, kNumTraits> kAllTraits{
    Trait::Openness, Trait::Conscientiousness, Trait::Extraversion, Trait::Agreeableness,
    Trait::Neuroticism};

inline constexpr std::array<std::string_view, kNumTraits> kTraitCodes{"O", "C", "E", "A",
                                                                      "N"};
inline constexpr std::array<std::string_view, kNumTraits> kTraitNames{
    "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"};

inline std::string_view trait_code(Trait t) { return kTraitCodes[static_cast<std::size_t>(t)]; }
inline std::string_view trait_name(Trait t) { return kTraitNames[static_cast<std::size_t>(t)]; }

// Accepts the one-letter code or the full name, case-sensitive lower/upper as listed.
inline std::optional<Trait> parse_trait(std::string_view text) {
  for (std::size_t i = 0; i < kNumTraits; ++i) {
    if (text == kTraitCodes[i] || text == kTraitNames[i]) return kAllTraits[i];
  }
  return std::nullopt;
}

// Rows are assets (savings, property, stocks, luxury, mortgage); columns are
// traits (O, C, E, A, N).
using TraitCoefficients = std::array<std::array<double, kNumTraits>, kNumAssets>;

inline constexpr TraitCoefficients kTraitCoefficients{{
    {-0.11, 0.08, -0.15, 0.51, 0.68},
    {-0.15, 0.32, -0.22, -0.36, -0.24},
    {0.82, -0.61, 0.95, 0.42, 0.12},
    {0.16, -0.51, -0.07, -0.80, -0.81},
    {-0.72, 0.72, -0.52, 0.23, 0.25},
}};

// Published priors, same layout as the coefficients. The agreeableness column
// sums to 0.82 as printed.
inline constexpr TraitCoefficients kPublishedPriors{{
    {0.00, 0.07, 0.00, 0.44, 0.64},
    {0.00, 0.28, 0.00, 0.00, 0.00},
    {0.84, 0.00, 1.00, 0.36, 0.12},
    {0.16, 0.00, 0.00, 0.00, 0.00},
    {0.00, 0.65, 0.00, 0.02, 0.24},
}};

// State-independent target allocation for one trait.
struct Prior {
  std::array<double, kNumAssets> weights{};

  double operator[](std::size_t j) const { return weights[j]; }

  void validate(double tolerance = 1e-9) const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DomainError("prior weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw DomainError("prior weights sum to " + io::format_double(sum));
    }
  }

  Allocation as_allocation() const { return Allocation{weights}; }
};

namespace detail {

inline std::array<double, kNumAssets> clip_and_normalize(std::array<double, kNumAssets> v,
                                                         const std::string& what) {
  double sum = 0.0;
  for (auto& x : v) {
    x = std::max(x, 0.0);
    sum += x;
  }
  if (!(sum > 0.0)) throw DomainError(what + ": no positive entry to normalize");
  for (auto& x : v) x /= sum;
  return v;
}

}  // namespace detail

// Clip negative coefficients to zero, then L1-normalize the trait's column.
inline Prior derive_prior(const TraitCoefficients& coefficients, Trait trait) {
  const auto col = static_cast<std::size_t>(trait);
  std::array<double, kNumAssets> column{};
  for (std::size_t a = 0; a < kNumAssets; ++a) column[a] = coefficients[a][col];
  return Prior{detail::clip_and_normalize(
      column, "prior derivation for " + std::string(trait_name(trait)))};
}

enum class PriorMode {
  Corrected,    // published table, agreeableness mortgage weight read as 0.20
  StrictTable,  // published table, each column renormalized as printed
};

inline std::string_view to_string(PriorMode mode) {
  return mode == PriorMode::Corrected ? "corrected" : "strict";
}

// The priors agents are trained against.
inline Prior shipped_prior(Trait trait, PriorMode mode = PriorMode::Corrected) {
  const auto col = static_cast<std::size_t>(trait);
  std::array<double, kNumAssets> column{};
  for (std::size_t a = 0; a < kNumAssets; ++a) column[a] = kPublishedPriors[a][col];
  if (mode == PriorMode::Corrected && trait == Trait::Agreeableness) {
    column[static_cast<std::size_t>(Asset::Mortgage)] = 0.20;
  }
  return Prior{detail::clip_and_normalize(column, "published prior")};
}

// Trait scores in O, C, E, A, N order, each in [-1, 1].
struct PersonalityProfile {
  std::array<double, kNumTraits> scores{};

  void validate() const {
    for (double s : scores) {
      if (!(s >= -1.0 && s <= 1.0)) {
        throw DomainError("trait scores must lie in [-1,1], got " + io::format_double(s));
      }
    }
  }
};

// Negative scores clip to zero; the rest are divided by their sum.
inline std::array<double, kNumTraits> normalize_profile(const PersonalityProfile& profile) {
  return detail::clip_and_normalize(profile.scores, "personality profile");
}

// Convex combination of the five trait policies, weighted by the normalized
// profile. Traits with zero weight are skipped so a one-hot profile reproduces
// its agent exactly.
inline Allocation aggregate_policy(const std::array<double, kNumTraits>& weights,
                                   const std::array<Policy, kNumTraits>& policies,
                                   const Observation& observation) {
  Allocation out;
  for (std::size_t k = 0; k < kNumTraits; ++k) {
    if (weights[k] == 0.0) continue;
    if (!policies[k]) throw ConfigError("missing policy for trait " + std::string(kTraitNames[k]));
    const Allocation a = policies[k](observation);
    for (std::size_t j = 0; j < kNumAssets; ++j) out.weights[j] += weights[k] * a.weights[j];
  }
  return out;
}

inline Allocation aggregate_policy(const PersonalityProfile& profile,
                                   const std::array<Policy, kNumTraits>& policies,
                                   const Observation& observation) {
  return aggregate_policy(normalize_profile(profile), policies, observation);
}

inline Policy make_aggregate_policy(const PersonalityProfile& profile,
                                    std::array<Policy, kNumTraits> policies) {
  return [weights = normalize_profile(profile),
          policies = std::move(policies)](const Observation& o) {
    return aggregate_policy(weights, policies, o);
  };
}

}  // namespace traitfolio
