#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "traitfolio/persona.hpp"

using namespace traitfolio;

namespace {

void expect_weights(const std::array<double, kNumAssets>& got,
                    const std::array<double, kNumAssets>& want, double tol) {
  for (std::size_t j = 0; j < kNumAssets; ++j) EXPECT_NEAR(got[j], want[j], tol) << "asset " << j;
}

Policy constant(std::array<double, kNumAssets> w) {
  return [w](const Observation&) { return Allocation{w}; };
}

// Observation-dependent stand-in for a trained actor.
Policy wobbly(std::size_t k) {
  return [k](const Observation& o) {
    std::array<double, kNumAssets> w{};
    double s = 0.0;
    for (std::size_t j = 0; j < kNumAssets; ++j) {
      w[j] = std::exp(std::sin(static_cast<double>(k * 7 + j) + o.values[0] * 3.0));
      s += w[j];
    }
    for (auto& x : w) x /= s;
    return Allocation{w};
  };
}

std::array<Policy, kNumTraits> wobbly_agents() {
  std::array<Policy, kNumTraits> out;
  for (std::size_t k = 0; k < kNumTraits; ++k) out[k] = wobbly(k);
  return out;
}

Observation obs(double x) {
  Observation o;
  o.values.fill(x);
  return o;
}

}  // namespace

TEST(Coefficients, WithinUnitInterval) {
  for (const auto& row : kTraitCoefficients) {
    for (double c : row) {
      EXPECT_GE(c, -1.0);
      EXPECT_LE(c, 1.0);
    }
  }
}

TEST(DerivePrior, MatchesHandComputation) {
  // clip negatives then divide by the column's positive mass
  expect_weights(derive_prior(kTraitCoefficients, Trait::Openness).weights,
                 {0, 0, 0.82 / 0.98, 0.16 / 0.98, 0}, 1e-15);
  EXPECT_EQ(derive_prior(kTraitCoefficients, Trait::Extraversion).weights,
            (std::array<double, kNumAssets>{0, 0, 1, 0, 0}));
  expect_weights(derive_prior(kTraitCoefficients, Trait::Neuroticism).weights,
                 {0.6476, 0, 0.1143, 0, 0.2381}, 5e-5);
  expect_weights(derive_prior(kTraitCoefficients, Trait::Agreeableness).weights,
                 {0.4397, 0, 0.3621, 0, 0.1983}, 5e-5);
  expect_weights(derive_prior(kTraitCoefficients, Trait::Conscientiousness).weights,
                 {0.08 / 1.12, 0.32 / 1.12, 0, 0, 0.72 / 1.12}, 1e-15);
}

TEST(DerivePrior, ReproducesPublishedPriors) {
  for (Trait t : {Trait::Openness, Trait::Extraversion, Trait::Neuroticism}) {
    const auto derived = derive_prior(kTraitCoefficients, t).weights;
    for (std::size_t j = 0; j < kNumAssets; ++j) {
      EXPECT_NEAR(derived[j], kPublishedPriors[j][static_cast<std::size_t>(t)], 0.01)
          << trait_name(t) << " asset " << j;
    }
  }
  // agreeableness matches once the printed 0.02 mortgage weight reads as 0.20
  expect_weights(derive_prior(kTraitCoefficients, Trait::Agreeableness).weights,
                 shipped_prior(Trait::Agreeableness).weights, 0.01);
}

TEST(DerivePrior, AlwaysAValidPrior) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    TraitCoefficients c{};
    for (auto& row : c) {
      for (auto& x : row) x = u(rng);
    }
    c[0][0] = 0.5;  // keep column O normalizable
    EXPECT_NO_THROW(derive_prior(c, Trait::Openness).validate());
  }
  TraitCoefficients negative{};
  for (auto& row : negative) row.fill(-0.1);
  EXPECT_THROW(derive_prior(negative, Trait::Openness), DomainError);
}

TEST(ShippedPriors, SumToOne) {
  for (auto mode : {PriorMode::Corrected, PriorMode::StrictTable}) {
    for (Trait t : kAllTraits) EXPECT_NO_THROW(shipped_prior(t, mode).validate());
  }
  expect_weights(shipped_prior(Trait::Agreeableness).weights, {0.44, 0, 0.36, 0, 0.20}, 1e-12);
  expect_weights(shipped_prior(Trait::Agreeableness, PriorMode::StrictTable).weights,
                 {0.44 / 0.82, 0, 0.36 / 0.82, 0, 0.02 / 0.82}, 1e-12);
  EXPECT_EQ(shipped_prior(Trait::Extraversion).weights,
            (std::array<double, kNumAssets>{0, 0, 1, 0, 0}));
}

TEST(ParseTrait, CodesAndNames) {
  EXPECT_EQ(parse_trait("O"), Trait::Openness);
  EXPECT_EQ(parse_trait("neuroticism"), Trait::Neuroticism);
  EXPECT_FALSE(parse_trait("X").has_value());
}

TEST(NormalizeProfile, Examples) {
  EXPECT_EQ(normalize_profile({{0, 0, 1, 0, 0}}), (std::array<double, kNumTraits>{0, 0, 1, 0, 0}));
  const auto flat = normalize_profile({{1, 1, 1, 1, 1}});
  for (double w : flat) EXPECT_DOUBLE_EQ(w, 0.2);
  const std::array<double, kNumTraits> scores{0.22, 0.87, 0.21, 0.92, 0.49};
  const auto w = normalize_profile({scores});
  for (std::size_t k = 0; k < kNumTraits; ++k) EXPECT_NEAR(w[k], scores[k] / 2.71, 1e-15);
}

TEST(NormalizeProfile, ClipsNegativesAndRejectsEmpty) {
  const auto w = normalize_profile({{-0.5, 0.5, 0, 0, 0.5}});
  expect_weights(w, {0, 0.5, 0, 0, 0.5}, 0);
  EXPECT_THROW(normalize_profile({{-1, 0, -0.2, 0, 0}}), DomainError);
  EXPECT_THROW(PersonalityProfile({{1.5, 0, 0, 0, 0}}).validate(), DomainError);
}

TEST(Aggregate, OneHotReproducesAgent) {
  const auto agents = wobbly_agents();
  for (double x : {0.0, 0.3, 0.9}) {
    EXPECT_EQ(aggregate_policy(PersonalityProfile{{0, 0, 1, 0, 0}}, agents, obs(x)).weights,
              agents[2](obs(x)).weights);
  }
}

TEST(Aggregate, Midpoint) {
  std::array<Policy, kNumTraits> agents{constant({1, 0, 0, 0, 0}), constant({0, 1, 0, 0, 0})};
  const auto a = aggregate_policy(std::array<double, kNumTraits>{0.5, 0.5, 0, 0, 0}, agents, obs(0));
  EXPECT_EQ(a.weights, (std::array<double, kNumAssets>{0.5, 0.5, 0, 0, 0}));
}

TEST(Aggregate, MissingAgent) {
  std::array<Policy, kNumTraits> agents{constant({1, 0, 0, 0, 0})};
  EXPECT_THROW(aggregate_policy(PersonalityProfile{{1, 1, 0, 0, 0}}, agents, obs(0)), ConfigError);
}

TEST(Aggregate, SimplexLinearityPermutationScale) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto agents = wobbly_agents();
  for (int trial = 0; trial < 100; ++trial) {
    PersonalityProfile p;
    for (auto& s : p.scores) s = u(rng) * 1.5 - 0.5;
    p.scores[static_cast<std::size_t>(trial) % kNumTraits] = 0.7;
    p.validate();
    const Observation o = obs(u(rng));
    const auto a = aggregate_policy(p, agents, o);
    EXPECT_NO_THROW(a.validate(1e-9));

    // positive scaling of the profile leaves the advice unchanged
    PersonalityProfile scaled = p;
    const double k = 0.1 + u(rng) * 0.9;
    for (auto& s : scaled.scores) s *= k;
    expect_weights(aggregate_policy(scaled, agents, o).weights, a.weights, 1e-12);

    // linear in the weights
    std::array<double, kNumTraits> w1{}, w2{}, mix{};
    for (std::size_t i = 0; i < kNumTraits; ++i) {
      w1[i] = u(rng);
      w2[i] = u(rng);
      mix[i] = 0.3 * w1[i] + 0.7 * w2[i];
    }
    const auto l = aggregate_policy(mix, agents, o).weights;
    const auto r1 = aggregate_policy(w1, agents, o).weights;
    const auto r2 = aggregate_policy(w2, agents, o).weights;
    for (std::size_t j = 0; j < kNumAssets; ++j) EXPECT_NEAR(l[j], 0.3 * r1[j] + 0.7 * r2[j], 1e-12);

    // permuting (weight, agent) pairs together changes nothing
    std::array<std::size_t, kNumTraits> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::array<double, kNumTraits> pw{};
    std::array<Policy, kNumTraits> pa;
    for (std::size_t i = 0; i < kNumTraits; ++i) {
      pw[i] = w1[perm[i]];
      pa[i] = agents[perm[i]];
    }
    expect_weights(aggregate_policy(pw, pa, o).weights, r1, 1e-12);
  }
}
