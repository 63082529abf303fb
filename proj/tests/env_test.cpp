#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "traitfolio/env.hpp"

using namespace traitfolio;

namespace {

IndexSeries flat(IndexName name, std::size_t n) {
  return IndexSeries(name, kDefaultStart, std::vector<double>(n, 1.0));
}

// Interest index whose month-over-month ratio implies `annual` every month.
IndexSeries constant_rate(double annual, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) v[t] = std::pow(1.0 + annual, static_cast<double>(t) / 12.0);
  return IndexSeries(IndexName::InterestRate, kDefaultStart, std::move(v));
}

std::shared_ptr<const PreparedMarket> flat_market(std::size_t n) {
  return prepare_market(MarketData{flat(IndexName::Stocks, n), flat(IndexName::Property, n),
                                   flat(IndexName::InterestRate, n)});
}

Allocation random_allocation(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  Allocation a;
  double s = 0.0;
  for (auto& w : a.weights) s += (w = g(rng) + 1e-12);
  for (auto& w : a.weights) w /= s;
  return a;
}

}  // namespace

TEST(Env, ResetMatchesInitialPortfolio) {
  AssetEnv env(EnvConfig{}, prepare_market(synthesize_market(335, 1)));
  const auto o = env.reset();
  EXPECT_DOUBLE_EQ(o[0], 0.30);
  EXPECT_EQ(o[1], 0.0);
  EXPECT_EQ(o[2], 2.0);
  EXPECT_EQ(o[3], 0.0);
  EXPECT_EQ(o[4], 0.0);
  EXPECT_EQ(o[5], 2.0);
  EXPECT_EQ(net_worth(env.portfolio()), 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(o[6 + 2 * k], 0.0);   // seeded EMAs agree at t = 0
    EXPECT_EQ(o[7 + 2 * k], 0.5);   // empty RSI window
  }
}

TEST(Env, ShortSeriesIsConfigError) {
  EnvConfig config;
  EXPECT_THROW(AssetEnv(config, flat_market(config.months)), ConfigError);
  EXPECT_NO_THROW(AssetEnv(config, flat_market(config.months + 1)));
}

TEST(Env, StepLifecycle) {
  EnvConfig config;
  config.months = 3;
  AssetEnv env(config, flat_market(4));
  EXPECT_THROW(env.step(Allocation::all_in(Asset::Stocks)), StateError);
  env.reset();
  EXPECT_THROW(env.step(Allocation{{0.5, 0.5, 0.5, 0.0, 0.0}}), DomainError);
  EXPECT_THROW(env.step(Allocation{{-0.1, 1.1, 0.0, 0.0, 0.0}}), DomainError);
  EXPECT_FALSE(env.step(Allocation::all_in(Asset::Stocks)).done);
  EXPECT_FALSE(env.step(Allocation::all_in(Asset::Stocks)).done);
  EXPECT_TRUE(env.step(Allocation::all_in(Asset::Stocks)).done);
  EXPECT_THROW(env.step(Allocation::all_in(Asset::Stocks)), StateError);
}

TEST(Env, ContributionOnlyOnFlatMarket) {
  EnvConfig config;
  config.months = 12;
  AssetEnv env(config, flat_market(13));
  env.reset();
  for (int i = 0; i < 12; ++i) {
    const double before = net_worth(env.portfolio());
    const auto r = env.step(Allocation::all_in(Asset::Stocks));
    EXPECT_NEAR(net_worth(env.portfolio()) - before, 10'000.0, 1e-6);
    EXPECT_NEAR(r.reward, 0.01, 1e-12);
  }
}

TEST(Env, LuxuryDepreciatesTwentyPercentPerYear) {
  EnvConfig config;
  config.months = 12;
  config.initial_mortgage = 0.0;
  config.initial_property = 0.0;
  config.monthly_contribution = 0.0;
  AssetEnv env(config, flat_market(13));
  env.reset();
  env.set_portfolio(Portfolio{0, 0, 0, 1'000'000.0, 0});
  for (int i = 0; i < 12; ++i) env.step(Allocation::all_in(Asset::Savings));
  EXPECT_NEAR(env.portfolio().luxury, 800'000.0, 1.0);
}

TEST(Env, SavingsCompoundMonthly) {
  // effective 2% after the 0.95 youth discount
  EnvConfig config;
  config.months = 1;
  config.monthly_contribution = 0.0;
  config.initial_mortgage = 0.0;
  const double index_rate = 0.02 / 0.95;
  AssetEnv env(config, prepare_market(MarketData{flat(IndexName::Stocks, 2),
                                                 flat(IndexName::Property, 2),
                                                 constant_rate(index_rate, 2)}));
  env.reset();
  env.set_portfolio(Portfolio{1000.0, 0, 0, 0, 0});
  env.step(Allocation::all_in(Asset::Savings));
  EXPECT_NEAR(env.portfolio().savings, 1000.0 * std::pow(1.02, 1.0 / 12.0), 1e-9);
  EXPECT_NEAR(env.portfolio().savings, 1001.652, 1e-3);
}

TEST(Env, MortgageAmortizationStep) {
  // effective 3.3% after the 1.10 markup for a 40-year-old
  EnvConfig config;
  config.months = 1;
  config.start_age = 40.0;
  config.initial_property = 0.0;
  AssetEnv env(config, prepare_market(MarketData{flat(IndexName::Stocks, 2),
                                                 flat(IndexName::Property, 2),
                                                 constant_rate(0.03, 2)}));
  env.reset();
  env.step(Allocation::all_in(Asset::Mortgage));
  EXPECT_NEAR(env.portfolio().mortgage, 2'000'000.0 * std::pow(1.033, 1.0 / 12.0) - 10'000.0,
              1e-6);
}

TEST(Env, MortgageFloorRedirectsToSavings) {
  EnvConfig config;
  config.months = 4;
  config.initial_mortgage = 15'000.0;
  config.initial_property = 0.0;
  AssetEnv env(config, flat_market(5));
  env.reset();
  env.step(Allocation::all_in(Asset::Mortgage));
  EXPECT_DOUBLE_EQ(env.portfolio().mortgage, 5'000.0);
  env.step(Allocation::all_in(Asset::Mortgage));
  EXPECT_EQ(env.portfolio().mortgage, 0.0);
  EXPECT_DOUBLE_EQ(env.portfolio().savings, 5'000.0);
  env.step(Allocation::all_in(Asset::Mortgage));
  EXPECT_EQ(env.portfolio().mortgage, 0.0);
  EXPECT_DOUBLE_EQ(env.portfolio().savings, 15'000.0);
  // money in = money accounted on a flat market
  EXPECT_DOUBLE_EQ(net_worth(env.portfolio()), -15'000.0 + 3 * 10'000.0);
}

TEST(InterestRate, AgeBands) {
  EXPECT_NEAR(interest_rate_for(30, 0.03, RateKind::Savings), 0.0285, 1e-15);
  EXPECT_NEAR(interest_rate_for(40, 0.03, RateKind::Mortgage), 0.033, 1e-15);
  EXPECT_GT(interest_rate_for(34.999, 0.03, RateKind::Savings),
            interest_rate_for(35.0, 0.03, RateKind::Savings));
  EXPECT_LT(interest_rate_for(34.999, 0.03, RateKind::Mortgage),
            interest_rate_for(35.0, 0.03, RateKind::Mortgage));
}

TEST(InterestRate, FromIndex) {
  EXPECT_EQ(interest_index_to_rate(flat(IndexName::InterestRate, 3), 0), 0.0);
  const IndexSeries up(IndexName::InterestRate, kDefaultStart, {1.0, 1.001});
  EXPECT_NEAR(interest_index_to_rate(up, 0), std::pow(1.001, 12) - 1.0, 1e-15);
  EXPECT_NEAR(interest_index_to_rate(up, 0), 0.012066, 1e-6);
  const IndexSeries down(IndexName::InterestRate, kDefaultStart, {1.0, 0.999});
  EXPECT_LT(interest_index_to_rate(down, 0), 0.0);
  EXPECT_THROW(interest_index_to_rate(up, 1), BoundsError);
}

TEST(NetWorth, Examples) {
  EXPECT_EQ(net_worth(Portfolio{0, 2e6, 0, 0, 2e6}), 0.0);
  EXPECT_EQ(net_worth(Portfolio{1e6, 0, 0, 0, 0}), 1e6);
  EXPECT_EQ(net_worth(Portfolio{0, 2e6, 0, 0, 0.5e6}), 1.5e6);
}

TEST(EnvProperties, AllStocksMatchesClosedForm) {
  EnvConfig config;
  config.initial_mortgage = 0.0;
  config.initial_property = 0.0;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto market = prepare_market(synthesize_market(config.months + 1, rng()));
    AssetEnv env(config, market);
    env.reset();
    while (!env.done()) env.step(Allocation::all_in(Asset::Stocks));
    const double expected = oracle::all_stocks_final(market->data.stocks.values(), config.months,
                                                     config.monthly_contribution);
    EXPECT_NEAR(env.portfolio().stocks / expected, 1.0, 1e-9);
  }
}

TEST(EnvProperties, TelescopingNonNegativeDeterministic) {
  std::mt19937_64 rng(17);
  EnvConfig config;
  config.initial_mortgage = 300'000.0;  // small enough to hit the floor
  for (int trial = 0; trial < 10; ++trial) {
    const auto market = prepare_market(synthesize_market(config.months + 1, rng()));
    const std::uint64_t action_seed = rng();
    auto run = [&](std::vector<Portfolio>* path) {
      std::mt19937_64 actions(action_seed);
      AssetEnv env(config, market);
      env.reset();
      const double start = net_worth(env.portfolio());
      double rewards = 0.0;
      bool paid_off = false;
      while (!env.done()) {
        rewards += env.step(random_allocation(actions)).reward;
        const auto& p = env.portfolio();
        EXPECT_GE(p.savings, 0.0);
        EXPECT_GE(p.property, 0.0);
        EXPECT_GE(p.stocks, 0.0);
        EXPECT_GE(p.luxury, 0.0);
        EXPECT_GE(p.mortgage, 0.0);
        if (paid_off) EXPECT_EQ(p.mortgage, 0.0);
        paid_off = paid_off || p.mortgage == 0.0;
        path->push_back(p);
      }
      const double change = net_worth(env.portfolio()) - start;
      EXPECT_NEAR(rewards / kMoneyScale, change, 1e-6 * std::abs(change));
    };
    std::vector<Portfolio> a, b;
    run(&a);
    run(&b);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_EQ(std::memcmp(&a[i], &b[i], sizeof(Portfolio)), 0);
    }
  }
}

TEST(Trajectory, CsvRoundTrip) {
  std::vector<TrajectoryRow> rows{{0, 30.0, {1, 2, 3, 4, 5}, 5.0, 0.1, {{0.1, 0.2, 0.3, 0.2, 0.2}}},
                                  {1, 30.0 + 1.0 / 12.0, {1.5, 2, 3, 4, 0}, 10.5, 0.0055,
                                   {{0.0, 0.0, 1.0, 0.0, 0.0}}}};
  const auto text = trajectory_to_csv(rows);
  EXPECT_EQ(io::lines(text)[0], kTrajectoryHeader);
  const auto path = std::filesystem::temp_directory_path() / "traitfolio_traj_rt.csv";
  io::write_file(path, text);
  const auto back = read_trajectory_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(trajectory_to_csv(back), text);
  EXPECT_EQ(back[1].age, rows[1].age);
}
