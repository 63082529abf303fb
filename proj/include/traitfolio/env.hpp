#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "traitfolio/error.hpp"
#include "traitfolio/io.hpp"
#include "traitfolio/market_data.hpp"

namespace traitfolio {

inline constexpr std::size_t kNumAssets = 5;
inline constexpr std::size_t kObservationSize = 12;
inline constexpr double kMoneyScale = 1e-6;  // NOK -> millions of NOK

enum class Asset : std::size_t { Savings = 0, Property, Stocks, Luxury, Mortgage };

inline constexpr std::array<std::string_view, kNumAssets> kAssetNames{
    "savings", "property", "stocks", "luxury", "mortgage"};

// Fractions of the monthly contribution per asset, in kAssetNames order.
struct Allocation {
  std::array<double, kNumAssets> weights{};

  double operator[](Asset a) const { return weights[static_cast<std::size_t>(a)]; }

  static Allocation all_in(Asset a) {
    Allocation out;
    out.weights[static_cast<std::size_t>(a)] = 1.0;
    return out;
  }

  void validate(double tolerance = 1e-9) const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0 && w <= 1.0)) {
        throw DomainError("allocation weight outside [0,1]: " + io::format_double(w));
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw DomainError("allocation weights sum to " + io::format_double(sum));
    }
  }
};

// Holdings in NOK. The mortgage is a liability stored as a non-negative balance.
struct Portfolio {
  double savings = 0.0;
  double property = 0.0;
  double stocks = 0.0;
  double luxury = 0.0;
  double mortgage = 0.0;
};

inline double net_worth(const Portfolio& p) {
  return p.savings + p.property + p.stocks + p.luxury - p.mortgage;
}

// [age, savings, property, stocks, luxury, mortgage,
//  macd_s, rsi_s, macd_p, rsi_p, macd_i, rsi_i]
struct Observation {
  std::array<double, kObservationSize> values{};

  double age_norm() const { return values[0]; }
  double operator[](std::size_t i) const { return values[i]; }
};

// A deterministic mapping from observation to allocation.
using Policy = std::function<Allocation(const Observation&)>;

struct EnvConfig {
  double start_age = 30.0;
  double monthly_contribution = 10'000.0;
  std::size_t months = 334;
  double initial_mortgage = 2'000'000.0;
  double initial_property = 2'000'000.0;
  double savings_discount_young = 0.95;
  double savings_discount_old = 0.90;
  double mortgage_markup_young = 1.05;
  double mortgage_markup_old = 1.10;
  double luxury_annual_depreciation = 0.20;
  double youth_age_limit = 35.0;
  std::size_t rsi_periods = kDefaultRsiPeriods;

  void validate() const {
    if (!(start_age >= 0.0) || !(monthly_contribution >= 0.0) ||
        !(initial_mortgage >= 0.0) || !(initial_property >= 0.0)) {
      throw ConfigError("monetary fields and start_age must be non-negative");
    }
    if (months < 1) throw ConfigError("months must be at least 1");
    for (double d : {savings_discount_young, savings_discount_old}) {
      if (!(d > 0.0 && d < 1.0)) throw ConfigError("savings discounts must lie in (0,1)");
    }
    for (double m : {mortgage_markup_young, mortgage_markup_old}) {
      if (!(m > 1.0)) throw ConfigError("mortgage markups must exceed 1");
    }
    if (!(luxury_annual_depreciation >= 0.0 && luxury_annual_depreciation < 1.0)) {
      throw ConfigError("luxury depreciation must lie in [0,1)");
    }
    if (rsi_periods < 1) throw ConfigError("rsi_periods must be at least 1");
  }
};

enum class RateKind { Savings, Mortgage };

// Savings pay below the index rate, mortgages charge above it; customers under
// the youth limit get the better side of both.
inline double interest_rate_for(double age, double index_annual_rate, RateKind kind,
                                const EnvConfig& config = {}) {
  const bool young = age < config.youth_age_limit;
  if (kind == RateKind::Savings) {
    return index_annual_rate *
           (young ? config.savings_discount_young : config.savings_discount_old);
  }
  return index_annual_rate *
         (young ? config.mortgage_markup_young : config.mortgage_markup_old);
}

// Annualized rate implied by the month-over-month move of the interest index.
inline double interest_index_to_rate(const IndexSeries& index, std::size_t t) {
  const double next = index.at(t + 1);
  return std::pow(next / index[t], 12.0) - 1.0;
}

inline double monthly_factor(double annual_rate) {
  return std::pow(1.0 + annual_rate, 1.0 / 12.0);
}

// Market data plus its indicator streams, shared read-only between environments.
struct PreparedMarket {
  MarketData data;
  IndicatorFrame indicators;
};

inline std::shared_ptr<const PreparedMarket> prepare_market(
    MarketData data, std::size_t rsi_periods = kDefaultRsiPeriods) {
  auto indicators = compute_indicators(data, rsi_periods);
  return std::make_shared<const PreparedMarket>(
      PreparedMarket{std::move(data), std::move(indicators)});
}

struct StepResult {
  Observation observation;
  double reward = 0.0;  // change in net worth, millions of NOK
  bool done = false;
};

// The monthly asset-management episode. Month t uses index moves t -> t+1, so
// the three series need months + 1 levels.
class AssetEnv {
 public:
  AssetEnv(EnvConfig config, std::shared_ptr<const PreparedMarket> market)
      : config_(config), market_(std::move(market)) {
    config_.validate();
    if (!market_) throw ConfigError("environment needs market data");
    const std::size_t needed = config_.months + 1;
    if (market_->data.horizon_capacity() < needed) {
      throw ConfigError("series cover " +
                        std::to_string(market_->data.horizon_capacity()) +
                        " months but the horizon needs " + std::to_string(needed));
    }
  }

  Observation reset() {
    portfolio_ = Portfolio{};
    portfolio_.property = config_.initial_property;
    portfolio_.mortgage = config_.initial_mortgage;
    month_ = 0;
    started_ = true;
    return observe();
  }

  StepResult step(const Allocation& allocation) {
    if (!started_) throw StateError("step called before reset");
    if (done()) throw StateError("step called after the episode finished");
    allocation.validate();

    const auto& data = market_->data;
    const std::size_t t = month_;
    const double before = net_worth(portfolio_);
    const double c = config_.monthly_contribution;
    const double years = age();

    // contribute
    portfolio_.savings += allocation[Asset::Savings] * c;
    portfolio_.property += allocation[Asset::Property] * c;
    portfolio_.stocks += allocation[Asset::Stocks] * c;
    portfolio_.luxury += allocation[Asset::Luxury] * c;
    const double payment = allocation[Asset::Mortgage] * c;

    // grow
    portfolio_.stocks *= data.stocks[t + 1] / data.stocks[t];
    portfolio_.property *= data.property[t + 1] / data.property[t];
    const double index_rate = interest_index_to_rate(data.interest, t);
    portfolio_.savings *=
        monthly_factor(interest_rate_for(years, index_rate, RateKind::Savings, config_));
    portfolio_.mortgage *=
        monthly_factor(interest_rate_for(years, index_rate, RateKind::Mortgage, config_));
    portfolio_.mortgage -= payment;
    portfolio_.luxury *= monthly_factor(-config_.luxury_annual_depreciation);

    // floor: overpayment lands in savings
    if (portfolio_.mortgage < 0.0) {
      portfolio_.savings -= portfolio_.mortgage;
      portfolio_.mortgage = 0.0;
    }

    ++month_;
    return StepResult{observe(), (net_worth(portfolio_) - before) * kMoneyScale, done()};
  }

  bool done() const { return month_ >= config_.months; }
  std::size_t month() const { return month_; }
  double age() const { return config_.start_age + static_cast<double>(month_) / 12.0; }
  const Portfolio& portfolio() const { return portfolio_; }
  const EnvConfig& config() const { return config_; }
  const std::shared_ptr<const PreparedMarket>& market() const { return market_; }

  // Test hook: start from an arbitrary portfolio at the current month.
  void set_portfolio(const Portfolio& p) { portfolio_ = p; }

  Observation observe() const {
    Observation o;
    o.values[0] = std::clamp(age() / 100.0, 0.0, 1.0);
    o.values[1] = portfolio_.savings * kMoneyScale;
    o.values[2] = portfolio_.property * kMoneyScale;
    o.values[3] = portfolio_.stocks * kMoneyScale;
    o.values[4] = portfolio_.luxury * kMoneyScale;
    o.values[5] = portfolio_.mortgage * kMoneyScale;
    const auto& ind = market_->indicators;
    for (std::size_t k = 0; k < 3; ++k) {
      o.values[6 + 2 * k] = ind.macd[k][month_];
      o.values[7 + 2 * k] = ind.rsi[k][month_] / 100.0;
    }
    return o;
  }

 private:
  EnvConfig config_;
  std::shared_ptr<const PreparedMarket> market_;
  Portfolio portfolio_{};
  std::size_t month_ = 0;
  bool started_ = false;
};

// One row of an exported trajectory: the allocation chosen at month t and the
// portfolio after that month's step.
struct TrajectoryRow {
  std::size_t t = 0;
  double age = 0.0;
  Portfolio portfolio;
  double net_worth = 0.0;
  double reward = 0.0;
  Allocation allocation;
};

inline constexpr std::string_view kTrajectoryHeader =
    "t,age,savings,property,stocks,luxury,mortgage,net_worth,reward,"
    "w_sav,w_prop,w_stk,w_lux,w_mort";

inline std::string trajectory_to_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out(kTrajectoryHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.t);
    for (double v : {r.age, r.portfolio.savings, r.portfolio.property, r.portfolio.stocks,
                     r.portfolio.luxury, r.portfolio.mortgage, r.net_worth, r.reward}) {
      out += ',';
      out += io::format_double(v);
    }
    for (double w : r.allocation.weights) {
      out += ',';
      out += io::format_double(w);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path) {
  std::vector<TrajectoryRow> out;
  for (const auto& v : io::read_numeric_csv(path, kTrajectoryHeader)) {
    TrajectoryRow r;
    r.t = static_cast<std::size_t>(v[0]);
    r.age = v[1];
    r.portfolio = Portfolio{v[2], v[3], v[4], v[5], v[6]};
    r.net_worth = v[7];
    r.reward = v[8];
    for (std::size_t j = 0; j < kNumAssets; ++j) r.allocation.weights[j] = v[9 + j];
    out.push_back(r);
  }
  return out;
}

}  // namespace traitfolio
