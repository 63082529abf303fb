#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "traitfolio/ddpg.hpp"
#include "traitfolio/env.hpp"
#include "traitfolio/error.hpp"
#include "traitfolio/io.hpp"
#include "traitfolio/market_data.hpp"

namespace traitfolio {

struct EvaluationReport {
  std::string name;
  Portfolio final_portfolio;
  double final_net_worth = 0.0;           // NOK
  std::optional<double> cagr;             // undefined when final net worth <= 0
  std::vector<TrajectoryRow> trajectory;  // one row per month
  double total_invested = 0.0;            // NOK

  std::size_t months() const { return trajectory.size(); }

  std::array<double, kNumAssets> mean_allocation() const {
    std::array<double, kNumAssets> mean{};
    if (trajectory.empty()) return mean;
    for (const auto& row : trajectory) {
      for (std::size_t j = 0; j < kNumAssets; ++j) mean[j] += row.allocation.weights[j];
    }
    for (auto& m : mean) m /= static_cast<double>(trajectory.size());
    return mean;
  }
};

// (final / invested)^(12 / months) - 1
inline double cagr(double final_value, double total_invested, std::size_t months) {
  if (!(total_invested > 0.0)) throw DomainError("CAGR needs a positive total investment");
  if (months < 1) throw DomainError("CAGR needs at least one month");
  if (!(final_value > 0.0)) throw DomainError("CAGR undefined for a non-positive final value");
  return std::pow(final_value / total_invested, 12.0 / static_cast<double>(months)) - 1.0;
}

// Greedy episode under `policy`.
inline EvaluationReport rollout(const Policy& policy, const EnvConfig& config,
                                std::shared_ptr<const PreparedMarket> market,
                                std::string name = {}) {
  AssetEnv env(config, std::move(market));
  Observation observation = env.reset();
  EvaluationReport report;
  report.name = std::move(name);
  report.trajectory.reserve(config.months);
  while (!env.done()) {
    const std::size_t t = env.month();
    const double age = env.age();
    const Allocation allocation = policy(observation);
    const StepResult step = env.step(allocation);
    report.trajectory.push_back(
        {t, age, env.portfolio(), net_worth(env.portfolio()), step.reward, allocation});
    observation = step.observation;
  }
  report.final_portfolio = env.portfolio();
  report.final_net_worth = net_worth(env.portfolio());
  report.total_invested = static_cast<double>(config.months) * config.monthly_contribution;
  if (report.final_net_worth > 0.0 && report.total_invested > 0.0) {
    report.cagr = cagr(report.final_net_worth, report.total_invested, config.months);
  }
  return report;
}

// Everything into stocks, whatever the state.
inline Policy monetary_baseline() {
  return [](const Observation&) { return Allocation::all_in(Asset::Stocks); };
}

// values[T] / values[t] for every t.
inline std::vector<double> roi_curve(const IndexSeries& series) {
  std::vector<double> out(series.size());
  const double last = series.values().back();
  for (std::size_t t = 0; t < series.size(); ++t) out[t] = last / series[t];
  return out;
}

// Final-value multiple of one NOK contributed at month t, per asset, under the
// environment's order of operations. Mortgage payments settle after that
// month's interest, so they compound one month less.
inline std::vector<std::array<double, kNumAssets>> contribution_multiples(
    const PreparedMarket& market, const EnvConfig& config) {
  const std::size_t months = config.months;
  const auto& data = market.data;
  std::vector<std::array<double, kNumAssets>> out(months);
  double savings = 1.0, mortgage = 1.0;
  const double luxury_factor = monthly_factor(-config.luxury_annual_depreciation);
  double luxury = 1.0;
  for (std::size_t t = months; t-- > 0;) {
    const double age = config.start_age + static_cast<double>(t) / 12.0;
    const double index_rate = interest_index_to_rate(data.interest, t);
    const double mortgage_after = mortgage;
    savings *= monthly_factor(interest_rate_for(age, index_rate, RateKind::Savings, config));
    mortgage *= monthly_factor(interest_rate_for(age, index_rate, RateKind::Mortgage, config));
    luxury *= luxury_factor;
    out[t] = {savings, data.property[months] / data.property[t],
              data.stocks[months] / data.stocks[t], luxury, mortgage_after};
  }
  return out;
}

// True when a stocks contribution beats every other asset at every month, in
// which case all-stocks is the wealth-maximizing allocation.
inline bool stocks_dominate(const PreparedMarket& market, const EnvConfig& config) {
  for (const auto& m : contribution_multiples(market, config)) {
    const double stocks = m[static_cast<std::size_t>(Asset::Stocks)];
    for (std::size_t j = 0; j < kNumAssets; ++j) {
      if (m[j] > stocks) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Emission

inline nlohmann::ordered_json summary_json(const EvaluationReport& report) {
  nlohmann::ordered_json doc;
  doc["name"] = report.name;
  doc["months"] = report.months();
  doc["total_invested"] = report.total_invested;
  doc["final_net_worth"] = report.final_net_worth;
  doc["cagr"] = report.cagr ? nlohmann::ordered_json(*report.cagr) : nlohmann::ordered_json();
  nlohmann::ordered_json portfolio;
  portfolio["savings"] = report.final_portfolio.savings;
  portfolio["property"] = report.final_portfolio.property;
  portfolio["stocks"] = report.final_portfolio.stocks;
  portfolio["luxury"] = report.final_portfolio.luxury;
  portfolio["mortgage"] = report.final_portfolio.mortgage;
  doc["final_portfolio"] = portfolio;
  nlohmann::ordered_json mean;
  const auto m = report.mean_allocation();
  for (std::size_t j = 0; j < kNumAssets; ++j) mean[std::string(kAssetNames[j])] = m[j];
  doc["mean_allocation"] = mean;
  return doc;
}

struct EmittedFiles {
  std::filesystem::path trajectory;
  std::filesystem::path summary;
  std::optional<std::filesystem::path> training;
};

// Writes <name>_trajectory.csv, <name>_summary.json and, with a log,
// <name>_training.csv into `directory`. Output depends only on the inputs.
inline EmittedFiles emit_report(const EvaluationReport& report, const ddpg::TrainingLog* log,
                                const std::filesystem::path& directory, std::string_view name) {
  EmittedFiles files;
  const std::string stem(name);
  files.trajectory = directory / (stem + "_trajectory.csv");
  files.summary = directory / (stem + "_summary.json");
  io::write_file(files.trajectory, trajectory_to_csv(report.trajectory));
  io::write_file(files.summary, summary_json(report).dump(2) + "\n");
  if (log) {
    files.training = directory / (stem + "_training.csv");
    io::write_file(*files.training, ddpg::training_log_to_csv(*log));
  }
  return files;
}

}  // namespace traitfolio
