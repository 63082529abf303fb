#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "traitfolio/error.hpp"
#include "traitfolio/io.hpp"

namespace traitfolio {

enum class IndexName { Stocks, Property, InterestRate };

inline std::string_view to_string(IndexName name) {
  switch (name) {
    case IndexName::Stocks: return "stocks";
    case IndexName::Property: return "property";
    case IndexName::InterestRate: return "interest";
  }
  return "unknown";
}

// A dated monthly index. Entry t belongs to start month + t months.
class IndexSeries {
 public:
  IndexSeries(IndexName name, std::chrono::year_month start, std::vector<double> values)
      : name_(name), start_(start), values_(std::move(values)) {
    if (values_.empty()) throw DomainError("index series must not be empty");
    for (std::size_t t = 0; t < values_.size(); ++t) {
      if (!(values_[t] > 0.0) || !std::isfinite(values_[t])) {
        throw DomainError("index level at month " + std::to_string(t) +
                          " must be positive and finite");
      }
    }
  }

  IndexName name() const { return name_; }
  std::chrono::year_month start() const { return start_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t t) const { return values_[t]; }

  double at(std::size_t t) const {
    if (t >= values_.size()) {
      throw BoundsError("month " + std::to_string(t) + " outside series of length " +
                        std::to_string(values_.size()));
    }
    return values_[t];
  }

  std::chrono::year_month month(std::size_t t) const {
    return start_ + std::chrono::months(static_cast<int>(t));
  }

  // Divides by the first level so values[0] == 1 exactly.
  IndexSeries normalized() const {
    std::vector<double> scaled(values_);
    const double base = values_.front();
    for (auto& v : scaled) v /= base;
    return IndexSeries(name_, start_, std::move(scaled));
  }

 private:
  IndexName name_;
  std::chrono::year_month start_;
  std::vector<double> values_;
};

// The three indices the environment draws growth from.
struct MarketData {
  IndexSeries stocks;
  IndexSeries property;
  IndexSeries interest;

  const IndexSeries& operator[](IndexName name) const {
    switch (name) {
      case IndexName::Stocks: return stocks;
      case IndexName::Property: return property;
      case IndexName::InterestRate: return interest;
    }
    return stocks;
  }

  std::size_t horizon_capacity() const {
    return std::min({stocks.size(), property.size(), interest.size()});
  }
};

inline constexpr std::chrono::year_month kDefaultStart{std::chrono::year{1992},
                                                       std::chrono::January};

// ---------------------------------------------------------------------------
// CSV ingestion

inline constexpr std::string_view kSeriesHeader = "date,value";

namespace detail {

inline std::chrono::year_month_day parse_iso_date(const std::string& text,
                                                  const std::string& where) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw ParseError(where + ": malformed ISO-8601 date '" + text + "'");
  }
  const std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m},
                                         std::chrono::day{d}};
  if (!date.ok()) throw ParseError(where + ": invalid calendar date '" + text + "'");
  return date;
}

inline int month_ordinal(std::chrono::year_month ym) {
  return static_cast<int>(ym.year()) * 12 + static_cast<int>(unsigned(ym.month())) - 1;
}

}  // namespace detail

// Reads `date,value` rows, resamples to one level per calendar month (the last
// row of a month wins) and normalizes to the first level.
inline IndexSeries ingest_csv(const std::filesystem::path& path, IndexName name) {
  const auto rows = io::lines(io::read_file(path));
  if (rows.empty() || io::trim(rows.front()) != kSeriesHeader) {
    throw ParseError(path.string() + ":1: expected header 'date,value'");
  }

  std::chrono::year_month start{};
  std::chrono::year_month_day previous{};
  std::vector<double> values;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string line = io::trim(rows[i]);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto fields = io::split(line, ',');
    if (fields.size() != 2) throw ParseError(where + ": expected 'date,value'");
    const auto date = detail::parse_iso_date(io::trim(fields[0]), where);
    const double level = io::parse_double(io::trim(fields[1]), where);
    if (!(level > 0.0) || !std::isfinite(level)) {
      throw DomainError(where + ": index level must be positive, got " + fields[1]);
    }

    const std::chrono::year_month ym{date.year(), date.month()};
    if (values.empty()) {
      start = ym;
      values.push_back(level);
    } else {
      if (std::chrono::sys_days(date) <= std::chrono::sys_days(previous)) {
        throw CadenceError(where + ": dates must be strictly increasing");
      }
      const int offset = detail::month_ordinal(ym) - detail::month_ordinal(start);
      const int expected = static_cast<int>(values.size());
      if (offset == expected - 1) {
        values.back() = level;
      } else if (offset == expected) {
        values.push_back(level);
      } else {
        throw CadenceError(where + ": gap of more than one month");
      }
    }
    previous = date;
  }
  if (values.empty()) throw ParseError(path.string() + ": no data rows");
  return IndexSeries(name, start, std::move(values)).normalized();
}

// Writes `date,value` with first-of-month dates and 12 significant digits.
inline std::string series_to_csv(const IndexSeries& series) {
  std::string out(kSeriesHeader);
  out += '\n';
  char date[16];
  for (std::size_t t = 0; t < series.size(); ++t) {
    const auto ym = series.month(t);
    std::snprintf(date, sizeof(date), "%04d-%02u-01", static_cast<int>(ym.year()),
                  unsigned(ym.month()));
    out += date;
    out += ',';
    out += io::format_double(series[t], 12);
    out += '\n';
  }
  return out;
}

inline void write_csv(const IndexSeries& series, const std::filesystem::path& path) {
  io::write_file(path, series_to_csv(series));
}

// ---------------------------------------------------------------------------
// Synthetic generation

struct SyntheticSpec {
  double drift = 0.0;       // log growth per year
  double volatility = 0.0;  // per sqrt(year)
  std::size_t months = 1;
  std::uint64_t seed = 0;
};

// Geometric random walk with monthly log-increments drift/12 + vol/sqrt(12) * z.
inline IndexSeries synthesize_series(const SyntheticSpec& spec, IndexName name,
                                     std::chrono::year_month start = kDefaultStart) {
  if (spec.months == 0) throw DomainError("synthetic series needs at least one month");
  if (!(spec.volatility >= 0.0)) throw DomainError("volatility must be non-negative");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double step_drift = spec.drift / 12.0;
  const double step_vol = spec.volatility / std::sqrt(12.0);

  std::vector<double> values(spec.months);
  double log_level = 0.0;
  values[0] = 1.0;
  for (std::size_t t = 1; t < spec.months; ++t) {
    log_level += step_drift + step_vol * normal(rng);
    values[t] = std::exp(log_level);
  }
  return IndexSeries(name, start, std::move(values));
}

// Defaults ordered like the historical indices: stocks grow fastest and swing
// most, the interest index is the calmest.
inline SyntheticSpec default_synthetic(IndexName name, std::size_t months,
                                       std::uint64_t seed) {
  switch (name) {
    case IndexName::Stocks: return {0.072, 0.15, months, seed};
    case IndexName::Property: return {0.055, 0.05, months, seed};
    case IndexName::InterestRate: return {0.025, 0.01, months, seed};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Indicators

inline double ema_alpha(int window) { return 2.0 / (window + 1.0); }

// EMA seeded with the first level, for every month of the series.
inline std::vector<double> ema_series(const IndexSeries& series, int window) {
  const double alpha = ema_alpha(window);
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t) {
    out[t] = out[t - 1] + alpha * (series[t] - out[t - 1]);
  }
  return out;
}

// 26-month EMA minus 12-month EMA (note the order).
inline double macd(const IndexSeries& series, std::size_t t) {
  series.at(t);
  const double slow_alpha = ema_alpha(26);
  const double fast_alpha = ema_alpha(12);
  double slow = series[0];
  double fast = series[0];
  for (std::size_t i = 1; i <= t; ++i) {
    slow += slow_alpha * (series[i] - slow);
    fast += fast_alpha * (series[i] - fast);
  }
  return slow - fast;
}

namespace detail {

// RSI over the `window` changes ending at t. Flat window -> 50.
inline double rsi_window(const IndexSeries& series, std::size_t t, std::size_t window) {
  if (window == 0) return 50.0;
  double gains = 0.0;
  double losses = 0.0;
  for (std::size_t i = t + 1 - window; i <= t; ++i) {
    const double change = series[i] - series[i - 1];
    if (change > 0.0) gains += change;
    else losses -= change;
  }
  if (gains == 0.0 && losses == 0.0) return 50.0;
  if (losses == 0.0) return 100.0;
  if (gains == 0.0) return 0.0;
  // 100 - 100 / (1 + P/N), written to stay inside [0, 100] under rounding.
  return 100.0 * gains / (gains + losses);
}

}  // namespace detail

inline constexpr std::size_t kDefaultRsiPeriods = 14;

inline double rsi(const IndexSeries& series, std::size_t t,
                  std::size_t periods = kDefaultRsiPeriods) {
  if (periods == 0) throw DomainError("RSI needs at least one period");
  series.at(t);
  if (t < periods) {
    throw BoundsError("RSI at month " + std::to_string(t) + " needs " +
                      std::to_string(periods) + " prior months");
  }
  return detail::rsi_window(series, t, periods);
}

// MACD and RSI for every month of the three indices. Before a full RSI window
// exists the window is clamped to the available months.
struct IndicatorFrame {
  std::array<std::vector<double>, 3> macd;
  std::array<std::vector<double>, 3> rsi;

  std::size_t size() const { return macd[0].size(); }
};

inline IndicatorFrame compute_indicators(const MarketData& market,
                                         std::size_t rsi_periods = kDefaultRsiPeriods) {
  if (rsi_periods == 0) throw DomainError("RSI needs at least one period");
  IndicatorFrame frame;
  const std::array<const IndexSeries*, 3> all{&market.stocks, &market.property,
                                              &market.interest};
  for (std::size_t k = 0; k < all.size(); ++k) {
    const IndexSeries& series = *all[k];
    const auto slow = ema_series(series, 26);
    const auto fast = ema_series(series, 12);
    frame.macd[k].resize(series.size());
    frame.rsi[k].resize(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
      frame.macd[k][t] = slow[t] - fast[t];
      frame.rsi[k][t] = detail::rsi_window(series, t, std::min(t, rsi_periods));
    }
  }
  return frame;
}

inline constexpr std::string_view kIndicatorHeader =
    "t,macd_stocks,rsi_stocks,macd_property,rsi_property,macd_interest,rsi_interest";

inline std::string indicators_to_csv(const IndicatorFrame& frame) {
  std::string out(kIndicatorHeader);
  out += '\n';
  const std::size_t rows = std::min({frame.macd[0].size(), frame.macd[1].size(),
                                     frame.macd[2].size()});
  for (std::size_t t = 0; t < rows; ++t) {
    out += std::to_string(t);
    for (std::size_t k = 0; k < 3; ++k) {
      out += ',';
      out += io::format_double(frame.macd[k][t]);
      out += ',';
      out += io::format_double(frame.rsi[k][t]);
    }
    out += '\n';
  }
  return out;
}

// Three synthetic series from one seed; each index gets its own stream.
inline MarketData synthesize_market(std::size_t months, std::uint64_t seed) {
  auto make = [&](IndexName name, std::uint64_t salt) {
    return synthesize_series(default_synthetic(name, months, seed * 3 + salt), name);
  };
  return MarketData{make(IndexName::Stocks, 0), make(IndexName::Property, 1),
                    make(IndexName::InterestRate, 2)};
}

}  // namespace traitfolio
