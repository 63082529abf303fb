#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "traitfolio/ddpg.hpp"
#include "traitfolio/env.hpp"
#include "traitfolio/error.hpp"
#include "traitfolio/io.hpp"
#include "traitfolio/market_data.hpp"
#include "traitfolio/persona.hpp"
#include "traitfolio/seed.hpp"

namespace traitfolio {

enum class DataSource { Synthetic, Csv };

struct SyntheticParams {
  std::array<double, 3> drift{0.072, 0.055, 0.025};  // stocks, property, interest
  std::array<double, 3> volatility{0.15, 0.05, 0.01};
};

// Everything a command needs, resolved from defaults, an optional config file
// and command-line flags (in increasing precedence).
struct RunConfig {
  DataSource source = DataSource::Synthetic;
  std::vector<std::string> csv_paths;  // stocks, property, interest
  SyntheticParams synthetic;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  std::vector<Trait> traits{kAllTraits.begin(), kAllTraits.end()};
  EnvConfig env;
  ddpg::AgentConfig agent;
  PriorMode prior_mode = PriorMode::Corrected;
  std::optional<PersonalityProfile> profile;
  bool parallel = false;

  void validate() const {
    env.validate();
    agent.validate();
    if (source == DataSource::Csv && csv_paths.size() != 3) {
      throw ConfigError("csv data needs three paths: stocks,property,interest");
    }
    if (traits.empty()) throw ConfigError("select at least one trait");
    for (double v : synthetic.volatility) {
      if (!(v >= 0.0)) throw ConfigError("synthetic volatility must be non-negative");
    }
    if (profile) profile->validate();
  }
};

namespace detail {

inline std::string join(const std::vector<std::string>& parts, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& value) {
  return io::parse_double(value, "config key '" + key + "'");
}

inline std::uint64_t to_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError("config key '" + key + "': expected a non-negative integer, got '" +
                     value + "'");
  }
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': integer out of range");
  }
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("config key '" + key + "': expected true or false");
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Field real_field(const std::string& key, Access access) {
  return {[access](const RunConfig& c) { return io::format_double(access(c)); },
          [access, key](RunConfig& c, const std::string& v) { access(c) = to_double(key, v); }};
}

template <typename Access>
Field count_field(const std::string& key, Access access) {
  return {[access](const RunConfig& c) { return std::to_string(access(c)); },
          [access, key](RunConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(access(c))>;
            access(c) = static_cast<T>(to_count(key, v));
          }};
}

inline std::vector<Trait> parse_traits(const std::string& value) {
  if (value == "all") return {kAllTraits.begin(), kAllTraits.end()};
  std::vector<Trait> out;
  for (const auto& part : io::split(value, ',')) {
    const auto trait = parse_trait(io::trim(part));
    if (!trait) throw ParseError("unknown trait '" + part + "'");
    out.push_back(*trait);
  }
  return out;
}

inline PersonalityProfile parse_profile(const std::string& value) {
  const auto parts = io::split(value, ',');
  if (parts.size() != kNumTraits) {
    throw ParseError("profile needs five comma-separated scores (O,C,E,A,N)");
  }
  PersonalityProfile p;
  for (std::size_t i = 0; i < kNumTraits; ++i) {
    p.scores[i] = io::parse_double(io::trim(parts[i]), "profile score");
  }
  p.validate();
  return p;
}

// Serializable fields in canonical order. `out` is deliberately absent: it
// says where artifacts go, not how they are produced.
inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto add = [&](std::string key, Field f) { t.emplace_back(std::move(key), std::move(f)); };

    add("data.source",
        {[](const RunConfig& c) { return std::string(c.source == DataSource::Csv ? "csv" : "synthetic"); },
         [](RunConfig& c, const std::string& v) {
           if (v == "csv") c.source = DataSource::Csv;
           else if (v == "synthetic") c.source = DataSource::Synthetic;
           else throw ParseError("data.source must be 'synthetic' or 'csv'");
         }});
    add("data.csv", {[](const RunConfig& c) { return join(c.csv_paths); },
                     [](RunConfig& c, const std::string& v) {
                       c.csv_paths.clear();
                       if (v.empty()) return;
                       for (const auto& p : io::split(v, ',')) c.csv_paths.push_back(io::trim(p));
                     }});
    const std::array<std::string, 3> names{"stocks", "property", "interest"};
    for (std::size_t k = 0; k < 3; ++k) {
      add("synthetic." + names[k] + "_drift",
          real_field("synthetic." + names[k] + "_drift",
                     [k](auto& c) -> auto& { return c.synthetic.drift[k]; }));
      add("synthetic." + names[k] + "_volatility",
          real_field("synthetic." + names[k] + "_volatility",
                     [k](auto& c) -> auto& { return c.synthetic.volatility[k]; }));
    }
    add("seed", {[](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) { c.seed = to_count("seed", v); }});
    add("traits", {[](const RunConfig& c) {
                     std::vector<std::string> codes;
                     for (auto t : c.traits) codes.emplace_back(trait_code(t));
                     return join(codes);
                   },
                   [](RunConfig& c, const std::string& v) { c.traits = parse_traits(v); }});

    add("env.start_age", real_field("env.start_age", [](auto& c) -> auto& { return c.env.start_age; }));
    add("env.monthly_contribution", real_field("env.monthly_contribution", [](auto& c) -> auto& { return c.env.monthly_contribution; }));
    add("env.months", count_field("env.months", [](auto& c) -> auto& { return c.env.months; }));
    add("env.initial_mortgage", real_field("env.initial_mortgage", [](auto& c) -> auto& { return c.env.initial_mortgage; }));
    add("env.initial_property", real_field("env.initial_property", [](auto& c) -> auto& { return c.env.initial_property; }));
    add("env.savings_discount_young", real_field("env.savings_discount_young", [](auto& c) -> auto& { return c.env.savings_discount_young; }));
    add("env.savings_discount_old", real_field("env.savings_discount_old", [](auto& c) -> auto& { return c.env.savings_discount_old; }));
    add("env.mortgage_markup_young", real_field("env.mortgage_markup_young", [](auto& c) -> auto& { return c.env.mortgage_markup_young; }));
    add("env.mortgage_markup_old", real_field("env.mortgage_markup_old", [](auto& c) -> auto& { return c.env.mortgage_markup_old; }));
    add("env.luxury_annual_depreciation", real_field("env.luxury_annual_depreciation", [](auto& c) -> auto& { return c.env.luxury_annual_depreciation; }));
    add("env.youth_age_limit", real_field("env.youth_age_limit", [](auto& c) -> auto& { return c.env.youth_age_limit; }));
    add("env.rsi_periods", count_field("env.rsi_periods", [](auto& c) -> auto& { return c.env.rsi_periods; }));

    add("agent.actor_lr", real_field("agent.actor_lr", [](auto& c) -> auto& { return c.agent.actor_lr; }));
    add("agent.critic_lr", real_field("agent.critic_lr", [](auto& c) -> auto& { return c.agent.critic_lr; }));
    add("agent.tau", real_field("agent.tau", [](auto& c) -> auto& { return c.agent.tau; }));
    add("agent.lambda", real_field("agent.lambda", [](auto& c) -> auto& { return c.agent.lambda; }));
    add("agent.gamma", real_field("agent.gamma", [](auto& c) -> auto& { return c.agent.gamma; }));
    add("agent.batch_size", count_field("agent.batch_size", [](auto& c) -> auto& { return c.agent.batch_size; }));
    add("agent.steps_per_iteration", count_field("agent.steps_per_iteration", [](auto& c) -> auto& { return c.agent.steps_per_iteration; }));
    add("agent.batches_per_iteration", count_field("agent.batches_per_iteration", [](auto& c) -> auto& { return c.agent.batches_per_iteration; }));
    add("agent.buffer_capacity", count_field("agent.buffer_capacity", [](auto& c) -> auto& { return c.agent.buffer_capacity; }));
    add("agent.exploration_sigma", real_field("agent.exploration_sigma", [](auto& c) -> auto& { return c.agent.exploration_sigma; }));
    add("agent.exploration_sigma_final", real_field("agent.exploration_sigma_final", [](auto& c) -> auto& { return c.agent.exploration_sigma_final; }));
    add("agent.iterations", count_field("agent.iterations", [](auto& c) -> auto& { return c.agent.iterations; }));
    add("agent.hidden", count_field("agent.hidden", [](auto& c) -> auto& { return c.agent.hidden; }));
    add("agent.regularizer",
        {[](const RunConfig& c) { return std::string(ddpg::to_string(c.agent.regularizer)); },
         [](RunConfig& c, const std::string& v) {
           if (v == "batch_mean") c.agent.regularizer = ddpg::RegularizerMode::BatchMean;
           else if (v == "per_sample") c.agent.regularizer = ddpg::RegularizerMode::PerSample;
           else throw ParseError("agent.regularizer must be 'batch_mean' or 'per_sample'");
         }});
    add("prior_mode", {[](const RunConfig& c) { return std::string(to_string(c.prior_mode)); },
                       [](RunConfig& c, const std::string& v) {
                         if (v == "corrected") c.prior_mode = PriorMode::Corrected;
                         else if (v == "strict") c.prior_mode = PriorMode::StrictTable;
                         else throw ParseError("prior_mode must be 'corrected' or 'strict'");
                       }});
    add("profile", {[](const RunConfig& c) {
                      if (!c.profile) return std::string();
                      std::vector<std::string> s;
                      for (double v : c.profile->scores) s.push_back(io::format_double(v));
                      return join(s);
                    },
                    [](RunConfig& c, const std::string& v) {
                      if (v.empty()) c.profile.reset();
                      else c.profile = parse_profile(v);
                    }});
    add("parallel", {[](const RunConfig& c) { return std::string(c.parallel ? "true" : "false"); },
                     [](RunConfig& c, const std::string& v) { c.parallel = to_bool("parallel", v); }});
    return t;
  }();
  return table;
}

}  // namespace detail

// Applies one `key = value` setting. Unknown keys are rejected.
inline void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : detail::fields()) {
    if (name == key) {
      field.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

// Flat `key = value` text; '#' starts a comment line.
inline void apply_config_text(RunConfig& config, const std::string& text,
                              const std::string& origin = "config") {
  const auto rows = io::lines(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string line = io::trim(rows[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ":" + std::to_string(i + 1) + ": expected 'key = value'");
    }
    try {
      apply_setting(config, io::trim(line.substr(0, eq)), io::trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw ConfigError(origin + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  apply_config_text(config, io::read_file(path), path.string());
}

// Canonical text of every serializable field.
inline std::string to_config_text(const RunConfig& config) {
  std::string out = "# traitfolio effective configuration\n";
  for (const auto& [name, field] : detail::fields()) {
    out += name;
    out += " = ";
    out += field.get(config);
    out += '\n';
  }
  return out;
}

inline std::uint64_t market_seed(const RunConfig& config) {
  return derive_seed(config.seed, "market");
}

inline std::uint64_t trait_seed(std::uint64_t master, Trait trait) {
  return derive_seed(master, "trait:" + std::string(trait_code(trait)));
}

// Loads or synthesizes the three indices. Synthetic series get months + 1
// levels so they cover the whole horizon.
inline MarketData resolve_market_data(const RunConfig& config) {
  if (config.source == DataSource::Csv) {
    if (config.csv_paths.size() != 3) {
      throw ConfigError("csv data needs three paths: stocks,property,interest");
    }
    for (const auto& p : config.csv_paths) {
      if (!std::filesystem::exists(p)) throw IoError("data file not found: '" + p + "'");
    }
    return MarketData{ingest_csv(config.csv_paths[0], IndexName::Stocks),
                      ingest_csv(config.csv_paths[1], IndexName::Property),
                      ingest_csv(config.csv_paths[2], IndexName::InterestRate)};
  }
  const std::uint64_t seed = market_seed(config);
  const std::size_t months = config.env.months + 1;
  const std::array<IndexName, 3> names{IndexName::Stocks, IndexName::Property,
                                       IndexName::InterestRate};
  std::vector<IndexSeries> series;
  for (std::size_t k = 0; k < 3; ++k) {
    SyntheticSpec spec{config.synthetic.drift[k], config.synthetic.volatility[k], months,
                       derive_seed(seed, to_string(names[k]))};
    series.push_back(synthesize_series(spec, names[k]));
  }
  return MarketData{series[0], series[1], series[2]};
}

}  // namespace traitfolio
