#pragma once

#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "traitfolio/config.hpp"
#include "traitfolio/ddpg.hpp"
#include "traitfolio/env.hpp"
#include "traitfolio/error.hpp"
#include "traitfolio/market_data.hpp"
#include "traitfolio/nn.hpp"
#include "traitfolio/persona.hpp"
#include "traitfolio/report.hpp"

namespace traitfolio::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kNumericalError = 4 };

inline int exit_code_for(const Error& e) {
  switch (e.category()) {
    case Error::Category::Config: return kConfigError;
    case Error::Category::Io: return kIoError;
    case Error::Category::Numerical: return kNumericalError;
  }
  return kConfigError;
}

// Output layout under RunConfig::out.
struct Layout {
  fs::path root;

  fs::path config_snapshot() const { return root / "effective_config.cfg"; }
  fs::path data_dir() const { return root / "data"; }
  fs::path checkpoint_dir(Trait t) const { return root / "checkpoints" / std::string(trait_code(t)); }
  fs::path training_log(Trait t) const {
    return root / "logs" / (std::string(trait_code(t)) + "_training.csv");
  }
  fs::path reports_dir() const { return root / "reports"; }
  fs::path advice_dir() const { return root / "advice"; }
};

inline void write_snapshot(const RunConfig& config) {
  io::write_file(Layout{config.out}.config_snapshot(), to_config_text(config));
}

inline std::shared_ptr<const PreparedMarket> load_market(const RunConfig& config) {
  return prepare_market(resolve_market_data(config), config.env.rsi_periods);
}

// ---------------------------------------------------------------------------
// data

inline void cmd_data(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto market = load_market(config);
  const Layout layout{config.out};
  write_csv(market->data.stocks, layout.data_dir() / "stocks.csv");
  write_csv(market->data.property, layout.data_dir() / "property.csv");
  write_csv(market->data.interest, layout.data_dir() / "interest.csv");
  io::write_file(layout.data_dir() / "indicators.csv", indicators_to_csv(market->indicators));
  write_snapshot(config);
  log << "wrote " << market->data.stocks.size() << " months of index data to "
      << layout.data_dir().string() << "\n";
}

// ---------------------------------------------------------------------------
// train

inline nlohmann::ordered_json agent_manifest(const ddpg::Agent& agent, Trait trait,
                                             const RunConfig& config) {
  nlohmann::ordered_json doc;
  doc["trait"] = trait_code(trait);
  doc["prior"] = agent.prior().weights;
  doc["prior_mode"] = to_string(config.prior_mode);
  doc["seed"] = agent.seed();
  const auto& a = agent.config();
  doc["hidden"] = a.hidden;
  doc["lambda"] = a.lambda;
  doc["actor_lr"] = a.actor_lr;
  doc["critic_lr"] = a.critic_lr;
  doc["tau"] = a.tau;
  doc["gamma"] = a.gamma;
  doc["batch_size"] = a.batch_size;
  doc["iterations"] = a.iterations;
  doc["regularizer"] = ddpg::to_string(a.regularizer);
  return doc;
}

struct TrainOutcome {
  Trait trait;
  ddpg::TrainingLog log;
};

inline TrainOutcome train_trait(const RunConfig& config, Trait trait,
                                const std::shared_ptr<const PreparedMarket>& market) {
  const std::uint64_t seed = trait_seed(config.seed, trait);
  ddpg::Agent agent(shipped_prior(trait, config.prior_mode), config.agent, seed);
  const EnvConfig env_config = config.env;
  ddpg::Trainer trainer(agent, [&] { return AssetEnv(env_config, market); },
                        derive_seed(seed, "trainer"));
  TrainOutcome outcome{trait, trainer.train(config.agent.iterations)};

  const Layout layout{config.out};
  const fs::path dir = layout.checkpoint_dir(trait);
  nn::save_checkpoint(agent.actor(), dir / "actor.json");
  nn::save_checkpoint(agent.critic(), dir / "critic.json");
  nn::save_checkpoint(agent.actor_target(), dir / "actor_target.json");
  nn::save_checkpoint(agent.critic_target(), dir / "critic_target.json");
  io::write_file(dir / "manifest.json", agent_manifest(agent, trait, config).dump(2) + "\n");
  io::write_file(layout.training_log(trait), ddpg::training_log_to_csv(outcome.log));
  return outcome;
}

inline std::vector<TrainOutcome> cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto market = load_market(config);
  write_snapshot(config);
  std::vector<TrainOutcome> outcomes;
  if (config.parallel) {
    std::vector<std::future<TrainOutcome>> jobs;
    for (Trait t : config.traits) {
      jobs.push_back(std::async(std::launch::async, [&, t] { return train_trait(config, t, market); }));
    }
    for (auto& job : jobs) outcomes.push_back(job.get());
  } else {
    for (Trait t : config.traits) outcomes.push_back(train_trait(config, t, market));
  }
  for (const auto& o : outcomes) {
    const double last_l = o.log.empty() ? 0.0 : o.log.back().regularization;
    log << "trained " << trait_name(o.trait) << ": " << o.log.size()
        << " iterations, final L = " << io::format_double(last_l, 6) << "\n";
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// evaluate / advise

inline nn::DenseNet load_actor(const RunConfig& config, Trait trait) {
  const fs::path path = Layout{config.out}.checkpoint_dir(trait) / "actor.json";
  if (!fs::exists(path)) {
    throw ConfigError("missing checkpoint for " + std::string(trait_name(trait)) + ": '" +
                      path.string() + "'");
  }
  auto net = nn::load_checkpoint(path, std::nullopt, nn::OutputHead::Softmax);
  if (net.input_size() != kObservationSize || net.output_size() != kNumAssets) {
    throw ParseError(path.string() + ": actor topology does not match the environment");
  }
  return net;
}

inline nlohmann::ordered_json brief(const EvaluationReport& r) {
  nlohmann::ordered_json doc;
  doc["final_net_worth"] = r.final_net_worth;
  doc["cagr"] = r.cagr ? nlohmann::ordered_json(*r.cagr) : nlohmann::ordered_json();
  doc["total_invested"] = r.total_invested;
  return doc;
}

struct Evaluation {
  EvaluationReport baseline;
  std::vector<std::pair<Trait, EvaluationReport>> traits;
};

inline Evaluation cmd_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate();
  std::vector<std::pair<Trait, nn::DenseNet>> actors;
  for (Trait t : config.traits) actors.emplace_back(t, load_actor(config, t));
  const auto market = load_market(config);
  const Layout layout{config.out};
  write_snapshot(config);

  Evaluation result;
  result.baseline = rollout(monetary_baseline(), config.env, market, "baseline");
  emit_report(result.baseline, nullptr, layout.reports_dir(), "baseline");

  nlohmann::ordered_json summary;
  summary["baseline"] = brief(result.baseline);
  nlohmann::ordered_json per_trait;
  for (auto& [trait, actor] : actors) {
    auto report = rollout(ddpg::actor_policy(std::move(actor)), config.env, market,
                          std::string(trait_name(trait)));
    std::optional<ddpg::TrainingLog> training;
    const fs::path log_path = layout.training_log(trait);
    if (fs::exists(log_path)) training = ddpg::read_training_log_csv(log_path);
    emit_report(report, training ? &*training : nullptr, layout.reports_dir(),
                std::string(trait_code(trait)));
    per_trait[std::string(trait_code(trait))] = brief(report);
    log << trait_name(trait) << ": final net worth " << io::format_double(report.final_net_worth / 1e6, 4)
        << "M NOK\n";
    result.traits.emplace_back(trait, std::move(report));
  }
  summary["traits"] = per_trait;
  io::write_file(layout.reports_dir() / "summary.json", summary.dump(2) + "\n");
  log << "baseline (all stocks): final net worth "
      << io::format_double(result.baseline.final_net_worth / 1e6, 4) << "M NOK\n";
  return result;
}

inline EvaluationReport cmd_advise(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (!config.profile) throw ConfigError("advise needs --profile O,C,E,A,N");
  const auto weights = normalize_profile(*config.profile);
  std::array<Policy, kNumTraits> policies;
  for (std::size_t k = 0; k < kNumTraits; ++k) {
    policies[k] = ddpg::actor_policy(load_actor(config, kAllTraits[k]));
  }
  const auto market = load_market(config);
  write_snapshot(config);
  auto report = rollout(
      [&](const Observation& o) { return aggregate_policy(weights, policies, o); }, config.env,
      market, "advice");
  emit_report(report, nullptr, Layout{config.out}.advice_dir(), "advice");
  log << "advice: final net worth " << io::format_double(report.final_net_worth / 1e6, 4)
      << "M NOK\n";
  return report;
}

// ---------------------------------------------------------------------------
// Argument handling

// Parses argv into a command name and effective config, then runs it.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Personality-regularized investment agents"};
  app.require_subcommand(1);

  std::string config_path, seed, out_dir, trait, iterations, hidden, lambda, profile, csv;
  bool synthetic = false;
  bool parallel = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--synthetic", synthetic, "use synthetic index data");
    sub->add_option("--csv", csv, "stocks,property,interest CSV paths");
  };
  auto* data = app.add_subcommand("data", "write normalized index series and indicators");
  add_common(data);
  auto* train = app.add_subcommand("train", "train the trait agents");
  add_common(train);
  train->add_option("--trait", trait, "trait codes, e.g. E or O,C,N (default all)");
  train->add_option("--iterations", iterations, "training iterations");
  train->add_option("--hidden", hidden, "hidden layer width");
  train->add_option("--lambda", lambda, "prior regularization weight");
  train->add_flag("--parallel", parallel, "train traits concurrently");
  auto* evaluate = app.add_subcommand("evaluate", "roll out trained agents and the baseline");
  add_common(evaluate);
  evaluate->add_option("--trait", trait, "trait codes (default all)");
  auto* advise = app.add_subcommand("advise", "aggregate the agents for a personality profile");
  add_common(advise);
  advise->add_option("--profile", profile, "five scores O,C,E,A,N in [-1,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw IoError("config file not found: '" + config_path + "'");
      apply_config_file(config, config_path);
    }
    if (!seed.empty()) apply_setting(config, "seed", seed);
    if (!out_dir.empty()) config.out = out_dir;
    if (synthetic && !csv.empty()) throw ConfigError("--synthetic and --csv are exclusive");
    if (synthetic) apply_setting(config, "data.source", "synthetic");
    if (!csv.empty()) {
      apply_setting(config, "data.source", "csv");
      apply_setting(config, "data.csv", csv);
    }
    if (!trait.empty()) apply_setting(config, "traits", trait);
    if (!iterations.empty()) apply_setting(config, "agent.iterations", iterations);
    if (!hidden.empty()) apply_setting(config, "agent.hidden", hidden);
    if (!lambda.empty()) apply_setting(config, "agent.lambda", lambda);
    if (!profile.empty()) apply_setting(config, "profile", profile);
    if (parallel) config.parallel = true;

    if (data->parsed()) cmd_data(config, out);
    else if (train->parsed()) cmd_train(config, out);
    else if (evaluate->parsed()) cmd_evaluate(config, out);
    else if (advise->parsed()) cmd_advise(config, out);
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace traitfolio::cli
