// Command-line front end: model validation, minimal-budget solving, kernel
// learning from sampled transitions, Monte-Carlo simulation, and the two
// stock experiments contrasting probability-one and expectation constraints.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmdp/augmented.hpp"
#include "cmdp/budget.hpp"
#include "cmdp/kernel.hpp"
#include "cmdp/mdp.hpp"
#include "cmdp/simulate.hpp"
#include "cmdp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cmdp;

namespace {

struct Options {
  std::string model_path;
  std::string builtin;
  double p_damage = -1.0;  // negative means "builtin default"
  int64_t delta = -1;      // negative means "subcommand default"
  double gamma = 1.0;
  double mu = 0.0;
  double delta_prob = 0.05;
  uint64_t seed = 1;
  int64_t episodes = 10000;
  int64_t max_steps = 100000;
  std::string out_dir;
  int threads = 1;
  int64_t samples_override = 0;
  std::vector<int64_t> c_values = {1, 3, 5, 10};
  std::string manifest_path;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("FileNotFound", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& dir, const std::string& name,
                const std::string& content) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw InputError("WriteFailed", "cannot write " + (dir / name).string());
  out << content;
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const ordered_json& config) {
  ordered_json manifest;
  manifest["tool"] = "cmdp";
  manifest["version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config;
  write_file(dir, "manifest.json", manifest.dump(2) + "\n");
}

Mdp resolve_model(const ordered_json& config) {
  if (config.contains("model"))
    return Mdp::from_json_text(read_file(config.at("model").get<std::string>()));
  const auto builtin = config.at("builtin").get<std::string>();
  if (builtin == "chain" || builtin == "chain-stochastic")
    return chain_mdp(config.at("p_damage").get<double>());
  if (builtin == "random") {
    const auto seed = config.at("seed").get<uint64_t>();
    RandomMdpConfig shape;
    shape.n_states = 2 + static_cast<int32_t>(substream_seed(seed, 0x73746174) % 5);
    shape.n_actions = 1 + static_cast<int32_t>(substream_seed(seed, 0x61637473) % 3);
    return random_mdp(shape, seed);
  }
  throw InputError("InvalidParameter", "unknown builtin model: " + builtin);
}

// Resolved model source for the manifest; builtin defaults are materialized
// so a replay does not depend on future default changes.
void put_model_source(ordered_json& config, const Options& opt,
                      const std::string& subcommand) {
  if (!opt.model_path.empty() && !opt.builtin.empty())
    throw InputError("InvalidParameter", "--model and --builtin are exclusive");
  if (!opt.model_path.empty()) {
    config["model"] = opt.model_path;
    return;
  }
  std::string builtin = opt.builtin;
  if (builtin.empty()) {
    if (subcommand == "experiment1" || subcommand == "experiment2")
      builtin = "chain";
    else
      throw InputError("InvalidParameter", "one of --model or --builtin is required");
  }
  config["builtin"] = builtin;
  if (builtin == "chain" || builtin == "chain-stochastic") {
    double p = opt.p_damage;
    if (p < 0.0) p = (builtin == "chain-stochastic") ? 0.6 : 1.0;
    if (subcommand == "experiment2" && opt.p_damage < 0.0) p = 0.6;
    config["p_damage"] = p;
  }
}

ordered_json stats_summary(const EpisodeStats& stats) {
  return ordered_json::parse(episode_stats_to_json_text(stats));
}

int run_validate(const ordered_json& config, const std::string& out_dir) {
  const Mdp model = resolve_model(config);
  ordered_json summary;
  summary["states"] = model.n_states();
  summary["actions"] = model.n_actions();
  summary["terminal"] = model.state_name(model.terminal());
  int64_t entries = 0;
  for (StateIdx s = 0; s < model.n_states(); ++s)
    for (ActionIdx a = 0; a < model.n_actions(); ++a)
      entries += static_cast<int64_t>(model.transitions(s, a).size());
  summary["kernel_entries"] = entries;
  std::cout << summary.dump(2) << "\n";
  if (!out_dir.empty()) {
    write_file(out_dir, "model.json", model.to_json_text());
    write_manifest(out_dir, "validate", config);
  }
  return 0;
}

int run_solve(const ordered_json& config, const std::string& out_dir) {
  const Mdp model = resolve_model(config);
  const int64_t delta = config.at("delta").get<int64_t>();
  const BudgetSolveResult result = solve_minimal_budget(model);

  ordered_json info;
  info["sweeps"] = result.sweeps;
  info["budget_cap"] = budget_cap(model);
  info["delta"] = delta;
  auto& unsafe = info["unsafe_states"] = ordered_json::array();
  for (StateIdx s : unsafe_states(result.table, delta))
    unsafe.push_back(model.state_name(s));

  write_file(out_dir, "ktable.json", budget_table_to_json_text(result.table, model));
  write_file(out_dir, "solve.json", info.dump(2) + "\n");
  write_manifest(out_dir, "solve", config);
  std::cout << "solved minimal budgets in " << result.sweeps << " sweeps; "
            << unsafe.size() << " unsafe state(s) at delta=" << delta << "\n";
  return 0;
}

int run_learn(const ordered_json& config, const std::string& out_dir) {
  const Mdp model = resolve_model(config);
  const double mu = config.at("mu").get<double>();
  const double delta_prob = config.at("delta_prob").get<double>();
  const auto seed = config.at("seed").get<uint64_t>();
  const auto samples_override = config.at("samples_override").get<int64_t>();

  const int64_t required =
      required_samples(model.n_states(), model.n_actions(), mu, delta_prob);
  const int64_t n = samples_override > 0 ? samples_override : required;

  const MdpSampler sampler(model);
  const EmpiricalKernel p_hat = build_empirical_kernel(sampler, sampler.dims(), n, seed);
  const bool consistent = is_consistent(p_hat, model);
  const Mdp surrogate =
      surrogate_mdp(p_hat, &model.state_names(), &model.action_names());
  const BudgetTable learned = solve_minimal_budget(surrogate).table;

  ordered_json info;
  info["required_samples"] = required;
  info["samples_used"] = n;
  info["consistent"] = consistent;
  write_file(out_dir, "kernel.json", empirical_kernel_to_json_text(p_hat, model));
  write_file(out_dir, "learned_ktable.json",
             budget_table_to_json_text(learned, model));
  write_file(out_dir, "learn.json", info.dump(2) + "\n");
  write_manifest(out_dir, "learn", config);

  std::cout << "required samples per (s,a): " << required << " (used " << n
            << ")\nempirical kernel is "
            << (consistent ? "consistent" : "NOT consistent")
            << " with the model\n";
  if (!consistent)
    std::cout << "warning: learned budgets may differ from the true ones\n";
  return 0;
}

int run_simulate(const ordered_json& config, const std::string& out_dir, int threads) {
  const Mdp model = resolve_model(config);
  const int64_t delta = config.at("delta").get<int64_t>();
  const double gamma = config.at("gamma").get<double>();
  const auto seed = config.at("seed").get<uint64_t>();
  const auto episodes = config.at("episodes").get<int64_t>();
  const auto max_steps = config.at("max_steps").get<int64_t>();

  const BudgetTable k_star = solve_minimal_budget(model).table;
  const AugmentedMdp aug = build_augmented(model, delta);
  const TrimmedViResult vi = trimmed_value_iteration(aug, k_star, gamma);
  const EpisodeStats stats =
      run_episodes(model, vi.policy, delta, episodes, seed, max_steps, threads);

  write_file(out_dir, "ktable.json", budget_table_to_json_text(k_star, model));
  write_file(out_dir, "policy.json", policy_to_json_text(vi.policy, model));
  write_file(out_dir, "values.json", values_to_json_text(vi, aug));
  write_file(out_dir, "stats.json", episode_stats_to_json_text(stats));
  write_file(out_dir, "damage_hist.csv", histogram_to_csv(stats.damage_histogram));
  write_file(out_dir, "return_hist.csv", histogram_to_csv(stats.return_histogram));
  write_manifest(out_dir, "simulate", config);

  std::cout << "simulated " << episodes << " episodes: mean return "
            << stats.mean_return << ", max damage " << stats.max_damage << "\n";
  if (!vi.converged) {
    ordered_json err;
    err["error"] = "NotConverged";
    err["message"] = "value iteration residual " + std::to_string(vi.residual) +
                     " after " + std::to_string(vi.iterations) + " sweeps";
    std::cerr << err.dump() << "\n";
    return 4;
  }
  return 0;
}

int run_experiment(const ordered_json& config, const std::string& out_dir,
                   int threads, bool damage_experiment) {
  const Mdp model = resolve_model(config);
  const double p_damage = config.at("p_damage").get<double>();
  const int64_t delta = config.at("delta").get<int64_t>();
  const auto seed = config.at("seed").get<uint64_t>();
  const auto episodes = config.at("episodes").get<int64_t>();
  const auto max_steps = config.at("max_steps").get<int64_t>();
  const auto c_values = config.at("c_values").get<std::vector<int64_t>>();
  const std::string subcommand = damage_experiment ? "experiment1" : "experiment2";

  const BudgetTable k_star = solve_minimal_budget(model).table;
  const AugmentedMdp aug = build_augmented(model, delta);
  const TrimmedViResult vi = trimmed_value_iteration(aug, k_star);

  ordered_json summary;
  summary["delta"] = delta;
  summary["p_damage"] = p_damage;
  summary["episodes"] = episodes;

  const EpisodeStats assured = run_episodes(model, vi.policy, delta, episodes,
                                            substream_seed(seed, 0), max_steps, threads);
  summary["assured"] = stats_summary(assured);
  const std::string prefix = damage_experiment ? "damage_hist_" : "return_hist_";
  write_file(out_dir, prefix + "assured.csv",
             histogram_to_csv(damage_experiment ? assured.damage_histogram
                                                : assured.return_histogram));

  auto& baselines = summary["expectation_constrained"] = ordered_json::array();
  for (size_t i = 0; i < c_values.size(); ++i) {
    const auto c = c_values[i];
    const StationaryPolicy baseline =
        expectation_constrained_policy(static_cast<double>(c), p_damage);
    const EpisodeStats stats =
        run_episodes(model, baseline, delta, episodes,
                     substream_seed(seed, i + 1), max_steps, threads);
    ordered_json entry;
    entry["c"] = c;
    entry["stats"] = stats_summary(stats);
    baselines.push_back(std::move(entry));
    write_file(out_dir, prefix + "expectation_c" + std::to_string(c) + ".csv",
               histogram_to_csv(damage_experiment ? stats.damage_histogram
                                                  : stats.return_histogram));
  }

  write_file(out_dir, "summary.json", summary.dump(2) + "\n");
  write_manifest(out_dir, subcommand, config);
  std::cout << subcommand << ": assured policy mean return "
            << assured.mean_return << ", max damage " << assured.max_damage
            << " over " << episodes << " episodes\n";
  return 0;
}

int dispatch(const std::string& subcommand, const ordered_json& config,
             const std::string& out_dir, int threads) {
  if (subcommand == "validate") return run_validate(config, out_dir);
  if (subcommand == "solve") return run_solve(config, out_dir);
  if (subcommand == "learn") return run_learn(config, out_dir);
  if (subcommand == "simulate") return run_simulate(config, out_dir, threads);
  if (subcommand == "experiment1") return run_experiment(config, out_dir, threads, true);
  if (subcommand == "experiment2") return run_experiment(config, out_dir, threads, false);
  throw InputError("InvalidParameter", "unknown subcommand in manifest: " + subcommand);
}

int run_replay(const Options& opt) {
  const auto manifest = ordered_json::parse(read_file(opt.manifest_path));
  if (!manifest.contains("subcommand") || !manifest.contains("config"))
    throw InputError("ParseError", "manifest lacks subcommand or config");
  return dispatch(manifest.at("subcommand").get<std::string>(),
                  manifest.at("config"), opt.out_dir, opt.threads);
}

void add_model_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--model", opt.model_path, "path to a model JSON file");
  cmd->add_option("--builtin", opt.builtin,
                  "builtin model: chain, chain-stochastic, or random");
  cmd->add_option("--p-damage", opt.p_damage,
                  "damage probability for the chain builtins");
  cmd->add_option("--seed", opt.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimal damage budgets and feasible policies for MDPs under "
               "probability-one damage constraints"};
  app.require_subcommand(1);
  Options opt;

  auto* validate = app.add_subcommand("validate", "check a model description");
  add_model_flags(validate, opt);
  validate->add_option("--out", opt.out_dir, "output directory (optional)");

  auto* solve = app.add_subcommand("solve", "compute the minimal budget table");
  add_model_flags(solve, opt);
  solve->add_option("--delta", opt.delta, "budget for the unsafe-state report");
  solve->add_option("--out", opt.out_dir, "output directory")->required();

  auto* learn = app.add_subcommand("learn", "estimate budgets from sampled transitions");
  add_model_flags(learn, opt);
  learn->add_option("--mu", opt.mu, "support floor of the true kernel")->required();
  learn->add_option("--delta-prob", opt.delta_prob, "allowed failure probability");
  learn->add_option("--samples-override", opt.samples_override,
                    "sample count per (s,a), overriding the bound");
  learn->add_option("--out", opt.out_dir, "output directory")->required();

  auto* simulate = app.add_subcommand("simulate", "roll out the optimal feasible policy");
  add_model_flags(simulate, opt);
  simulate->add_option("--delta", opt.delta, "total damage budget");
  simulate->add_option("--gamma", opt.gamma, "discount factor");
  simulate->add_option("--episodes", opt.episodes, "episode count");
  simulate->add_option("--max-steps", opt.max_steps, "per-episode step cap");
  simulate->add_option("--threads", opt.threads, "worker threads");
  simulate->add_option("--out", opt.out_dir, "output directory")->required();

  for (const char* name : {"experiment1", "experiment2"}) {
    auto* cmd = app.add_subcommand(
        name, std::string(name) == "experiment1"
                  ? "damage histograms: assured vs expectation-constrained"
                  : "return histograms on the stochastic-damage chain");
    add_model_flags(cmd, opt);
    cmd->add_option("--delta", opt.delta, "total damage budget");
    cmd->add_option("--episodes", opt.episodes, "episode count");
    cmd->add_option("--max-steps", opt.max_steps, "per-episode step cap");
    cmd->add_option("--threads", opt.threads, "worker threads");
    cmd->add_option("--c-values", opt.c_values,
                    "expected-damage bounds for the baselines");
    cmd->add_option("--out", opt.out_dir, "output directory")->required();
  }

  auto* replay = app.add_subcommand("replay", "re-run a recorded manifest");
  replay->add_option("manifest", opt.manifest_path, "path to manifest.json")->required();
  replay->add_option("--threads", opt.threads, "worker threads");
  replay->add_option("--out", opt.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay->parsed()) return run_replay(opt);

    const std::string subcommand = app.get_subcommands().front()->get_name();
    ordered_json config;
    put_model_source(config, opt, subcommand);
    config["seed"] = opt.seed;
    if (subcommand == "solve") config["delta"] = opt.delta < 0 ? 0 : opt.delta;
    if (subcommand == "learn") {
      config["mu"] = opt.mu;
      config["delta_prob"] = opt.delta_prob;
      config["samples_override"] = opt.samples_override;
    }
    if (subcommand == "simulate") {
      config["delta"] = opt.delta < 0 ? 5 : opt.delta;
      config["gamma"] = opt.gamma;
      config["episodes"] = opt.episodes;
      config["max_steps"] = opt.max_steps;
    }
    if (subcommand == "experiment1" || subcommand == "experiment2") {
      if (!config.contains("p_damage"))
        config["p_damage"] = opt.p_damage < 0.0
                                 ? (subcommand == "experiment2" ? 0.6 : 1.0)
                                 : opt.p_damage;
      config["delta"] = opt.delta < 0 ? 5 : opt.delta;
      config["episodes"] = opt.episodes;
      config["max_steps"] = opt.max_steps;
      config["c_values"] = opt.c_values;
    }
    return dispatch(subcommand, config, opt.out_dir, opt.threads);
  } catch (const InfeasibleError& e) {
    ordered_json err{{"error", e.code()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const Error& e) {
    ordered_json err{{"error", e.code()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    ordered_json err{{"error", "ParseError"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    ordered_json err{{"error", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
