// Acceptance suite: one check per release criterion, one pass/fail line each.
// Criterion 9 shells out to the command-line tool; pass its location with
// --cli <path> (or the CMDP_CLI environment variable).

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cmdp/augmented.hpp"
#include "cmdp/budget.hpp"
#include "cmdp/kernel.hpp"
#include "cmdp/mdp.hpp"
#include "cmdp/simulate.hpp"
#include "models.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cmdp;
using Clock = std::chrono::steady_clock;

namespace {

struct CheckFailure {
  std::string message;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure{message};
}

std::string g_cli_path;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// The 500-model random corpus shared by criteria 2-4: states 2..6,
// actions 1..3, damage flags random, support floor 0.1.
std::vector<Mdp> random_corpus() {
  std::vector<Mdp> corpus;
  corpus.reserve(500);
  for (int i = 0; i < 500; ++i) {
    RandomMdpConfig config;
    config.n_states = 2 + (i % 5);
    config.n_actions = 1 + (i % 3);
    corpus.push_back(random_mdp(config, 1000 + static_cast<uint64_t>(i)));
  }
  return corpus;
}

std::vector<Mdp> named_models() {
  return {chain_mdp(0.3),
          chain_mdp(0.6),
          chain_mdp(1.0),
          testutil::chain_both_damaging(),
          testutil::two_unavoidable_damages(),
          testutil::damage_free_random(3)};
}

double sample_std(const std::map<int64_t, int64_t>& histogram, double mean,
                  int64_t n) {
  double ss = 0.0;
  for (const auto& [value, count] : histogram)
    ss += static_cast<double>(count) * (static_cast<double>(value) - mean) *
          (static_cast<double>(value) - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

AugmentedPolicy assured_policy(const Mdp& m, int64_t delta) {
  const auto k_star = solve_minimal_budget(m).table;
  return trimmed_value_iteration(build_augmented(m, delta), k_star).policy;
}

std::string fmt(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

// --- criterion bodies -------------------------------------------------------

void criterion_1(std::ostringstream& note) {
  const auto start = Clock::now();
  for (double p : {0.3, 0.6, 1.0}) {
    const Mdp m = chain_mdp(p);
    const auto solved = solve_minimal_budget(m).table;
    require(solved.at(0, 0) == Budget::finite(1),
            "k*(circle,left) != 1 at p=" + fmt(p));
    require(solved.at(0, 1) == Budget::finite(0),
            "k*(circle,right) != 0 at p=" + fmt(p));
    require(solved.at(1, 0) == Budget::finite(0) &&
                solved.at(1, 1) == Budget::finite(0),
            "terminal rows not zero at p=" + fmt(p));
    require(solved == safety_game_oracle(m, budget_cap(m)),
            "solver disagrees with the safety game at p=" + fmt(p));
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 1e-3, "runtime " + fmt(elapsed * 1e3) + " ms >= 1 ms");
  note << "3 damage probabilities, " << fmt(elapsed * 1e3) << " ms";
}

void criterion_2(std::ostringstream& note) {
  const auto start = Clock::now();
  const auto corpus = random_corpus();
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto solved = solve_minimal_budget(corpus[i]).table;
    const auto oracle = safety_game_oracle(corpus[i], budget_cap(corpus[i]));
    require(solved == oracle,
            "solver and safety game disagree on corpus model " + std::to_string(i));
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s >= 10 s");
  note << corpus.size() << " models, " << fmt(elapsed) << " s";
}

void criterion_3(std::ostringstream& note) {
  auto corpus = named_models();
  for (auto& m : random_corpus()) corpus.push_back(std::move(m));

  // monotonicity on >= 1,000 ordered table pairs
  SplitMix64 rng(0xacce97);
  int pairs = 0;
  for (const Mdp& m : corpus) {
    const auto cap = static_cast<uint64_t>(budget_cap(m));
    for (int rep = 0; rep < 2; ++rep) {
      BudgetTable k1(m);
      BudgetTable k2(m);
      for (StateIdx s = 0; s < m.n_states(); ++s) {
        for (ActionIdx a = 0; a < m.n_actions(); ++a) {
          const Budget low = rng.next_bernoulli(0.15)
                                 ? Budget::infinity()
                                 : Budget::finite(rng.next_below(cap + 1));
          k1.set(s, a, low);
          k2.set(s, a, rng.next_bernoulli(0.1) ? Budget::infinity()
                                               : low.plus(rng.next_below(3)));
        }
      }
      const BudgetTable t1 = apply_budget_operator(m, k1);
      const BudgetTable t2 = apply_budget_operator(m, k2);
      for (StateIdx s = 0; s < m.n_states(); ++s)
        for (ActionIdx a = 0; a < m.n_actions(); ++a)
          require(t1.at(s, a) <= t2.at(s, a), "operator is not monotone");
      ++pairs;
    }
  }
  require(pairs >= 1000, "fewer than 1000 table pairs exercised");

  int worst_stable = 0;
  int worst_model = -1;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Mdp& m = corpus[i];
    const auto result = solve_minimal_budget(m);
    require(apply_budget_operator(m, result.table) == result.table,
            "solved table is not a fixed point on model " + std::to_string(i));
    for (size_t n = 0; n + 1 < result.iterates.size(); ++n)
      for (StateIdx s = 0; s < m.n_states(); ++s)
        for (ActionIdx a = 0; a < m.n_actions(); ++a)
          require(result.iterates[n].at(s, a) <= result.iterates[n + 1].at(s, a),
                  "iterates are not entrywise nondecreasing on model " +
                      std::to_string(i));
    int first_stable = static_cast<int>(result.iterates.size());
    for (size_t n = 0; n + 1 < result.iterates.size(); ++n)
      if (result.iterates[n] == result.iterates[n + 1]) {
        first_stable = static_cast<int>(n);
        break;
      }
    if (first_stable > worst_stable) {
      worst_stable = first_stable;
      worst_model = static_cast<int>(i);
    }
    require(first_stable <= m.n_states() + 2,
            "model " + std::to_string(i) + " stabilized at sweep " +
                std::to_string(first_stable) + " > |S|+2 = " +
                std::to_string(m.n_states() + 2) +
                " (infinite budgets fed through a cycle with damage-free edges "
                "climb slower than one unit per sweep)");
  }
  note << pairs << " pairs, " << corpus.size() << " solved models, worst stabilization sweep "
       << worst_stable << " (model " << worst_model << ")";
}

void criterion_4(std::ostringstream& note) {
  auto corpus = named_models();
  for (auto& m : random_corpus()) corpus.push_back(std::move(m));
  int64_t triples = 0;
  for (const Mdp& m : corpus) {
    const auto k_star = solve_minimal_budget(m).table;
    for (StateIdx s = 0; s < m.n_states(); ++s) {
      for (ActionIdx a = 0; a < m.n_actions(); ++a) {
        for (int64_t k = 0; k <= budget_cap(m); ++k) {
          ++triples;
          if (barrier(k_star, s, k, a) == Safety::Safe)
            require(barrier(k_star, s, k + 1, a) == Safety::Safe,
                    "safe at k but unsafe at k+1");
          else if (k > 0)
            require(barrier(k_star, s, k - 1, a) == Safety::Unsafe,
                    "unsafe at k but safe at k-1");
        }
      }
    }
  }
  note << triples << " (s,k,a) triples over " << corpus.size() << " models";
}

void criterion_5(std::ostringstream& note) {
  // consistency implies exact recovery, on the chain and on random models
  int consistent_runs = 0;
  {
    const Mdp truth = chain_mdp(0.6);
    const MdpSampler sampler(truth);
    const BudgetTable true_table = solve_minimal_budget(truth).table;
    const int64_t n = required_samples(2, 2, 0.4, 0.05);
    for (int trial = 0; trial < 300; ++trial) {
      const auto p_hat = build_empirical_kernel(sampler, sampler.dims(), n,
                                                substream_seed(0x51, trial));
      if (!is_consistent(p_hat, truth)) continue;
      ++consistent_runs;
      require(solve_minimal_budget(surrogate_mdp(p_hat)).table == true_table,
              "consistent chain kernel produced a different budget table");
    }
  }
  for (uint64_t model_seed = 0; model_seed < 60; ++model_seed) {
    RandomMdpConfig config;
    config.n_states = 5;
    config.n_actions = 2;
    config.prob_units = 5;  // support floor 0.2
    const Mdp truth = random_mdp(config, model_seed);
    const MdpSampler sampler(truth);
    const BudgetTable true_table = solve_minimal_budget(truth).table;
    const int64_t n = required_samples(5, 2, 0.2, 0.05);
    for (int trial = 0; trial < 3; ++trial) {
      const auto p_hat = build_empirical_kernel(
          sampler, sampler.dims(), n, substream_seed(0x52, model_seed, trial));
      if (!is_consistent(p_hat, truth)) continue;
      ++consistent_runs;
      require(solve_minimal_budget(surrogate_mdp(p_hat)).table == true_table,
              "consistent random kernel produced a different budget table");
    }
  }
  require(consistent_runs > 300, "too few consistent draws to be meaningful");

  // empirical inconsistency rate at the bound's sample size
  const Mdp truth = chain_mdp(0.6);
  const MdpSampler sampler(truth);
  const int64_t n = required_samples(2, 2, 0.4, 0.05);
  const int trials = 1000;
  int inconsistent = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto p_hat = build_empirical_kernel(sampler, sampler.dims(), n,
                                              substream_seed(0x53, trial));
    if (!is_consistent(p_hat, truth)) ++inconsistent;
  }
  const double rate = static_cast<double>(inconsistent) / trials;
  const double bound = 0.05 + 2.0 * std::sqrt(0.05 / trials);
  require(rate <= bound,
          "inconsistency rate " + fmt(rate) + " exceeds " + fmt(bound));
  note << consistent_runs << " consistent recoveries, rate " << fmt(rate)
       << " <= " << fmt(bound) << " over " << trials << " builds (N=" << n << ")";
}

void criterion_6(std::ostringstream& note) {
  const auto start = Clock::now();
  const int64_t episodes = 10000;
  const Mdp m = chain_mdp(1.0);
  const AugmentedPolicy policy = assured_policy(m, 5);

  const EpisodeStats assured = run_episodes(m, policy, 5, episodes, 0xE1, 100000);
  require(assured.n_truncated == 0, "assured episodes were truncated");
  require(assured.damage_histogram.size() == 1 &&
              assured.damage_histogram.count(5) == 1 &&
              assured.damage_histogram.at(5) == episodes,
          "assured damage histogram is not a point mass at 5");

  const StationaryPolicy baseline = expectation_constrained_policy(5.0, 1.0);
  const EpisodeStats spread = run_episodes(m, baseline, 5, episodes, 0xE2, 100000);
  require(spread.n_truncated == 0, "baseline episodes were truncated");
  const double se =
      sample_std(spread.damage_histogram, spread.mean_damage, episodes) /
      std::sqrt(static_cast<double>(episodes));
  require(std::abs(spread.mean_damage - 5.0) <= 3.0 * se,
          "baseline mean damage " + fmt(spread.mean_damage) +
              " deviates from 5 by more than 3 standard errors (" + fmt(se) + ")");
  require(spread.max_damage > 5, "baseline never exceeded the budget");
  int64_t mass_above = 0;
  for (const auto& [value, count] : spread.damage_histogram)
    if (value > 5) mass_above += count;
  require(mass_above > 0, "no baseline mass above damage 5");

  const double elapsed = seconds_since(start);
  require(elapsed < 5.0, "runtime " + fmt(elapsed) + " s >= 5 s");
  note << "assured {5:" << episodes << "}, baseline mean "
       << fmt(spread.mean_damage) << " (3se=" << fmt(3 * se) << "), mass>5: "
       << mass_above << ", " << fmt(elapsed) << " s";
}

void criterion_7(std::ostringstream& note) {
  const int64_t episodes = 10000;
  const Mdp m = chain_mdp(0.6);
  const AugmentedPolicy policy = assured_policy(m, 5);

  const EpisodeStats stats = run_episodes(m, policy, 5, episodes, 0xE7, 100000);
  require(stats.n_truncated == 0, "episodes were truncated");
  require(stats.min_return >= 5.0, "a return fell below 5");
  require(stats.max_damage <= 5, "a constraint violation occurred");

  const double exact_mean = testutil::evaluate_augmented_policy_exact(m, 5, policy, 0);
  require(std::abs(exact_mean - 25.0 / 3.0) < 1e-9,
          "expectation oracle drifted from the closed form 25/3");
  const double se = sample_std(stats.return_histogram, stats.mean_return, episodes) /
                    std::sqrt(static_cast<double>(episodes));
  require(std::abs(stats.mean_return - exact_mean) <= 3.0 * se,
          "mean return " + fmt(stats.mean_return) + " deviates from the exact " +
              fmt(exact_mean) + " by more than 3 standard errors (" + fmt(se) + ")");
  note << "min return " << fmt(stats.min_return) << ", max damage "
       << stats.max_damage << ", mean " << fmt(stats.mean_return) << " vs exact "
       << fmt(exact_mean) << " (3se=" << fmt(3 * se) << ")";
}

void criterion_8(std::ostringstream& note) {
  const auto start = Clock::now();
  std::vector<std::pair<Mdp, int64_t>> cases;
  for (double p : {1.0, 0.6})
    for (int64_t delta = 0; delta <= 3; ++delta) cases.push_back({chain_mdp(p), delta});
  for (int32_t n_states = 2; n_states <= 4; ++n_states)
    for (int32_t n_actions = 1; n_actions <= 2; ++n_actions)
      for (int64_t delta = 0; delta <= 3; ++delta)
        for (uint64_t seed = 0; seed < 2; ++seed) {
          RandomMdpConfig config;
          config.n_states = n_states;
          config.n_actions = n_actions;
          cases.push_back(
              {random_mdp(config, substream_seed(0x88, n_states * 16 + n_actions,
                                                 delta * 8 + seed)),
               delta});
        }

  int evaluated = 0;
  for (size_t i = 0; i < cases.size(); ++i) {
    const auto& [m, delta] = cases[i];
    const auto k_star = solve_minimal_budget(m).table;
    const auto best = testutil::best_enumerated_value(m, k_star, delta, 0);
    const AugmentedMdp aug = build_augmented(m, delta);
    if (!best) {
      bool threw = false;
      try {
        trimmed_value_iteration(aug, k_star);
      } catch (const InfeasibleError&) {
        threw = true;
      }
      require(threw, "solver accepted a start the enumeration finds infeasible");
      continue;
    }
    const auto result = trimmed_value_iteration(aug, k_star);
    const double vi_value = result.values[aug.index_of(0, delta)];
    require(std::abs(vi_value - *best) <= 1e-6,
            "case " + std::to_string(i) + ": trimmed value " + fmt(vi_value) +
                " != enumerated optimum " + fmt(*best));
    ++evaluated;
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 30.0, "runtime " + fmt(elapsed) + " s >= 30 s");
  note << evaluated << " feasible cases of " << cases.size() << ", "
       << fmt(elapsed) << " s";
}

// --- criterion 9: CLI determinism and replay --------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  return files;
}

int run_cli(const std::string& args) {
  const std::string command = g_cli_path + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_9(std::ostringstream& note) {
  require(fs::exists(g_cli_path), "CLI binary not found at '" + g_cli_path +
                                      "' (pass --cli <path>)");
  const fs::path scratch =
      fs::temp_directory_path() / ("cmdp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::string exp = "experiment1 --episodes 2000 --seed 77 ";
  require(run_cli(exp + "--threads 1 --out " + (scratch / "a").string()) == 0,
          "experiment1 run failed");
  require(run_cli(exp + "--threads 4 --out " + (scratch / "b").string()) == 0,
          "threaded experiment1 run failed");
  require(dir_contents(scratch / "a") == dir_contents(scratch / "b"),
          "outputs differ across --threads");
  require(run_cli("replay " + (scratch / "a" / "manifest.json").string() +
                  " --threads 2 --out " + (scratch / "c").string()) == 0,
          "replay failed");
  require(dir_contents(scratch / "a") == dir_contents(scratch / "c"),
          "replay is not byte-identical");

  require(run_cli("solve --builtin random --seed 42 --delta 2 --out " +
                  (scratch / "s1").string()) == 0,
          "solve run failed");
  require(run_cli("replay " + (scratch / "s1" / "manifest.json").string() +
                  " --out " + (scratch / "s2").string()) == 0,
          "solve replay failed");
  require(dir_contents(scratch / "s1") == dir_contents(scratch / "s2"),
          "solve replay is not byte-identical");

  const size_t n_files = dir_contents(scratch / "a").size();
  fs::remove_all(scratch);
  note << "experiment1 x3 (" << n_files << " files each) and solve x2 byte-identical";
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];
  if (g_cli_path.empty()) {
    const char* env = std::getenv("CMDP_CLI");
    g_cli_path = env ? env : "./cmdp";
  }

  struct Criterion {
    int id;
    const char* title;
    std::function<void(std::ostringstream&)> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "minimal budget on the example chain", criterion_1},
      {2, "fixed-point iteration matches the safety game on 500 random models",
       criterion_2},
      {3, "operator laws: monotone, fixed point, iterate stabilization",
       criterion_3},
      {4, "barrier monotonicity, exhaustive", criterion_4},
      {5, "consistent kernels recover the true budgets; failure rate in bound",
       criterion_5},
      {6, "experiment I: damage histograms under both constraint types",
       criterion_6},
      {7, "experiment II: returns on the stochastic chain", criterion_7},
      {8, "trimmed value iteration matches exhaustive policy enumeration",
       criterion_8},
      {9, "CLI determinism and manifest replay", criterion_9},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = Clock::now();
    std::ostringstream detail;
    try {
      criterion.body(detail);
      std::printf("[PASS] C%d %s — %s (%.1f ms)\n", criterion.id, criterion.title,
                  detail.str().c_str(), seconds_since(start) * 1e3);
    } catch (const CheckFailure& failure) {
      std::printf("[FAIL] C%d %s — %s\n", criterion.id, criterion.title,
                  failure.message.c_str());
      ++failures;
    } catch (const std::exception& e) {
      std::printf("[FAIL] C%d %s — unexpected exception: %s\n", criterion.id,
                  criterion.title, e.what());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    return 0;
  }
  std::printf("acceptance: %d of %zu criteria failed\n", failures, criteria.size());
  return 1;
}
