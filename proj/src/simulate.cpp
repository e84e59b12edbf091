#include "cmdp/simulate.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace cmdp {

ActionIdx StationaryPolicy::sample(StateIdx s, SplitMix64& rng) const {
  if (s < 0 || static_cast<size_t>(s) >= action_probs.size())
    throw PolicyUndefinedError("stationary policy undefined at state " +
                               std::to_string(s));
  const auto& row = action_probs[s];
  const double u = rng.next_double();
  double cum = 0.0;
  for (size_t a = 0; a < row.size(); ++a) {
    cum += row[a];
    if (u < cum) return static_cast<ActionIdx>(a);
  }
  return static_cast<ActionIdx>(row.size() - 1);
}

StationaryPolicy expectation_constrained_policy(double c, double p_damage) {
  if (!std::isfinite(c) || c < 0.0)
    throw InputError("InvalidParameter", "expected-damage bound c must be nonnegative");
  if (!std::isfinite(p_damage) || p_damage <= 0.0 || p_damage > 1.0)
    throw InputError("InvalidProbability", "damage probability must lie in (0, 1]");
  const double left = c / (p_damage + c);  // c = 0 gives always-right
  StationaryPolicy policy;
  policy.action_probs = {{left, 1.0 - left}, {1.0, 0.0}};
  return policy;
}

namespace {

template <typename ChooseAction>
TrajectoryRecord roll(const Mdp& mdp, ChooseAction&& choose, int64_t delta,
                      uint64_t seed, int64_t max_steps, StateIdx start) {
  if (max_steps < 1) throw InputError("InvalidParameter", "max_steps must be at least 1");
  if (start < 0 || start >= mdp.n_states())
    throw DimensionMismatch("start state outside the model");

  SplitMix64 rng(seed);
  TrajectoryRecord rec;
  StateIdx s = start;
  int64_t k = delta;
  while (s != mdp.terminal() && static_cast<int64_t>(rec.steps.size()) < max_steps) {
    const ActionIdx a = choose(s, k, rng);
    const Transition& t = mdp.sample(s, a, rng);
    rec.steps.push_back({s, a, t.s_next, t.reward, t.damage});
    rec.total_return += t.reward;
    rec.total_damage += t.damage;
    k -= t.damage;
    s = t.s_next;
  }
  rec.truncated = (s != mdp.terminal());
  return rec;
}

struct EpisodeOutcome {
  double total_return = 0.0;
  int64_t total_damage = 0;
  bool truncated = false;
};

template <typename RunOne>
EpisodeStats gather(int64_t n_episodes, uint64_t seed, int n_threads, RunOne&& run_one) {
  if (n_episodes < 1)
    throw InputError("InvalidParameter", "episode count must be at least 1");
  const int threads =
      std::max(1, std::min<int>(n_threads, static_cast<int>(n_episodes)));

  std::vector<EpisodeOutcome> outcomes(n_episodes);
  auto worker = [&](int64_t begin, int64_t end, std::exception_ptr& error) {
    try {
      for (int64_t i = begin; i < end; ++i)
        outcomes[i] = run_one(substream_seed(seed, static_cast<uint64_t>(i)));
    } catch (...) {
      error = std::current_exception();
    }
  };

  if (threads == 1) {
    std::exception_ptr error;
    worker(0, n_episodes, error);
    if (error) std::rethrow_exception(error);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const int64_t chunk = (n_episodes + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int64_t begin = t * chunk;
      const int64_t end = std::min<int64_t>(n_episodes, begin + chunk);
      pool.emplace_back(worker, begin, end, std::ref(errors[t]));
    }
    for (auto& th : pool) th.join();
    for (auto& error : errors)
      if (error) std::rethrow_exception(error);
  }

  // Sequential reduction in episode order keeps aggregates byte-identical
  // across thread counts.
  EpisodeStats stats;
  stats.n_episodes = n_episodes;
  stats.min_return = std::numeric_limits<double>::infinity();
  double return_sum = 0.0;
  int64_t damage_sum = 0;
  for (const auto& out : outcomes) {
    ++stats.damage_histogram[out.total_damage];
    ++stats.return_histogram[std::llround(out.total_return)];
    return_sum += out.total_return;
    damage_sum += out.total_damage;
    stats.min_return = std::min(stats.min_return, out.total_return);
    stats.max_damage = std::max(stats.max_damage, out.total_damage);
    stats.n_truncated += out.truncated ? 1 : 0;
  }
  stats.mean_return = return_sum / static_cast<double>(n_episodes);
  stats.mean_damage =
      static_cast<double>(damage_sum) / static_cast<double>(n_episodes);
  return stats;
}

}  // namespace

TrajectoryRecord rollout(const Mdp& mdp, const AugmentedPolicy& policy,
                         int64_t delta, uint64_t seed, int64_t max_steps,
                         StateIdx start) {
  return roll(mdp,
              [&policy](StateIdx s, int64_t k, SplitMix64&) { return policy.at(s, k); },
              delta, seed, max_steps, start);
}

TrajectoryRecord rollout(const Mdp& mdp, const StationaryPolicy& policy,
                         int64_t delta, uint64_t seed, int64_t max_steps,
                         StateIdx start) {
  return roll(mdp,
              [&policy](StateIdx s, int64_t, SplitMix64& rng) {
                return policy.sample(s, rng);
              },
              delta, seed, max_steps, start);
}

EpisodeStats run_episodes(const Mdp& mdp, const AugmentedPolicy& policy,
                          int64_t delta, int64_t n_episodes, uint64_t seed,
                          int64_t max_steps, int n_threads) {
  return gather(n_episodes, seed, n_threads, [&](uint64_t episode_seed) {
    const TrajectoryRecord rec = rollout(mdp, policy, delta, episode_seed, max_steps);
    return EpisodeOutcome{rec.total_return, rec.total_damage, rec.truncated};
  });
}

EpisodeStats run_episodes(const Mdp& mdp, const StationaryPolicy& policy,
                          int64_t delta, int64_t n_episodes, uint64_t seed,
                          int64_t max_steps, int n_threads) {
  return gather(n_episodes, seed, n_threads, [&](uint64_t episode_seed) {
    const TrajectoryRecord rec = rollout(mdp, policy, delta, episode_seed, max_steps);
    return EpisodeOutcome{rec.total_return, rec.total_damage, rec.truncated};
  });
}

std::string episode_stats_to_json_text(const EpisodeStats& stats) {
  nlohmann::ordered_json doc;
  doc["n_episodes"] = stats.n_episodes;
  doc["mean_return"] = stats.mean_return;
  doc["mean_damage"] = stats.mean_damage;
  doc["min_return"] = stats.min_return;
  doc["max_damage"] = stats.max_damage;
  doc["n_truncated"] = stats.n_truncated;
  auto hist = [](const std::map<int64_t, int64_t>& h) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [value, count] : h) arr.push_back({value, count});
    return arr;
  };
  doc["damage_histogram"] = hist(stats.damage_histogram);
  doc["return_histogram"] = hist(stats.return_histogram);
  return doc.dump(2) + "\n";
}

std::string histogram_to_csv(const std::map<int64_t, int64_t>& histogram) {
  std::ostringstream out;
  out << "value,count\n";
  for (const auto& [value, count] : histogram) out << value << "," << count << "\n";
  return out.str();
}

}  // namespace cmdp
