#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cmdp/augmented.hpp"
#include "cmdp/mdp.hpp"
#include "cmdp/rng.hpp"

namespace cmdp {

// Randomized stationary policy over base states; rows sum to 1.
struct StationaryPolicy {
  std::vector<std::vector<double>> action_probs;

  ActionIdx sample(StateIdx s, SplitMix64& rng) const;
};

// Loop-or-leave baseline tuned so the expected total damage equals c on the
// two-state chain: picks `left` with probability c / (p_damage + c).
StationaryPolicy expectation_constrained_policy(double c, double p_damage);

struct Step {
  StateIdx s = 0;
  ActionIdx a = 0;
  StateIdx s_next = 0;
  double reward = 0.0;
  uint8_t damage = 0;
};

struct TrajectoryRecord {
  std::vector<Step> steps;
  double total_return = 0.0;
  int64_t total_damage = 0;
  bool truncated = false;  // hit max_steps before the terminal
};

// Simulates one episode from `start` with initial budget delta, tracking the
// remaining budget k -= damage per step. Stops on entering the terminal or
// after max_steps. Deterministic given the seed.
TrajectoryRecord rollout(const Mdp& mdp, const AugmentedPolicy& policy,
                         int64_t delta, uint64_t seed, int64_t max_steps,
                         StateIdx start = 0);
TrajectoryRecord rollout(const Mdp& mdp, const StationaryPolicy& policy,
                         int64_t delta, uint64_t seed, int64_t max_steps,
                         StateIdx start = 0);

struct EpisodeStats {
  int64_t n_episodes = 0;
  std::map<int64_t, int64_t> damage_histogram;
  std::map<int64_t, int64_t> return_histogram;  // returns rounded to integers
  double mean_return = 0.0;
  double mean_damage = 0.0;
  double min_return = 0.0;
  int64_t max_damage = 0;
  int64_t n_truncated = 0;

  friend bool operator==(const EpisodeStats&, const EpisodeStats&) = default;
};

// Independent rollouts with per-episode substreams derived from
// (seed, episode index); results are identical for any thread count.
EpisodeStats run_episodes(const Mdp& mdp, const AugmentedPolicy& policy,
                          int64_t delta, int64_t n_episodes, uint64_t seed,
                          int64_t max_steps, int n_threads = 1);
EpisodeStats run_episodes(const Mdp& mdp, const StationaryPolicy& policy,
                          int64_t delta, int64_t n_episodes, uint64_t seed,
                          int64_t max_steps, int n_threads = 1);

std::string episode_stats_to_json_text(const EpisodeStats& stats);

// "value,count" lines, values ascending.
std::string histogram_to_csv(const std::map<int64_t, int64_t>& histogram);

}  // namespace cmdp
