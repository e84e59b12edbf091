#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmdp/errors.hpp"
#include "cmdp/rng.hpp"

namespace cmdp {

using StateIdx = int32_t;
using ActionIdx = int32_t;

// One kernel entry of p(s', d | s, a) together with its deterministic reward.
struct Transition {
  StateIdx s_next = 0;
  uint8_t damage = 0;  // binary damage indicator
  double prob = 0.0;
  double reward = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// Aggregated view of one successor state of an (s, a) pair: its total
// probability mass and whether the damage bit can fire on the way there.
struct SupportEntry {
  StateIdx s_next = 0;
  bool damage_possible = false;
  double prob_mass = 0.0;

  friend bool operator==(const SupportEntry&, const SupportEntry&) = default;
};

// Unvalidated model description, as parsed from a file or built by hand.
struct RawTransition {
  std::string s;
  std::string a;
  std::string s_next;
  int damage = 0;
  double prob = 0.0;
  double reward = 0.0;
};

struct RawMdp {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::string terminal;
  std::vector<RawTransition> transitions;
};

struct ValidateOptions {
  // When set, every kernel probability must be at least this floor.
  std::optional<double> support_floor;
  // Require the terminal to be reachable from every state under every
  // deterministic stationary policy. Disabled for empirical surrogates,
  // whose sampled support may legitimately miss transitions.
  bool require_terminal_reachable = true;
};

// Finite tabular MDP with a joint kernel over (next state, damage bit) and a
// deterministic reward per kernel entry. The terminal state's absorbing
// self-loops are materialized under every action, so downstream operators and
// simulators need no special-casing. Immutable once validated; safe to share
// across threads.
class Mdp {
 public:
  int32_t n_states() const { return static_cast<int32_t>(states_.size()); }
  int32_t n_actions() const { return static_cast<int32_t>(actions_.size()); }
  StateIdx terminal() const { return terminal_; }

  const std::string& state_name(StateIdx s) const { return states_.at(s); }
  const std::string& action_name(ActionIdx a) const { return actions_.at(a); }
  const std::vector<std::string>& state_names() const { return states_; }
  const std::vector<std::string>& action_names() const { return actions_; }

  std::optional<StateIdx> state_index(std::string_view name) const;
  std::optional<ActionIdx> action_index(std::string_view name) const;

  // Kernel entries for (s, a), sorted by (s_next, damage).
  const std::vector<Transition>& transitions(StateIdx s, ActionIdx a) const {
    return kernel_[cell(s, a)];
  }

  // One entry per distinct successor state with positive mass, sorted by
  // state index. damage_possible is true iff p(s', d=1 | s, a) > 0.
  const std::vector<SupportEntry>& support(StateIdx s, ActionIdx a) const {
    return support_[cell(s, a)];
  }

  // Draws one (s', d) transition from the kernel.
  const Transition& sample(StateIdx s, ActionIdx a, SplitMix64& rng) const;

  // Hash of (n_states, n_actions, terminal); budget tables carry it so a
  // table cannot be applied to a model of a different shape.
  uint64_t shape_fingerprint() const;

  friend bool operator==(const Mdp&, const Mdp&) = default;

  // JSON document with fields `states`, `actions`, `terminal`, `transitions`.
  static Mdp from_json_text(const std::string& text,
                            const ValidateOptions& options = {});
  std::string to_json_text() const;

 private:
  friend Mdp validate_mdp(const RawMdp&, const ValidateOptions&);

  Mdp() = default;
  size_t cell(StateIdx s, ActionIdx a) const {
    return static_cast<size_t>(s) * static_cast<size_t>(actions_.size()) +
           static_cast<size_t>(a);
  }

  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  StateIdx terminal_ = 0;
  std::vector<std::vector<Transition>> kernel_;
  std::vector<std::vector<SupportEntry>> support_;
};

// Checks every structural invariant of the description and returns the
// validated model. Missing terminal self-loops are materialized; present ones
// must already be absorbing (probability one, no damage, no reward).
Mdp validate_mdp(const RawMdp& raw, const ValidateOptions& options = {});

// Two-state loop-or-leave model: `left` self-loops on `circle` with reward 1
// and damages with probability p_damage, `right` moves to the terminal
// `square` with reward 0.
Mdp chain_mdp(double p_damage);

struct RandomMdpConfig {
  int32_t n_states = 4;  // includes the terminal state (the last index)
  int32_t n_actions = 2;
  int32_t prob_units = 10;  // probabilities are multiples of 1/prob_units
  double damage_prob = 0.3;
  int32_t max_extra_successors = 2;
};

// Seeded random model. Every (state, action) pair gets at least one successor
// strictly closer to the terminal, which makes the terminal reachable under
// every policy by construction; extra successors (self-loops and back edges
// included) are sprinkled on top with random damage flags.
Mdp random_mdp(const RandomMdpConfig& config, uint64_t seed);

}  // namespace cmdp
