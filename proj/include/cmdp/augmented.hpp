#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmdp/budget.hpp"
#include "cmdp/mdp.hpp"

namespace cmdp {

// Product of the base model with the remaining damage budget. States are
// (s, k) pairs for k in 0..delta plus one absorbing FAILURE sink; a base
// transition with damage d maps (s, k) to (s', k - d) when k - d >= 0 and to
// FAILURE otherwise. Transitions keep the base reward; entering FAILURE is
// the failure event.
class AugmentedMdp {
 public:
  struct Entry {
    int64_t target = 0;  // cell index, or failure_index()
    double prob = 0.0;
    double reward = 0.0;
    bool to_failure = false;
  };

  const Mdp& base() const { return base_; }
  int64_t delta() const { return delta_; }

  // Total augmented state count: |S| * (delta + 1) plus the FAILURE sink.
  int64_t n_states() const { return n_cells() + 1; }
  // (state, budget) cells, excluding FAILURE.
  int64_t n_cells() const {
    return static_cast<int64_t>(base_.n_states()) * (delta_ + 1);
  }
  int64_t failure_index() const { return n_cells(); }

  int64_t index_of(StateIdx s, int64_t k) const { return s * (delta_ + 1) + k; }
  std::pair<StateIdx, int64_t> decode(int64_t cell) const {
    return {static_cast<StateIdx>(cell / (delta_ + 1)), cell % (delta_ + 1)};
  }

  const std::vector<Entry>& transitions(int64_t aug_state, ActionIdx a) const {
    return trans_[static_cast<size_t>(aug_state) * base_.n_actions() +
                  static_cast<size_t>(a)];
  }

 private:
  friend AugmentedMdp build_augmented(const Mdp&, int64_t);
  AugmentedMdp(Mdp base, int64_t delta) : base_(std::move(base)), delta_(delta) {}

  Mdp base_;
  int64_t delta_ = 0;
  std::vector<std::vector<Entry>> trans_;
};

AugmentedMdp build_augmented(const Mdp& base, int64_t delta);

// Deterministic choice of action per (state, budget) cell; cells without a
// feasible action are left undefined.
class AugmentedPolicy {
 public:
  AugmentedPolicy(int32_t n_states, int64_t delta)
      : n_states_(n_states),
        delta_(delta),
        choice_(static_cast<size_t>(n_states) * (delta + 1), -1) {}

  int32_t n_states() const { return n_states_; }
  int64_t delta() const { return delta_; }

  bool defined(StateIdx s, int64_t k) const {
    return in_range(s, k) && choice_[cell(s, k)] >= 0;
  }

  // Throws PolicyUndefined when (s, k) is out of range or has no choice.
  ActionIdx at(StateIdx s, int64_t k) const;

  void set(StateIdx s, int64_t k, ActionIdx a) { choice_[cell(s, k)] = a; }

 private:
  bool in_range(StateIdx s, int64_t k) const {
    return s >= 0 && s < n_states_ && k >= 0 && k <= delta_;
  }
  size_t cell(StateIdx s, int64_t k) const {
    return static_cast<size_t>(s) * static_cast<size_t>(delta_ + 1) +
           static_cast<size_t>(k);
  }

  int32_t n_states_ = 0;
  int64_t delta_ = 0;
  std::vector<ActionIdx> choice_;
};

struct TrimmedViResult {
  std::vector<double> values;   // indexed by AugmentedMdp cell; feasible cells only
  std::vector<char> feasible;   // nonempty feasible action set at the cell
  AugmentedPolicy policy;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Value iteration over the augmented space where every (s, k) maximizes only
// over actions with k*(s, a) <= k. Returns the greedy deterministic policy
// (ties resolved toward the lowest action index). With gamma = 1 this is the
// undiscounted total-reward objective; the iteration cap and residual guard
// against models that are not proper. Throws Infeasible when the start state
// has no feasible action at budget delta.
TrimmedViResult trimmed_value_iteration(const AugmentedMdp& aug,
                                        const BudgetTable& minimal_budget,
                                        double gamma = 1.0, double tol = 1e-10,
                                        int max_iter = 10000,
                                        StateIdx start_state = 0);

// JSON map "state/budget" -> action identifier (defined cells only).
std::string policy_to_json_text(const AugmentedPolicy& policy, const Mdp& mdp);

// JSON map "state/budget" -> value (feasible cells only).
std::string values_to_json_text(const TrimmedViResult& result, const AugmentedMdp& aug);

}  // namespace cmdp
