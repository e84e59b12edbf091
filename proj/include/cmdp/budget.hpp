#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "cmdp/mdp.hpp"

namespace cmdp {

// Natural number extended with infinity. Addition saturates at infinity.
class Budget {
 public:
  constexpr Budget() = default;

  static constexpr Budget finite(uint64_t v) {
    Budget b;
    b.raw_ = v;
    return b;
  }
  static constexpr Budget infinity() {
    Budget b;
    b.raw_ = kInf;
    return b;
  }

  constexpr bool is_infinite() const { return raw_ == kInf; }
  // Finite numeric value; only meaningful when !is_infinite().
  constexpr uint64_t value() const { return raw_; }

  constexpr Budget plus(uint64_t increment) const {
    return is_infinite() ? *this : finite(raw_ + increment);
  }

  friend constexpr bool operator==(Budget, Budget) = default;
  friend constexpr std::strong_ordering operator<=>(Budget a, Budget b) {
    return a.raw_ <=> b.raw_;  // the infinity sentinel is the maximum
  }

 private:
  static constexpr uint64_t kInf = UINT64_MAX;
  uint64_t raw_ = 0;
};

// Dense (state, action) table of budgets. Carries a fingerprint of the model
// shape it was built for; operations reject tables built for another shape.
class BudgetTable {
 public:
  explicit BudgetTable(const Mdp& mdp, Budget fill = Budget());

  int32_t n_states() const { return n_states_; }
  int32_t n_actions() const { return n_actions_; }

  Budget at(StateIdx s, ActionIdx a) const { return cells_[cell(s, a)]; }
  void set(StateIdx s, ActionIdx a, Budget b) { cells_[cell(s, a)] = b; }

  Budget min_over_actions(StateIdx s) const;

  void require_shape(const Mdp& mdp) const;  // throws DimensionMismatch
  void require_cell(StateIdx s, ActionIdx a) const;

  friend bool operator==(const BudgetTable&, const BudgetTable&) = default;

 private:
  size_t cell(StateIdx s, ActionIdx a) const {
    require_cell(s, a);
    return static_cast<size_t>(s) * static_cast<size_t>(n_actions_) +
           static_cast<size_t>(a);
  }

  int32_t n_states_ = 0;
  int32_t n_actions_ = 0;
  uint64_t fingerprint_ = 0;
  std::vector<Budget> cells_;
};

// Largest representable finite budget for this model, |S| + 1. Any finite
// minimal budget is at most |S|, so an iterate reaching the cap is provably
// infinite; the cap is what makes the fixed-point iteration terminate on
// models whose true minimal budget is unbounded.
int64_t budget_cap(const Mdp& mdp);

// One application of the budget operator: for every (s, a), the max over
// support successors s' of (damage-possible indicator + min over next actions
// of k(s', .)), with saturating arithmetic. Finite results exceeding
// budget_cap() are represented as infinity.
BudgetTable apply_budget_operator(const Mdp& mdp, const BudgetTable& k);

struct BudgetSolveResult {
  BudgetTable table;   // the minimal budget k*
  int sweeps = 0;      // operator applications, including the confirming one
  // Iterate 0 (all zeros) through the fixed point, as produced per sweep.
  std::vector<BudgetTable> iterates;
};

// Fixed-point iteration from the all-zero table. After each sweep, entries
// that reach budget_cap() are promoted to infinity; the loop stops when two
// consecutive tables are identical.
BudgetSolveResult solve_minimal_budget(const Mdp& mdp);

enum class Safety { Safe, Unsafe };

// Feasibility of taking action a at state s with k units of damage tolerance
// left: Safe iff k >= k*(s, a). Infinite entries are Unsafe for every finite k.
Safety barrier(const BudgetTable& minimal_budget, StateIdx s, int64_t k, ActionIdx a);

// Exactly the actions a with k*(s, a) <= k; may be empty.
std::vector<ActionIdx> feasible_actions(const BudgetTable& minimal_budget,
                                        StateIdx s, int64_t k);

// States whose every action needs more than delta budget.
std::vector<StateIdx> unsafe_states(const BudgetTable& minimal_budget, int64_t delta);

// Independent reference computation of the minimal budget table. Builds the
// product space of states and budgets 0..k_max and computes the greatest
// fixed point of "some action keeps every support successor failure-free and
// inside the safe set", where a (s, k, a) triple fails if k minus the
// damage-possible indicator goes negative for some support successor. The
// reported budget per (s, a) is the smallest safe k, infinity if none.
BudgetTable safety_game_oracle(const Mdp& mdp, int64_t k_max);

// JSON object mapping "state/action" to an integer budget or the string "inf".
std::string budget_table_to_json_text(const BudgetTable& table, const Mdp& mdp);

}  // namespace cmdp
