#include "cmdp/budget.hpp"

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace cmdp {

BudgetTable::BudgetTable(const Mdp& mdp, Budget fill)
    : n_states_(mdp.n_states()),
      n_actions_(mdp.n_actions()),
      fingerprint_(mdp.shape_fingerprint()),
      cells_(static_cast<size_t>(mdp.n_states()) * mdp.n_actions(), fill) {}

Budget BudgetTable::min_over_actions(StateIdx s) const {
  Budget best = at(s, 0);
  for (ActionIdx a = 1; a < n_actions_; ++a) best = std::min(best, at(s, a));
  return best;
}

void BudgetTable::require_shape(const Mdp& mdp) const {
  if (fingerprint_ != mdp.shape_fingerprint())
    throw DimensionMismatch("budget table was built for a model of different shape");
}

void BudgetTable::require_cell(StateIdx s, ActionIdx a) const {
  if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_)
    throw DimensionMismatch("state or action index outside the table");
}

int64_t budget_cap(const Mdp& mdp) { return static_cast<int64_t>(mdp.n_states()) + 1; }

BudgetTable apply_budget_operator(const Mdp& mdp, const BudgetTable& k) {
  k.require_shape(mdp);
  const auto cap = static_cast<uint64_t>(budget_cap(mdp));
  BudgetTable out(mdp);
  for (StateIdx s = 0; s < mdp.n_states(); ++s) {
    for (ActionIdx a = 0; a < mdp.n_actions(); ++a) {
      Budget best = Budget::finite(0);
      for (const auto& se : mdp.support(s, a)) {
        const Budget candidate =
            k.min_over_actions(se.s_next).plus(se.damage_possible ? 1 : 0);
        best = std::max(best, candidate);
      }
      if (!best.is_infinite() && best.value() > cap) best = Budget::infinity();
      out.set(s, a, best);
    }
  }
  return out;
}

BudgetSolveResult solve_minimal_budget(const Mdp& mdp) {
  const auto cap = static_cast<uint64_t>(budget_cap(mdp));
  BudgetSolveResult result{BudgetTable(mdp), 0, {}};
  BudgetTable k(mdp);
  result.iterates.push_back(k);
  // Values live in {0..cap, inf} and iterates are nondecreasing, so the loop
  // is bounded; the limit below only guards against a broken operator.
  const int64_t hard_limit =
      (budget_cap(mdp) + 2) * static_cast<int64_t>(mdp.n_states()) * mdp.n_actions() + 4;
  for (;;) {
    BudgetTable next = apply_budget_operator(mdp, k);
    for (StateIdx s = 0; s < mdp.n_states(); ++s)
      for (ActionIdx a = 0; a < mdp.n_actions(); ++a)
        if (next.at(s, a) == Budget::finite(cap)) next.set(s, a, Budget::infinity());
    ++result.sweeps;
    result.iterates.push_back(next);
    if (next == k) {
      result.table = std::move(next);
      return result;
    }
    k = std::move(next);
    if (result.sweeps > hard_limit)
      throw std::logic_error("budget iteration failed to stabilize");
  }
}

Safety barrier(const BudgetTable& minimal_budget, StateIdx s, int64_t k, ActionIdx a) {
  minimal_budget.require_cell(s, a);
  const Budget need = minimal_budget.at(s, a);
  if (need.is_infinite() || k < 0) return Safety::Unsafe;
  return static_cast<uint64_t>(k) >= need.value() ? Safety::Safe : Safety::Unsafe;
}

std::vector<ActionIdx> feasible_actions(const BudgetTable& minimal_budget,
                                        StateIdx s, int64_t k) {
  std::vector<ActionIdx> actions;
  for (ActionIdx a = 0; a < minimal_budget.n_actions(); ++a)
    if (barrier(minimal_budget, s, k, a) == Safety::Safe) actions.push_back(a);
  return actions;
}

std::vector<StateIdx> unsafe_states(const BudgetTable& minimal_budget, int64_t delta) {
  std::vector<StateIdx> states;
  for (StateIdx s = 0; s < minimal_budget.n_states(); ++s)
    if (feasible_actions(minimal_budget, s, delta).empty()) states.push_back(s);
  return states;
}

BudgetTable safety_game_oracle(const Mdp& mdp, int64_t k_max) {
  if (k_max < 1) throw InputError("InvalidParameter", "k_max must be at least 1");
  const int32_t n_states = mdp.n_states();
  const int32_t n_actions = mdp.n_actions();
  const int64_t levels = k_max + 1;
  auto idx = [levels](StateIdx s, int64_t k) {
    return static_cast<size_t>(s) * static_cast<size_t>(levels) +
           static_cast<size_t>(k);
  };

  auto triple_safe = [&](StateIdx s, int64_t k, ActionIdx a,
                         const std::vector<char>& safe) {
    for (const auto& se : mdp.support(s, a)) {
      const int64_t k_next = k - (se.damage_possible ? 1 : 0);
      if (k_next < 0) return false;
      if (!safe[idx(se.s_next, k_next)]) return false;
    }
    return true;
  };

  std::vector<char> safe(static_cast<size_t>(n_states) * levels, 1);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<char> next(safe.size(), 0);
    for (StateIdx s = 0; s < n_states; ++s) {
      for (int64_t k = 0; k <= k_max; ++k) {
        if (!safe[idx(s, k)]) continue;
        for (ActionIdx a = 0; a < n_actions; ++a) {
          if (triple_safe(s, k, a, safe)) {
            next[idx(s, k)] = 1;
            break;
          }
        }
      }
    }
    if (next != safe) {
      changed = true;
      safe = std::move(next);
    }
  }

  BudgetTable out(mdp, Budget::infinity());
  for (StateIdx s = 0; s < n_states; ++s) {
    for (ActionIdx a = 0; a < n_actions; ++a) {
      for (int64_t k = 0; k <= k_max; ++k) {
        if (triple_safe(s, k, a, safe)) {
          out.set(s, a, Budget::finite(static_cast<uint64_t>(k)));
          break;
        }
      }
    }
  }
  return out;
}

std::string budget_table_to_json_text(const BudgetTable& table, const Mdp& mdp) {
  table.require_shape(mdp);
  nlohmann::ordered_json doc;
  for (StateIdx s = 0; s < mdp.n_states(); ++s) {
    for (ActionIdx a = 0; a < mdp.n_actions(); ++a) {
      const std::string key = mdp.state_name(s) + "/" + mdp.action_name(a);
      const Budget b = table.at(s, a);
      if (b.is_infinite())
        doc[key] = "inf";
      else
        doc[key] = b.value();
    }
  }
  return doc.dump(2) + "\n";
}

}  // namespace cmdp
