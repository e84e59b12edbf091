#include "cmdp/augmented.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

namespace cmdp {

AugmentedMdp build_augmented(const Mdp& base, int64_t delta) {
  if (delta < 0) throw InputError("InvalidParameter", "delta must be nonnegative");
  AugmentedMdp aug(base, delta);
  aug.trans_.assign(static_cast<size_t>(aug.n_states()) * base.n_actions(), {});

  for (StateIdx s = 0; s < base.n_states(); ++s) {
    for (int64_t k = 0; k <= delta; ++k) {
      const int64_t cell = aug.index_of(s, k);
      for (ActionIdx a = 0; a < base.n_actions(); ++a) {
        auto& entries =
            aug.trans_[static_cast<size_t>(cell) * base.n_actions() + a];
        for (const auto& t : base.transitions(s, a)) {
          const int64_t k_next = k - t.damage;
          if (k_next >= 0)
            entries.push_back({aug.index_of(t.s_next, k_next), t.prob, t.reward, false});
          else
            entries.push_back({aug.failure_index(), t.prob, t.reward, true});
        }
      }
    }
  }
  for (ActionIdx a = 0; a < base.n_actions(); ++a)
    aug.trans_[static_cast<size_t>(aug.failure_index()) * base.n_actions() + a]
        .push_back({aug.failure_index(), 1.0, 0.0, false});
  return aug;
}

ActionIdx AugmentedPolicy::at(StateIdx s, int64_t k) const {
  if (!in_range(s, k) || choice_[cell(s, k)] < 0)
    throw PolicyUndefinedError("policy undefined at state " + std::to_string(s) +
                               ", budget " + std::to_string(k));
  return choice_[cell(s, k)];
}

TrimmedViResult trimmed_value_iteration(const AugmentedMdp& aug,
                                        const BudgetTable& minimal_budget,
                                        double gamma, double tol, int max_iter,
                                        StateIdx start_state) {
  const Mdp& base = aug.base();
  minimal_budget.require_shape(base);
  if (!(gamma > 0.0) || gamma > 1.0)
    throw InputError("InvalidParameter", "gamma must lie in (0, 1]");
  if (!(tol > 0.0) || max_iter < 1)
    throw InputError("InvalidParameter", "tolerance and iteration cap must be positive");
  if (start_state < 0 || start_state >= base.n_states())
    throw DimensionMismatch("start state outside the model");

  const int64_t n_cells = aug.n_cells();
  std::vector<std::vector<ActionIdx>> feasible_at(n_cells);
  for (int64_t cell = 0; cell < n_cells; ++cell) {
    const auto [s, k] = aug.decode(cell);
    feasible_at[cell] = feasible_actions(minimal_budget, s, k);
  }
  if (feasible_at[aug.index_of(start_state, aug.delta())].empty())
    throw InfeasibleError("no feasible action at start state " +
                          base.state_name(start_state) + " with budget " +
                          std::to_string(aug.delta()));

  TrimmedViResult result{std::vector<double>(n_cells, 0.0),
                         std::vector<char>(n_cells, 0),
                         AugmentedPolicy(base.n_states(), aug.delta()),
                         0,
                         0.0,
                         false};
  for (int64_t cell = 0; cell < n_cells; ++cell)
    result.feasible[cell] = feasible_at[cell].empty() ? 0 : 1;

  auto action_value = [&](int64_t cell, ActionIdx a, const std::vector<double>& v) {
    double q = 0.0;
    for (const auto& e : aug.transitions(cell, a)) {
      if (e.to_failure)
        throw Error("InvalidBudgetTable",
                    "a feasible action reached the failure sink; the budget "
                    "table is not a fixed point for this model");
      q += e.prob * (e.reward + gamma * v[e.target]);
    }
    return q;
  };

  std::vector<double> values(n_cells, 0.0);
  std::vector<double> next(n_cells, 0.0);
  for (int iter = 1; iter <= max_iter; ++iter) {
    double residual = 0.0;
    for (int64_t cell = 0; cell < n_cells; ++cell) {
      if (feasible_at[cell].empty()) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (ActionIdx a : feasible_at[cell])
        best = std::max(best, action_value(cell, a, values));
      next[cell] = best;
      residual = std::max(residual, std::abs(best - values[cell]));
    }
    std::swap(values, next);
    result.iterations = iter;
    result.residual = residual;
    if (residual < tol) {
      result.converged = true;
      break;
    }
  }

  result.values = values;
  for (int64_t cell = 0; cell < n_cells; ++cell) {
    if (feasible_at[cell].empty()) continue;
    const auto [s, k] = aug.decode(cell);
    ActionIdx best_a = feasible_at[cell].front();
    double best = action_value(cell, best_a, values);
    for (ActionIdx a : feasible_at[cell]) {
      const double q = action_value(cell, a, values);
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    result.policy.set(s, k, best_a);
  }
  return result;
}

std::string policy_to_json_text(const AugmentedPolicy& policy, const Mdp& mdp) {
  if (policy.n_states() != mdp.n_states())
    throw DimensionMismatch("policy was built for a model of different shape");
  nlohmann::ordered_json doc;
  for (StateIdx s = 0; s < policy.n_states(); ++s)
    for (int64_t k = 0; k <= policy.delta(); ++k)
      if (policy.defined(s, k))
        doc[mdp.state_name(s) + "/" + std::to_string(k)] =
            mdp.action_name(policy.at(s, k));
  return doc.dump(2) + "\n";
}

std::string values_to_json_text(const TrimmedViResult& result, const AugmentedMdp& aug) {
  nlohmann::ordered_json doc;
  for (int64_t cell = 0; cell < aug.n_cells(); ++cell) {
    if (!result.feasible[cell]) continue;
    const auto [s, k] = aug.decode(cell);
    doc[aug.base().state_name(s) + "/" + std::to_string(k)] = result.values[cell];
  }
  return doc.dump(2) + "\n";
}

}  // namespace cmdp
