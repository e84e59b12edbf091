#include "cmdp/kernel.hpp"

#include <cmath>
#include <map>

#include <json.hpp>

namespace cmdp {

namespace {

void require_valid_dims(const SamplerDims& dims) {
  if (dims.n_states < 1 || dims.n_actions < 1)
    throw InputError("InvalidParameter", "sampler dims need at least one state and action");
  if (dims.terminal < 0 || dims.terminal >= dims.n_states)
    throw InputError("InvalidParameter", "terminal index outside the sampled state space");
}

}  // namespace

EmpiricalKernel::EmpiricalKernel(SamplerDims dims, int64_t n_per_pair)
    : dims_(dims),
      n_per_pair_(n_per_pair),
      counts_(static_cast<size_t>(dims.n_states) * dims.n_actions) {}

size_t EmpiricalKernel::index(StateIdx s, ActionIdx a) const {
  if (s < 0 || s >= dims_.n_states || a < 0 || a >= dims_.n_actions)
    throw DimensionMismatch("state or action index outside the empirical kernel");
  return static_cast<size_t>(s) * static_cast<size_t>(dims_.n_actions) +
         static_cast<size_t>(a);
}

double EmpiricalKernel::probability(StateIdx s, ActionIdx a, StateIdx s_next,
                                    uint8_t damage) const {
  for (const auto& c : cells(s, a))
    if (c.s_next == s_next && c.damage == damage)
      return static_cast<double>(c.count) / static_cast<double>(n_per_pair_);
  return 0.0;
}

int64_t required_samples(int64_t n_states, int64_t n_actions, double mu, double delta) {
  if (n_states < 1 || n_actions < 1)
    throw InputError("InvalidParameter", "state and action counts must be positive");
  if (!(mu > 0.0) || mu > 1.0)
    throw InputError("InvalidParameter", "support floor mu must lie in (0, 1]");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw InputError("InvalidParameter", "failure probability delta must lie in (0, 1)");
  const double bound =
      std::log(2.0 * static_cast<double>(n_states) * static_cast<double>(n_states) *
               static_cast<double>(n_actions) / delta) /
      mu;
  return static_cast<int64_t>(std::ceil(bound));
}

EmpiricalKernel build_empirical_kernel(const GenerativeSampler& sampler,
                                       SamplerDims dims, int64_t n, uint64_t seed) {
  require_valid_dims(dims);
  if (n < 1) throw InputError("InvalidParameter", "sample count must be at least 1");

  EmpiricalKernel kernel(dims, n);
  for (StateIdx s = 0; s < dims.n_states; ++s) {
    for (ActionIdx a = 0; a < dims.n_actions; ++a) {
      SplitMix64 rng(substream_seed(seed, static_cast<uint64_t>(s),
                                    static_cast<uint64_t>(a)));
      std::map<std::pair<StateIdx, uint8_t>, int64_t> tally;
      for (int64_t i = 0; i < n; ++i) {
        const auto [s_next, damage] = sampler.draw(s, a, rng);
        if (s_next < 0 || s_next >= dims.n_states || damage > 1)
          throw Error("SamplerFailure", "sampler returned an out-of-range transition");
        ++tally[{s_next, damage}];
      }
      auto& cells = kernel.counts_[kernel.index(s, a)];
      for (const auto& [key, count] : tally)
        cells.push_back(EmpiricalKernel::Cell{key.first, key.second, count});
    }
  }
  return kernel;
}

bool is_consistent(const EmpiricalKernel& p_hat, const Mdp& mdp) {
  if (p_hat.n_states() != mdp.n_states() || p_hat.n_actions() != mdp.n_actions())
    throw DimensionMismatch("empirical kernel shape does not match the model");
  for (StateIdx s = 0; s < mdp.n_states(); ++s) {
    for (ActionIdx a = 0; a < mdp.n_actions(); ++a) {
      const auto& observed = p_hat.cells(s, a);
      const auto& truth = mdp.transitions(s, a);
      if (observed.size() != truth.size()) return false;
      for (size_t i = 0; i < truth.size(); ++i)
        if (observed[i].s_next != truth[i].s_next ||
            observed[i].damage != truth[i].damage)
          return false;
    }
  }
  return true;
}

Mdp surrogate_mdp(const EmpiricalKernel& p_hat,
                  const std::vector<std::string>* state_names,
                  const std::vector<std::string>* action_names) {
  RawMdp raw;
  if (state_names) {
    if (static_cast<int32_t>(state_names->size()) != p_hat.n_states())
      throw DimensionMismatch("state name list does not match the empirical kernel");
    raw.states = *state_names;
  } else {
    for (int32_t i = 0; i < p_hat.n_states(); ++i)
      raw.states.push_back("s" + std::to_string(i));
  }
  if (action_names) {
    if (static_cast<int32_t>(action_names->size()) != p_hat.n_actions())
      throw DimensionMismatch("action name list does not match the empirical kernel");
    raw.actions = *action_names;
  } else {
    for (int32_t j = 0; j < p_hat.n_actions(); ++j)
      raw.actions.push_back("a" + std::to_string(j));
  }
  raw.terminal = raw.states[p_hat.terminal()];

  const auto n = static_cast<double>(p_hat.n_per_pair());
  for (StateIdx s = 0; s < p_hat.n_states(); ++s)
    for (ActionIdx a = 0; a < p_hat.n_actions(); ++a)
      for (const auto& c : p_hat.cells(s, a))
        raw.transitions.push_back({raw.states[s], raw.actions[a],
                                   raw.states[c.s_next], c.damage,
                                   static_cast<double>(c.count) / n, 0.0});

  ValidateOptions options;
  options.require_terminal_reachable = false;
  return validate_mdp(raw, options);
}

BudgetTable solve_from_samples(const GenerativeSampler& sampler, SamplerDims dims,
                               double mu, double delta, uint64_t seed) {
  const int64_t n = required_samples(dims.n_states, dims.n_actions, mu, delta);
  const EmpiricalKernel p_hat = build_empirical_kernel(sampler, dims, n, seed);
  return solve_minimal_budget(surrogate_mdp(p_hat)).table;
}

std::string empirical_kernel_to_json_text(const EmpiricalKernel& p_hat, const Mdp& mdp) {
  if (p_hat.n_states() != mdp.n_states() || p_hat.n_actions() != mdp.n_actions())
    throw DimensionMismatch("empirical kernel shape does not match the model");
  nlohmann::ordered_json doc;
  doc["n_per_pair"] = p_hat.n_per_pair();
  auto& pairs = doc["pairs"] = nlohmann::ordered_json::array();
  for (StateIdx s = 0; s < mdp.n_states(); ++s) {
    for (ActionIdx a = 0; a < mdp.n_actions(); ++a) {
      nlohmann::ordered_json entry;
      entry["s"] = mdp.state_name(s);
      entry["a"] = mdp.action_name(a);
      auto& counts = entry["counts"] = nlohmann::ordered_json::array();
      auto& support = entry["support"] = nlohmann::ordered_json::array();
      for (const auto& c : p_hat.cells(s, a)) {
        nlohmann::ordered_json cell;
        cell["s_next"] = mdp.state_name(c.s_next);
        cell["d"] = static_cast<int>(c.damage);
        cell["count"] = c.count;
        counts.push_back(std::move(cell));
        support.push_back({mdp.state_name(c.s_next), static_cast<int>(c.damage)});
      }
      pairs.push_back(std::move(entry));
    }
  }
  return doc.dump(2) + "\n";
}

}  // namespace cmdp
