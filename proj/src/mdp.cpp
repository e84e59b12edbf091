#include "cmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cmdp {

namespace {

constexpr double kProbSumTol = 1e-9;
constexpr double kMinEntryProb = 1e-12;

std::string pair_label(const std::string& s, const std::string& a) {
  return "(" + s + ", " + a + ")";
}

}  // namespace

std::optional<StateIdx> Mdp::state_index(std::string_view name) const {
  for (size_t i = 0; i < states_.size(); ++i)
    if (states_[i] == name) return static_cast<StateIdx>(i);
  return std::nullopt;
}

std::optional<ActionIdx> Mdp::action_index(std::string_view name) const {
  for (size_t i = 0; i < actions_.size(); ++i)
    if (actions_[i] == name) return static_cast<ActionIdx>(i);
  return std::nullopt;
}

const Transition& Mdp::sample(StateIdx s, ActionIdx a, SplitMix64& rng) const {
  const auto& entries = kernel_[cell(s, a)];
  const double u = rng.next_double();
  double cum = 0.0;
  for (const auto& t : entries) {
    cum += t.prob;
    if (u < cum) return t;
  }
  return entries.back();  // guards against rounding in the cumulative sum
}

uint64_t Mdp::shape_fingerprint() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto absorb = [&h](uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  absorb(static_cast<uint64_t>(n_states()));
  absorb(static_cast<uint64_t>(n_actions()));
  absorb(static_cast<uint64_t>(terminal_));
  return h;
}

Mdp validate_mdp(const RawMdp& raw, const ValidateOptions& options) {
  if (raw.states.empty())
    throw ValidationError("UnknownIdentifier", "model declares no states");
  if (raw.actions.empty())
    throw ValidationError("UnknownIdentifier", "model declares no actions");

  Mdp m;
  m.states_ = raw.states;
  m.actions_ = raw.actions;

  {
    std::set<std::string> seen;
    for (const auto& s : raw.states)
      if (!seen.insert(s).second)
        throw ValidationError("DuplicateIdentifier", "duplicate state name: " + s);
    seen.clear();
    for (const auto& a : raw.actions)
      if (!seen.insert(a).second)
        throw ValidationError("DuplicateIdentifier", "duplicate action name: " + a);
  }

  const auto term = m.state_index(raw.terminal);
  if (!term)
    throw ValidationError("UnknownIdentifier",
                          "terminal state not declared: " + raw.terminal);
  m.terminal_ = *term;

  const int32_t n_states = m.n_states();
  const int32_t n_actions = m.n_actions();
  m.kernel_.assign(static_cast<size_t>(n_states) * n_actions, {});

  for (const auto& rt : raw.transitions) {
    const auto s = m.state_index(rt.s);
    const auto a = m.action_index(rt.a);
    const auto s_next = m.state_index(rt.s_next);
    if (!s) throw ValidationError("UnknownIdentifier", "unknown state: " + rt.s);
    if (!a) throw ValidationError("UnknownIdentifier", "unknown action: " + rt.a);
    if (!s_next)
      throw ValidationError("UnknownIdentifier", "unknown state: " + rt.s_next);
    if (rt.damage != 0 && rt.damage != 1)
      throw ValidationError("InvalidDamage",
                            "damage bit must be 0 or 1 at " + pair_label(rt.s, rt.a));
    if (!std::isfinite(rt.prob) || rt.prob <= 0.0 || rt.prob > 1.0 + kMinEntryProb)
      throw InputError("InvalidProbability",
                       "probability out of (0, 1] at " + pair_label(rt.s, rt.a));
    if (rt.prob < kMinEntryProb)
      throw InputError("InvalidProbability",
                       "probability below the 1e-12 support threshold at " +
                           pair_label(rt.s, rt.a));
    if (options.support_floor && rt.prob < *options.support_floor - kMinEntryProb)
      throw InputError("InvalidProbability",
                       "probability below the declared support floor at " +
                           pair_label(rt.s, rt.a));
    if (!std::isfinite(rt.reward))
      throw ValidationError("InvalidReward",
                            "reward must be finite at " + pair_label(rt.s, rt.a));
    m.kernel_[m.cell(*s, *a)].push_back(Transition{
        *s_next, static_cast<uint8_t>(rt.damage), rt.prob, rt.reward});
  }

  for (StateIdx s = 0; s < n_states; ++s) {
    for (ActionIdx a = 0; a < n_actions; ++a) {
      auto& entries = m.kernel_[m.cell(s, a)];
      std::sort(entries.begin(), entries.end(),
                [](const Transition& x, const Transition& y) {
                  return std::tie(x.s_next, x.damage) < std::tie(y.s_next, y.damage);
                });
      for (size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].s_next == entries[i - 1].s_next &&
            entries[i].damage == entries[i - 1].damage)
          throw ValidationError(
              "DuplicateEntry",
              "duplicate (s', d) kernel entry at " +
                  pair_label(m.state_name(s), m.action_name(a)) + " -> " +
                  m.state_name(entries[i].s_next));
      }

      if (s == m.terminal_) {
        if (entries.empty()) {
          entries.push_back(Transition{m.terminal_, 0, 1.0, 0.0});
        } else {
          const bool absorbing = entries.size() == 1 &&
                                 entries[0].s_next == m.terminal_ &&
                                 entries[0].damage == 0 &&
                                 std::abs(entries[0].prob - 1.0) <= kProbSumTol &&
                                 entries[0].reward == 0.0;
          if (!absorbing)
            throw ValidationError(
                "TerminalNotAbsorbing",
                "terminal state must self-loop with probability 1, damage 0, "
                "reward 0 under action " + m.action_name(a));
        }
        continue;
      }

      double sum = 0.0;
      for (const auto& t : entries) sum += t.prob;
      if (std::abs(sum - 1.0) > kProbSumTol) {
        std::ostringstream msg;
        msg << "probabilities at " << pair_label(m.state_name(s), m.action_name(a))
            << " sum to " << sum;
        throw ValidationError("ProbabilityNotNormalized", msg.str());
      }
    }
  }

  if (options.require_terminal_reachable) {
    // Backward reachability from the terminal over the union of all actions'
    // support edges. A state with no action sequence into the terminal can
    // never be steered to termination and is rejected.
    std::vector<char> can_reach(n_states, 0);
    can_reach[m.terminal_] = 1;
    for (bool changed = true; changed;) {
      changed = false;
      for (StateIdx s = 0; s < n_states; ++s) {
        if (can_reach[s]) continue;
        for (ActionIdx a = 0; a < n_actions && !can_reach[s]; ++a)
          for (const auto& t : m.kernel_[m.cell(s, a)])
            if (can_reach[t.s_next]) {
              can_reach[s] = 1;
              changed = true;
              break;
            }
      }
    }
    for (StateIdx s = 0; s < n_states; ++s)
      if (!can_reach[s])
        throw ValidationError("TerminalUnreachable",
                              "terminal unreachable from state " + m.state_name(s));
  }

  m.support_.assign(m.kernel_.size(), {});
  for (size_t i = 0; i < m.kernel_.size(); ++i) {
    const auto& entries = m.kernel_[i];
    auto& sup = m.support_[i];
    for (const auto& t : entries) {
      if (!sup.empty() && sup.back().s_next == t.s_next) {
        sup.back().prob_mass += t.prob;
        sup.back().damage_possible |= (t.damage == 1);
      } else {
        sup.push_back(SupportEntry{t.s_next, t.damage == 1, t.prob});
      }
    }
  }

  return m;
}

Mdp chain_mdp(double p_damage) {
  if (!std::isfinite(p_damage) || p_damage <= 0.0 || p_damage > 1.0)
    throw InputError("InvalidProbability",
                     "damage probability must lie in (0, 1]");
  RawMdp raw;
  raw.states = {"circle", "square"};
  raw.actions = {"left", "right"};
  raw.terminal = "square";
  raw.transitions.push_back({"circle", "left", "circle", 1, p_damage, 1.0});
  if (p_damage < 1.0)
    raw.transitions.push_back({"circle", "left", "circle", 0, 1.0 - p_damage, 1.0});
  raw.transitions.push_back({"circle", "right", "square", 0, 1.0, 0.0});
  return validate_mdp(raw);
}

Mdp random_mdp(const RandomMdpConfig& config, uint64_t seed) {
  if (config.n_states < 1 || config.n_actions < 1)
    throw InputError("InvalidParameter", "need at least one state and action");
  if (config.prob_units < 1)
    throw InputError("InvalidParameter", "prob_units must be positive");
  if (config.damage_prob < 0.0 || config.damage_prob > 1.0)
    throw InputError("InvalidParameter", "damage_prob must lie in [0, 1]");

  const int32_t n = config.n_states;
  RawMdp raw;
  for (int32_t i = 0; i < n; ++i) raw.states.push_back("s" + std::to_string(i));
  for (int32_t j = 0; j < config.n_actions; ++j)
    raw.actions.push_back("a" + std::to_string(j));
  raw.terminal = raw.states.back();

  SplitMix64 rng(substream_seed(seed, 0x6d6f64656cull));
  for (int32_t s = 0; s + 1 < n; ++s) {
    for (int32_t a = 0; a < config.n_actions; ++a) {
      std::set<std::pair<int32_t, int>> succ;
      const int32_t progress =
          s + 1 + static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(n - 1 - s)));
      succ.insert({progress, rng.next_bernoulli(config.damage_prob) ? 1 : 0});
      const uint64_t extras =
          rng.next_below(static_cast<uint64_t>(config.max_extra_successors) + 1);
      for (uint64_t e = 0; e < extras; ++e) {
        const auto target = static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(n)));
        const int dmg = rng.next_bernoulli(config.damage_prob) ? 1 : 0;
        if (succ.size() < static_cast<size_t>(config.prob_units))
          succ.insert({target, dmg});
      }
      std::vector<int> weights(succ.size(), 1);
      for (int32_t r = 0; r < config.prob_units - static_cast<int32_t>(succ.size()); ++r)
        weights[rng.next_below(weights.size())] += 1;
      size_t i = 0;
      for (const auto& [target, dmg] : succ) {
        raw.transitions.push_back(
            {raw.states[s], raw.actions[a], raw.states[target], dmg,
             static_cast<double>(weights[i]) / config.prob_units,
             static_cast<double>(rng.next_below(4))});
        ++i;
      }
    }
  }

  ValidateOptions options;
  options.support_floor = 1.0 / config.prob_units;
  return validate_mdp(raw, options);
}

Mdp Mdp::from_json_text(const std::string& text, const ValidateOptions& options) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("ParseError", std::string("invalid JSON: ") + e.what());
  }
  RawMdp raw;
  try {
    raw.states = doc.at("states").get<std::vector<std::string>>();
    raw.actions = doc.at("actions").get<std::vector<std::string>>();
    raw.terminal = doc.at("terminal").get<std::string>();
    for (const auto& t : doc.at("transitions")) {
      raw.transitions.push_back({t.at("s").get<std::string>(),
                                 t.at("a").get<std::string>(),
                                 t.at("s_next").get<std::string>(),
                                 t.at("d").get<int>(), t.at("p").get<double>(),
                                 t.at("r").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("ParseError", std::string("malformed model document: ") + e.what());
  }
  return validate_mdp(raw, options);
}

std::string Mdp::to_json_text() const {
  nlohmann::ordered_json doc;
  doc["states"] = states_;
  doc["actions"] = actions_;
  doc["terminal"] = states_[terminal_];
  auto& transitions = doc["transitions"] = nlohmann::ordered_json::array();
  for (StateIdx s = 0; s < n_states(); ++s) {
    for (ActionIdx a = 0; a < n_actions(); ++a) {
      for (const auto& t : kernel_[cell(s, a)]) {
        nlohmann::ordered_json entry;
        entry["s"] = states_[s];
        entry["a"] = actions_[a];
        entry["s_next"] = states_[t.s_next];
        entry["d"] = static_cast<int>(t.damage);
        entry["p"] = t.prob;
        entry["r"] = t.reward;
        transitions.push_back(std::move(entry));
      }
    }
  }
  return doc.dump(2) + "\n";
}

}  // namespace cmdp
