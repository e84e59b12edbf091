#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmdp/budget.hpp"
#include "cmdp/mdp.hpp"
#include "cmdp/rng.hpp"

namespace cmdp {

// Shape of the sampled space: state and action counts plus which state index
// is the absorbing terminal.
struct SamplerDims {
  int32_t n_states = 0;
  int32_t n_actions = 0;
  StateIdx terminal = 0;

  friend bool operator==(const SamplerDims&, const SamplerDims&) = default;
};

// Generative access to a transition kernel: one independent (s', d) draw per
// call. Implementations must be pure given the generator state, so repeated
// draws from the same stream replay identically.
class GenerativeSampler {
 public:
  virtual ~GenerativeSampler() = default;
  virtual std::pair<StateIdx, uint8_t> draw(StateIdx s, ActionIdx a,
                                            SplitMix64& rng) const = 0;
};

// Sampler backed by a validated model; the desk-scale stand-in for real
// generative access to an environment.
class MdpSampler final : public GenerativeSampler {
 public:
  explicit MdpSampler(const Mdp& mdp) : mdp_(&mdp) {}

  std::pair<StateIdx, uint8_t> draw(StateIdx s, ActionIdx a,
                                    SplitMix64& rng) const override {
    const Transition& t = mdp_->sample(s, a, rng);
    return {t.s_next, t.damage};
  }

  SamplerDims dims() const {
    return {mdp_->n_states(), mdp_->n_actions(), mdp_->terminal()};
  }

 private:
  const Mdp* mdp_;
};

// Transition counts per (s, a), n draws each; probabilities are counts / n.
class EmpiricalKernel {
 public:
  struct Cell {
    StateIdx s_next = 0;
    uint8_t damage = 0;
    int64_t count = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
  };

  EmpiricalKernel(SamplerDims dims, int64_t n_per_pair);

  int32_t n_states() const { return dims_.n_states; }
  int32_t n_actions() const { return dims_.n_actions; }
  StateIdx terminal() const { return dims_.terminal; }
  int64_t n_per_pair() const { return n_per_pair_; }

  // Observed (s', d) cells for (s, a), sorted by (s_next, damage); counts sum
  // to n_per_pair.
  const std::vector<Cell>& cells(StateIdx s, ActionIdx a) const {
    return counts_[index(s, a)];
  }

  double probability(StateIdx s, ActionIdx a, StateIdx s_next, uint8_t damage) const;

  friend bool operator==(const EmpiricalKernel&, const EmpiricalKernel&) = default;

 private:
  friend EmpiricalKernel build_empirical_kernel(const GenerativeSampler&,
                                                SamplerDims, int64_t, uint64_t);
  size_t index(StateIdx s, ActionIdx a) const;

  SamplerDims dims_;
  int64_t n_per_pair_ = 0;
  std::vector<std::vector<Cell>> counts_;
};

// Smallest sample count per (s, a) that makes the empirical kernel consistent
// with probability at least 1 - delta, when every kernel probability is
// either zero or at least mu: ceil(log(2 |S|^2 |A| / delta) / mu).
int64_t required_samples(int64_t n_states, int64_t n_actions, double mu, double delta);

// Draws exactly n transitions from every (state, action) pair, terminal
// included, and tallies them. Each pair samples from its own substream
// derived from (seed, s, a), so the result is independent of sampling order.
EmpiricalKernel build_empirical_kernel(const GenerativeSampler& sampler,
                                       SamplerDims dims, int64_t n, uint64_t seed);

// True iff the empirical support matches the model's support exactly:
// sign(p_hat(s', d | s, a)) == sign(p(s', d | s, a)) for all entries.
bool is_consistent(const EmpiricalKernel& p_hat, const Mdp& mdp);

// Wraps the empirical support as a model (rewards zero; the minimal budget
// depends only on support and damage signs). Terminal-reachability validation
// is skipped, since an inconsistent sample may be missing transitions.
Mdp surrogate_mdp(const EmpiricalKernel& p_hat,
                  const std::vector<std::string>* state_names = nullptr,
                  const std::vector<std::string>* action_names = nullptr);

// required_samples -> build_empirical_kernel -> solve on the surrogate.
// Whenever the empirical kernel is consistent with the true one, the result
// equals the true minimal budget table.
BudgetTable solve_from_samples(const GenerativeSampler& sampler, SamplerDims dims,
                               double mu, double delta, uint64_t seed);

// JSON export with per-pair counts, n, and the derived support mask.
std::string empirical_kernel_to_json_text(const EmpiricalKernel& p_hat, const Mdp& mdp);

}  // namespace cmdp
