#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "oql/core.hpp"

namespace oql {

// Explicit finite MDP with a state aggregation map phi. Transition and reward
// are stored as dense n_states x n_actions x n_states tensors; rewards are
// paid on (s, a, s').
class FiniteMdp {
 public:
  FiniteMdp(std::size_t n_states, std::size_t n_actions,
            std::vector<double> transition, std::vector<double> reward,
            std::vector<std::size_t> aggregation);

  // Identity aggregation.
  FiniteMdp(std::size_t n_states, std::size_t n_actions,
            std::vector<double> transition, std::vector<double> reward);

  std::size_t state_count() const noexcept { return n_states_; }
  std::size_t action_count() const noexcept { return n_actions_; }
  std::size_t aleatoric_count() const noexcept { return n_aleatoric_; }

  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_[flat(s, a, next)];
  }
  double r(std::size_t s, std::size_t a, std::size_t next) const {
    return reward_[flat(s, a, next)];
  }
  // Expected one-step reward sum_{s'} P(s'|s,a) R(s,a,s').
  double mean_reward(std::size_t s, std::size_t a) const {
    return mean_reward_[s * n_actions_ + a];
  }
  std::size_t aggregate(std::size_t s) const { return aggregation_[s]; }
  const std::vector<std::size_t>& aggregation() const noexcept {
    return aggregation_;
  }
  bool identity_aggregation() const;

  const std::vector<double>& transition() const noexcept { return transition_; }
  const std::vector<double>& reward() const noexcept { return reward_; }

  // Copy with a different aggregation map.
  FiniteMdp with_aggregation(std::vector<std::size_t> aggregation) const;

 private:
  std::size_t flat(std::size_t s, std::size_t a, std::size_t next) const {
    return (s * n_actions_ + a) * n_states_ + next;
  }
  void validate();

  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t n_aleatoric_ = 0;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<std::size_t> aggregation_;
  std::vector<double> mean_reward_;
};

// JSON layout:
//   {"n_states": n, "n_actions": m,
//    "transition": [[[p(s'|s,a) for s'] for a] for s],
//    "reward":     [[[r(s,a,s')  for s'] for a] for s],
//    "aggregation": [phi(s) for s]}          // optional, identity if absent
nlohmann::json to_json(const FiniteMdp& mdp);
FiniteMdp finite_mdp_from_json(const nlohmann::json& j);
FiniteMdp load_finite_mdp(const std::string& path);
void save_finite_mdp(const FiniteMdp& mdp, const std::string& path);

// Three states: 0 = initial, 1 = last action was 0, 2 = last action was 1.
// Reward 1 exactly when the action differs from the previous one; nothing is
// paid from the initial state. One aleatoric state.
FiniteMdp build_alternation_env();

// 2N-state aggregation counterexample. Environment state k (1-based in the
// usual description) is stored at index k - 1; action index 0 is "action 1".
// Odd states aggregate to 0, even states to 1.
struct AdpEnvParams {
  std::size_t half_states = 2;  // N
  double reset_probability = 0.1;   // eps1
  double leave_probability = 0.5;   // eps2
  double delta = 0.1;
  double kappa = 1.0;
};
FiniteMdp build_adp_env(const AdpEnvParams& params);

// Samples s' from the transition row; the observation is s'.
struct FiniteStep {
  ObservationId next_state;
  double reward = 0.0;
};
FiniteStep finite_env_step(const FiniteMdp& mdp, std::size_t state,
                           ActionId action, Rng& rng);

// Fully observed MDP as an Environment.
class FiniteEnvironment final : public Environment {
 public:
  FiniteEnvironment(const FiniteMdp& mdp, std::size_t start_state);

  std::size_t action_count() const override { return mdp_->action_count(); }
  std::size_t observation_count() const override { return mdp_->state_count(); }
  EnvStep step(ActionId action, Rng& rng) override;

  std::size_t state() const noexcept { return state_; }

 private:
  const FiniteMdp* mdp_;
  std::size_t state_;
};

// Agent config for a finite MDP with identity aggregation: S = O = states,
// f(s, a, o) = o and r(s, a, o) = R(s, a, o). Rewards must lie in [0, 1].
AgentConfig finite_agent_config(const FiniteMdp& mdp, std::size_t start_state);

}  // namespace oql
