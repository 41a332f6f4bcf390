#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oql/rng.hpp"

namespace oql {

// Invalid configuration supplied by a caller (sizes, parameters, selectors).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition of an operation was violated (index out of range, n = 0...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <class Tag>
struct Index {
  std::size_t value = 0;

  constexpr Index() = default;
  constexpr explicit Index(std::size_t v) : value(v) {}
  constexpr auto operator<=>(const Index&) const = default;
};

using ActionId = Index<struct ActionTag>;
using ObservationId = Index<struct ObservationTag>;
using AleatoricStateId = Index<struct AleatoricStateTag>;

// What an environment hands back each timestep. The reward is the
// environment's raw signal (e.g. dollars for the service station); agents
// never see it and compute their own reward from (s, a, o).
struct EnvStep {
  ObservationId observation;
  double raw_reward = 0.0;
};

// A generative environment. Internal state is private to implementations so
// agents only ever receive observations.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t action_count() const = 0;
  virtual std::size_t observation_count() const = 0;
  virtual EnvStep step(ActionId action, Rng& rng) = 0;
};

using UpdateFunction =
    std::function<AleatoricStateId(AleatoricStateId, ActionId, ObservationId)>;
using RewardFunction =
    std::function<double(AleatoricStateId, ActionId, ObservationId)>;

// Initial aleatoric state, update function f and reward function r. Both maps
// are tabulated over S x A x O at construction, which checks totality and that
// every reward lies in [0, 1].
class AgentConfig {
 public:
  AgentConfig(std::size_t state_count, std::size_t action_count,
              std::size_t observation_count, AleatoricStateId initial_state,
              const UpdateFunction& update, const RewardFunction& reward);

  std::size_t state_count() const noexcept { return state_count_; }
  std::size_t action_count() const noexcept { return action_count_; }
  std::size_t observation_count() const noexcept { return observation_count_; }
  AleatoricStateId initial_state() const noexcept { return initial_state_; }

  AleatoricStateId next_state(AleatoricStateId s, ActionId a,
                              ObservationId o) const;
  double reward(AleatoricStateId s, ActionId a, ObservationId o) const;

 private:
  std::size_t flat(AleatoricStateId s, ActionId a, ObservationId o) const;

  std::size_t state_count_;
  std::size_t action_count_;
  std::size_t observation_count_;
  AleatoricStateId initial_state_;
  std::vector<AleatoricStateId> update_table_;
  std::vector<double> reward_table_;
};

// f(s, a, o) with range checks.
AleatoricStateId apply_update_function(const AgentConfig& cfg,
                                       AleatoricStateId s, ActionId a,
                                       ObservationId o);

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::size_t action_count() const = 0;
  virtual std::size_t observation_count() const = 0;
  virtual AleatoricStateId aleatoric_state() const = 0;

  // Chooses A_t given the agent's current internal state.
  virtual ActionId act(Rng& rng) = 0;
  // Registers O_{t+1} for the action just taken and advances S_t.
  virtual void observe(ActionId action, ObservationId observation) = 0;
};

struct Trajectory {
  std::vector<ActionId> actions;
  std::vector<ObservationId> observations;
  std::vector<double> rewards;
  std::vector<AleatoricStateId> aleatoric_states;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return actions.size(); }
};

// Runs one uninterrupted stream of T interactions. aleatoric_states[t] is the
// agent's state when it chose actions[t].
Trajectory run_stream(Agent& agent, Environment& env, std::size_t steps,
                      Rng& rng);

// Same loop without storing the trajectory; calls sink(t, raw_reward) per step.
void run_stream(Agent& agent, Environment& env, std::size_t steps, Rng& rng,
                const std::function<void(std::size_t, double)>& sink);

}  // namespace oql
