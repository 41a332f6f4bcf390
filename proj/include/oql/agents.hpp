#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oql/core.hpp"

namespace oql {

// Q-table and visitation counts, both |S| x |A|. Counts are real-valued so a
// schedule can scale them.
class EpistemicState {
 public:
  EpistemicState(std::size_t state_count, std::size_t action_count,
                 double q_init);

  std::size_t state_count() const noexcept { return state_count_; }
  std::size_t action_count() const noexcept { return action_count_; }

  double q(std::size_t s, std::size_t a) const { return q_[s * action_count_ + a]; }
  double& q(std::size_t s, std::size_t a) { return q_[s * action_count_ + a]; }
  double count(std::size_t s, std::size_t a) const { return n_[s * action_count_ + a]; }
  double& count(std::size_t s, std::size_t a) { return n_[s * action_count_ + a]; }

  double max_q(std::size_t s) const;

  const std::vector<double>& q_values() const noexcept { return q_; }
  const std::vector<double>& counts() const noexcept { return n_; }

  void shift_values(double delta);
  void scale_counts(double factor);

  bool operator==(const EpistemicState&) const = default;

 private:
  std::size_t state_count_;
  std::size_t action_count_;
  std::vector<double> q_;
  std::vector<double> n_;
};

// alpha = (1 + 2 tau) / (n + 2 tau) for the post-increment count n >= 1.
double step_size(double n, double tau);

// Uniform over the exact argmax set of Q(s, .). A unique maximizer consumes no
// randomness.
ActionId greedy_action(const EpistemicState& state, AleatoricStateId s, Rng& rng);

// One optimistic discounted Q-learning update: increments N(s, a), moves
// Q(s, a) toward r + gamma max Q(s', .) + beta / sqrt(N(s, a)) with
// gamma = 1 - 1/tau, then clips at tau.
void q_update(EpistemicState& state, AleatoricStateId s, ActionId a,
              double reward, AleatoricStateId s_next, double tau, double beta);

// Time-indexed schedule used by the growing-horizon agent, t = 1, 2, ...
struct Schedule {
  std::string name;
  std::function<double(std::uint64_t)> horizon;           // foo1
  std::function<double(std::uint64_t)> optimism;          // foo2
  std::function<double(std::uint64_t)> q_increment;       // foo3
  std::function<double(std::uint64_t)> count_multiplier;  // foo4
};

// T_0 = 1, T_k = 20 * 2^(k-1).
double change_point(std::uint32_t k);

// k_t = max{k >= 0 : T_k <= t}, with k_0 = 0.
std::uint32_t change_point_index(std::uint64_t t);

// Piecewise-constant schedule that restarts learning at every change point.
Schedule episodic_schedule();

// horizon 1.5 t^(1/5), optimism 0.44 t^(3/10) sqrt(log(2 t^2)), counts kept.
Schedule smooth_schedule(double horizon_scale = 1.5,
                         double optimism_scale = 0.44);

struct DiscountedAgentParams {
  double tau = 1.0;
  std::uint64_t duration = 1;
  // Defaults: beta = 4 tau^(3/2) sqrt(log(2 T^2)) and q_init = tau.
  std::optional<double> beta;
  std::optional<double> q_init;

  double resolved_beta() const;
  double resolved_q_init() const;
};

// Shared state handling for the tabular agents.
class TabularQAgent : public Agent {
 public:
  std::size_t action_count() const override { return config_.action_count(); }
  std::size_t observation_count() const override {
    return config_.observation_count();
  }
  AleatoricStateId aleatoric_state() const override { return state_; }

  const EpistemicState& epistemic() const noexcept { return epistemic_; }
  const AgentConfig& config() const noexcept { return config_; }

 protected:
  TabularQAgent(AgentConfig config, double q_init);

  void learn(ActionId action, ObservationId observation, double tau,
             double beta);

  AgentConfig config_;
  EpistemicState epistemic_;
  AleatoricStateId state_;
};

// Fixed horizon tau and optimism beta over a known duration T.
class DiscountedQAgent final : public TabularQAgent {
 public:
  DiscountedQAgent(AgentConfig config, const DiscountedAgentParams& params);

  ActionId act(Rng& rng) override;
  void observe(ActionId action, ObservationId observation) override;

  double tau() const noexcept { return tau_; }
  double beta() const noexcept { return beta_; }
  double gamma() const noexcept { return 1.0 - 1.0 / tau_; }

 private:
  double tau_;
  double beta_;
};

DiscountedQAgent make_discounted_agent(const AgentConfig& cfg,
                                       const DiscountedAgentParams& params);

// Horizon, optimism, value shift and count scaling follow a Schedule.
class GrowingHorizonQAgent final : public TabularQAgent {
 public:
  GrowingHorizonQAgent(AgentConfig config, Schedule schedule);

  // Advances the clock, applies the schedule, then picks a greedy action.
  ActionId act(Rng& rng) override;
  void observe(ActionId action, ObservationId observation) override;

  std::uint64_t timestep() const noexcept { return t_; }
  double tau() const noexcept { return tau_; }
  double beta() const noexcept { return beta_; }
  const Schedule& schedule() const noexcept { return schedule_; }

 private:
  Schedule schedule_;
  std::uint64_t t_ = 0;
  double tau_ = 1.0;
  double beta_ = 0.0;
};

GrowingHorizonQAgent make_growing_horizon_agent(const AgentConfig& cfg,
                                                const Schedule& schedule);

// Non-learning agent following a (possibly randomized) rule of the aleatoric
// state. Used for fixed policies and the epsilon-policies.
class FixedPolicyAgent final : public Agent {
 public:
  using Rule = std::function<ActionId(AleatoricStateId, Rng&)>;

  FixedPolicyAgent(AgentConfig config, Rule rule);

  std::size_t action_count() const override { return config_.action_count(); }
  std::size_t observation_count() const override {
    return config_.observation_count();
  }
  AleatoricStateId aleatoric_state() const override { return state_; }
  ActionId act(Rng& rng) override { return rule_(state_, rng); }
  void observe(ActionId action, ObservationId observation) override;

 private:
  AgentConfig config_;
  Rule rule_;
  AleatoricStateId state_;
};

}  // namespace oql
