#include "oql/core.hpp"

#include <string>

namespace oql {

AgentConfig::AgentConfig(std::size_t state_count, std::size_t action_count,
                         std::size_t observation_count,
                         AleatoricStateId initial_state,
                         const UpdateFunction& update,
                         const RewardFunction& reward)
    : state_count_(state_count),
      action_count_(action_count),
      observation_count_(observation_count),
      initial_state_(initial_state) {
  if (state_count == 0 || action_count == 0 || observation_count == 0) {
    throw ConfigError("agent config: state, action and observation sets must be nonempty");
  }
  if (initial_state.value >= state_count) {
    throw ConfigError("agent config: initial aleatoric state out of range");
  }
  if (!update || !reward) {
    throw ConfigError("agent config: update and reward functions are required");
  }
  const std::size_t n = state_count * action_count * observation_count;
  update_table_.resize(n);
  reward_table_.resize(n);
  for (std::size_t s = 0; s < state_count; ++s) {
    for (std::size_t a = 0; a < action_count; ++a) {
      for (std::size_t o = 0; o < observation_count; ++o) {
        const AleatoricStateId si{s};
        const ActionId ai{a};
        const ObservationId oi{o};
        const AleatoricStateId next = update(si, ai, oi);
        if (next.value >= state_count) {
          throw ConfigError("agent config: update function leaves the aleatoric state set");
        }
        const double r = reward(si, ai, oi);
        if (!(r >= 0.0 && r <= 1.0)) {
          throw ConfigError("agent config: reward " + std::to_string(r) +
                            " outside [0, 1]");
        }
        update_table_[flat(si, ai, oi)] = next;
        reward_table_[flat(si, ai, oi)] = r;
      }
    }
  }
}

std::size_t AgentConfig::flat(AleatoricStateId s, ActionId a,
                              ObservationId o) const {
  return (s.value * action_count_ + a.value) * observation_count_ + o.value;
}

AleatoricStateId AgentConfig::next_state(AleatoricStateId s, ActionId a,
                                         ObservationId o) const {
  return update_table_[flat(s, a, o)];
}

double AgentConfig::reward(AleatoricStateId s, ActionId a,
                           ObservationId o) const {
  return reward_table_[flat(s, a, o)];
}

AleatoricStateId apply_update_function(const AgentConfig& cfg,
                                       AleatoricStateId s, ActionId a,
                                       ObservationId o) {
  if (s.value >= cfg.state_count() || a.value >= cfg.action_count() ||
      o.value >= cfg.observation_count()) {
    throw ContractViolation("apply_update_function: index out of range");
  }
  return cfg.next_state(s, a, o);
}

namespace {

void check_compatible(const Agent& agent, const Environment& env) {
  if (agent.action_count() != env.action_count()) {
    throw ConfigError("run_stream: agent has " +
                      std::to_string(agent.action_count()) +
                      " actions but environment has " +
                      std::to_string(env.action_count()));
  }
  if (agent.observation_count() != env.observation_count()) {
    throw ConfigError("run_stream: agent and environment observation sets differ");
  }
}

}  // namespace

Trajectory run_stream(Agent& agent, Environment& env, std::size_t steps,
                      Rng& rng) {
  if (steps == 0) throw ContractViolation("run_stream: T must be >= 1");
  check_compatible(agent, env);
  Trajectory traj;
  traj.seed = rng.seed();
  traj.actions.reserve(steps);
  traj.observations.reserve(steps);
  traj.rewards.reserve(steps);
  traj.aleatoric_states.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    traj.aleatoric_states.push_back(agent.aleatoric_state());
    const ActionId a = agent.act(rng);
    const EnvStep out = env.step(a, rng);
    agent.observe(a, out.observation);
    traj.actions.push_back(a);
    traj.observations.push_back(out.observation);
    traj.rewards.push_back(out.raw_reward);
  }
  return traj;
}

void run_stream(Agent& agent, Environment& env, std::size_t steps, Rng& rng,
                const std::function<void(std::size_t, double)>& sink) {
  if (steps == 0) throw ContractViolation("run_stream: T must be >= 1");
  check_compatible(agent, env);
  for (std::size_t t = 0; t < steps; ++t) {
    const ActionId a = agent.act(rng);
    const EnvStep out = env.step(a, rng);
    agent.observe(a, out.observation);
    sink(t, out.raw_reward);
  }
}

}  // namespace oql
