#include "oql/agents.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace oql {

EpistemicState::EpistemicState(std::size_t state_count,
                               std::size_t action_count, double q_init)
    : state_count_(state_count),
      action_count_(action_count),
      q_(state_count * action_count, q_init),
      n_(state_count * action_count, 0.0) {}

double EpistemicState::max_q(std::size_t s) const {
  const auto row = q_.begin() + static_cast<std::ptrdiff_t>(s * action_count_);
  return *std::max_element(row, row + static_cast<std::ptrdiff_t>(action_count_));
}

void EpistemicState::shift_values(double delta) {
  if (delta == 0.0) return;
  for (double& v : q_) v += delta;
}

void EpistemicState::scale_counts(double factor) {
  if (factor == 1.0) return;
  for (double& n : n_) n *= factor;
}

double step_size(double n, double tau) {
  if (!(n >= 1.0)) throw ContractViolation("step_size: visit count must be >= 1");
  if (!(tau >= 1.0)) throw ContractViolation("step_size: tau must be >= 1");
  return (1.0 + 2.0 * tau) / (n + 2.0 * tau);
}

ActionId greedy_action(const EpistemicState& state, AleatoricStateId s,
                       Rng& rng) {
  const std::size_t actions = state.action_count();
  double best = state.q(s.value, 0);
  std::size_t ties = 1;
  for (std::size_t a = 1; a < actions; ++a) {
    const double v = state.q(s.value, a);
    if (v > best) {
      best = v;
      ties = 1;
    } else if (v == best) {
      ++ties;
    }
  }
  if (ties == 1) {
    for (std::size_t a = 0; a < actions; ++a) {
      if (state.q(s.value, a) == best) return ActionId{a};
    }
  }
  std::size_t pick = rng.index(ties);
  for (std::size_t a = 0; a < actions; ++a) {
    if (state.q(s.value, a) == best && pick-- == 0) return ActionId{a};
  }
  return ActionId{actions - 1};  // unreachable
}

void q_update(EpistemicState& state, AleatoricStateId s, ActionId a,
              double reward, AleatoricStateId s_next, double tau, double beta) {
  const double gamma = 1.0 - 1.0 / tau;
  double& n = state.count(s.value, a.value);
  n += 1.0;
  const double alpha = step_size(n, tau);
  double& q = state.q(s.value, a.value);
  const double target = reward + gamma * state.max_q(s_next.value) +
                        beta / std::sqrt(n);
  q += alpha * (target - q);
  q = std::min(q, tau);
}

double change_point(std::uint32_t k) {
  if (k == 0) return 1.0;
  return 20.0 * std::ldexp(1.0, static_cast<int>(k) - 1);
}

std::uint32_t change_point_index(std::uint64_t t) {
  if (t < 20) return 0;
  std::uint32_t k = 1;
  while (change_point(k + 1) <= static_cast<double>(t)) ++k;
  return k;
}

Schedule episodic_schedule() {
  Schedule s;
  s.name = "episodic";
  s.horizon = [](std::uint64_t t) {
    return std::pow(change_point(change_point_index(t)), 0.2);
  };
  s.optimism = [](std::uint64_t t) {
    const double tk = change_point(change_point_index(t));
    return 4.0 * std::pow(tk, 0.3) * std::sqrt(std::log(2.0 * tk * tk));
  };
  s.q_increment = [](std::uint64_t t) {
    const std::uint32_t now = change_point_index(t);
    const std::uint32_t before = change_point_index(t == 0 ? 0 : t - 1);
    if (now == before) return 0.0;
    return std::pow(change_point(now), 0.2) - std::pow(change_point(before), 0.2);
  };
  s.count_multiplier = [](std::uint64_t t) {
    const std::uint32_t before = change_point_index(t == 0 ? 0 : t - 1);
    return change_point_index(t) == before ? 1.0 : 0.0;
  };
  return s;
}

Schedule smooth_schedule(double horizon_scale, double optimism_scale) {
  Schedule s;
  s.name = "smooth";
  s.horizon = [horizon_scale](std::uint64_t t) {
    return horizon_scale * std::pow(static_cast<double>(t), 0.2);
  };
  s.optimism = [optimism_scale](std::uint64_t t) {
    const double td = static_cast<double>(t);
    return optimism_scale * std::pow(td, 0.3) * std::sqrt(std::log(2.0 * td * td));
  };
  s.q_increment = [horizon_scale](std::uint64_t t) {
    const double td = static_cast<double>(t);
    return horizon_scale * (std::pow(td, 0.2) - std::pow(td - 1.0, 0.2));
  };
  s.count_multiplier = [](std::uint64_t) { return 1.0; };
  return s;
}

double DiscountedAgentParams::resolved_beta() const {
  if (beta) return *beta;
  const double T = static_cast<double>(duration);
  return 4.0 * std::pow(tau, 1.5) * std::sqrt(std::log(2.0 * T * T));
}

double DiscountedAgentParams::resolved_q_init() const {
  return q_init.value_or(tau);
}

TabularQAgent::TabularQAgent(AgentConfig config, double q_init)
    : config_(std::move(config)),
      epistemic_(config_.state_count(), config_.action_count(), q_init),
      state_(config_.initial_state()) {}

void TabularQAgent::learn(ActionId action, ObservationId observation,
                          double tau, double beta) {
  const AleatoricStateId next = config_.next_state(state_, action, observation);
  const double r = config_.reward(state_, action, observation);
  q_update(epistemic_, state_, action, r, next, tau, beta);
  state_ = next;
}

DiscountedQAgent::DiscountedQAgent(AgentConfig config,
                                   const DiscountedAgentParams& params)
    : TabularQAgent(std::move(config), params.resolved_q_init()),
      tau_(params.tau),
      beta_(params.resolved_beta()) {
  if (!(params.tau >= 1.0)) throw ConfigError("discounted agent: tau must be >= 1");
  if (params.duration < 1) throw ConfigError("discounted agent: T must be >= 1");
}

ActionId DiscountedQAgent::act(Rng& rng) {
  return greedy_action(epistemic_, state_, rng);
}

void DiscountedQAgent::observe(ActionId action, ObservationId observation) {
  learn(action, observation, tau_, beta_);
}

DiscountedQAgent make_discounted_agent(const AgentConfig& cfg,
                                       const DiscountedAgentParams& params) {
  return DiscountedQAgent(cfg, params);
}

GrowingHorizonQAgent::GrowingHorizonQAgent(AgentConfig config,
                                           Schedule schedule)
    : TabularQAgent(std::move(config), 1.0), schedule_(std::move(schedule)) {
  if (!schedule_.horizon || !schedule_.optimism || !schedule_.q_increment ||
      !schedule_.count_multiplier) {
    throw ConfigError("growing-horizon agent: incomplete schedule");
  }
  if (!(schedule_.horizon(1) >= 1.0)) {
    throw ConfigError("growing-horizon agent: horizon(1) must be >= 1");
  }
}

ActionId GrowingHorizonQAgent::act(Rng& rng) {
  ++t_;
  tau_ = schedule_.horizon(t_);
  beta_ = schedule_.optimism(t_);
  epistemic_.shift_values(schedule_.q_increment(t_));
  epistemic_.scale_counts(schedule_.count_multiplier(t_));
  return greedy_action(epistemic_, state_, rng);
}

void GrowingHorizonQAgent::observe(ActionId action, ObservationId observation) {
  learn(action, observation, tau_, beta_);
}

GrowingHorizonQAgent make_growing_horizon_agent(const AgentConfig& cfg,
                                                const Schedule& schedule) {
  return GrowingHorizonQAgent(cfg, schedule);
}

FixedPolicyAgent::FixedPolicyAgent(AgentConfig config, Rule rule)
    : config_(std::move(config)),
      rule_(std::move(rule)),
      state_(config_.initial_state()) {
  if (!rule_) throw ConfigError("fixed policy agent: missing rule");
}

void FixedPolicyAgent::observe(ActionId action, ObservationId observation) {
  state_ = config_.next_state(state_, action, observation);
}

}  // namespace oql
