#include "oql/service_station.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace oql::service {

double arrival_probability(double max_service_time, const Params& params) {
  if (!(max_service_time >= 1.0)) {
    throw ContractViolation("arrival_probability: W must be >= 1");
  }
  return params.arrival_floor +
         params.arrival_amplitude *
             std::exp(-params.arrival_decay * (max_service_time - 1.0));
}

std::uint32_t State::max_recent_service_time() const {
  return *std::max_element(recent_service_times.begin(),
                           recent_service_times.end());
}

State initial_state(const Params& params) {
  if (params.window == 0) throw ConfigError("service station: window must be >= 1");
  State s;
  s.recent_service_times.assign(params.window, 1);
  return s;
}

std::array<double, kObservationCount> observation_probabilities(
    const State& state, ActionId action, const Params& params) {
  const double p = arrival_probability(state.max_recent_service_time(), params);
  std::array<double, kObservationCount> probs{};
  auto at = [&](bool arrival, bool departure) -> double& {
    return probs[encode({arrival, departure}).value];
  };
  if (!state.occupied) {
    at(true, false) = p;
    at(false, false) = 1.0 - p;
  } else if (action == kFast) {
    at(true, true) = p;
    at(false, true) = 1.0 - p;
  } else {
    at(true, true) = p / 2.0;
    at(false, true) = (1.0 - p) / 2.0;
    at(false, false) = 0.5;
  }
  return probs;
}

double profit(bool occupied, ActionId action, Observation o,
              const Params& params) {
  double r = o.arrival ? params.payment : 0.0;
  if (occupied && action == kFast) r -= params.fast_cost;
  return r;
}

namespace {

Observation sample_observation(const State& state, ActionId action, Rng& rng,
                               const Params& params) {
  const auto probs = observation_probabilities(state, action, params);
  const double u = rng.uniform();
  std::size_t pick = kObservationCount - 1;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < kObservationCount; ++i) {
    cumulative += probs[i];
    if (u < cumulative) {
      pick = i;
      break;
    }
  }
  // u can land in the rounding gap above the last nonzero cell.
  while (probs[pick] == 0.0 && pick > 0) --pick;
  return decode(ObservationId{pick});
}

void advance(State& state, Observation o) {
  if (state.occupied) {
    if (o.departure) {
      state.recent_service_times[state.next_slot] = state.elapsed + 1;
      state.next_slot = (state.next_slot + 1) % state.recent_service_times.size();
      state.occupied = false;
      state.elapsed = 0;
    } else {
      ++state.elapsed;
    }
  }
  if (o.arrival) {
    state.occupied = true;
    state.elapsed = 0;
  }
}

}  // namespace

StepResult service_step(const State& state, ActionId action, Rng& rng,
                        const Params& params) {
  StepResult out;
  out.observation = sample_observation(state, action, rng, params);
  out.raw_reward = profit(state.occupied, action, out.observation, params);
  out.next = state;
  advance(out.next, out.observation);
  return out;
}

AleatoricStateId aleatoric_presence_update(AleatoricStateId s, ActionId,
                                           ObservationId o) {
  const Observation obs = decode(o);
  const bool present = obs.arrival || (s.value == 1 && !obs.departure);
  return AleatoricStateId{present ? 1u : 0u};
}

double rescale_profit(double raw, const Params& params) {
  return (raw + params.fast_cost) / (params.payment + params.fast_cost);
}

AgentConfig agent_config(const Params& params) {
  return AgentConfig(
      kStateCount, kActionCount, kObservationCount, AleatoricStateId{0},
      aleatoric_presence_update,
      [params](AleatoricStateId s, ActionId a, ObservationId o) {
        return rescale_profit(profit(s.value == 1, a, decode(o), params), params);
      });
}

ServiceStation::ServiceStation(Params params)
    : params_(std::move(params)), state_(initial_state(params_)) {}

EnvStep ServiceStation::step(ActionId action, Rng& rng) {
  if (action.value >= kActionCount) {
    throw ContractViolation("service station: action out of range");
  }
  const Observation o = sample_observation(state_, action, rng, params_);
  const double reward = profit(state_.occupied, action, o, params_);
  advance(state_, o);
  return EnvStep{encode(o), reward};
}

}  // namespace oql::service
