#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "oql/core.hpp"

namespace oql::service {

// Action and observation encodings for the service station.
inline constexpr ActionId kFast{0};
inline constexpr ActionId kSlow{1};
inline constexpr std::size_t kActionCount = 2;
inline constexpr std::size_t kObservationCount = 4;
inline constexpr std::size_t kStateCount = 2;  // aleatoric: vacant / occupied

struct Observation {
  bool arrival = false;
  bool departure = false;

  bool operator==(const Observation&) const = default;
};

// index = 2 * arrival + departure.
constexpr ObservationId encode(Observation o) noexcept {
  return ObservationId{(o.arrival ? 2u : 0u) + (o.departure ? 1u : 0u)};
}
constexpr Observation decode(ObservationId o) noexcept {
  return Observation{(o.value & 2u) != 0, (o.value & 1u) != 0};
}

struct Params {
  double arrival_floor = 0.1;      // P_t = floor + amplitude e^{-decay (W - 1)}
  double arrival_amplitude = 0.9;
  double arrival_decay = 10.0;
  std::size_t window = 12;         // customers remembered for W_t
  double payment = 1.0;            // paid by each arriving customer
  double fast_cost = 0.5;          // per timestep of fast service
};

double arrival_probability(double max_service_time, const Params& params = {});

struct State {
  bool occupied = false;
  std::uint32_t elapsed = 0;  // completed serving steps of the current customer
  std::vector<std::uint32_t> recent_service_times;  // ring buffer
  std::size_t next_slot = 0;

  std::uint32_t max_recent_service_time() const;
};

State initial_state(const Params& params = {});

// Probability of each encoded observation given the state and action.
std::array<double, kObservationCount> observation_probabilities(
    const State& state, ActionId action, const Params& params = {});

// Raw profit: payment on arrival, minus fast_cost for fast service of a
// present customer.
double profit(bool occupied, ActionId action, Observation o,
              const Params& params = {});

struct StepResult {
  Observation observation;
  double raw_reward = 0.0;
  State next;
};

StepResult service_step(const State& state, ActionId action, Rng& rng,
                        const Params& params = {});

// S_{t+1} = 1 iff a customer arrived, or one was present and did not leave.
AleatoricStateId aleatoric_presence_update(AleatoricStateId s, ActionId a,
                                           ObservationId o);

// Affine map of raw profit onto [0, 1]: (p + fast_cost) / (payment + fast_cost).
double rescale_profit(double raw, const Params& params = {});

// Presence-indicator aleatoric state with rescaled profit as reward.
AgentConfig agent_config(const Params& params = {});

class ServiceStation final : public Environment {
 public:
  explicit ServiceStation(Params params = {});

  std::size_t action_count() const override { return kActionCount; }
  std::size_t observation_count() const override { return kObservationCount; }
  EnvStep step(ActionId action, Rng& rng) override;

  const State& state() const noexcept { return state_; }
  const Params& params() const noexcept { return params_; }

 private:
  Params params_;
  State state_;
};

}  // namespace oql::service
