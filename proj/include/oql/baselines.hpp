#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "oql/agents.hpp"
#include "oql/service_station.hpp"

namespace oql::baselines {

// Steady-state P(W <= w) under pi_eps: (1 - ((1 - eps) / 2)^w)^window.
double w_steady_cdf(double epsilon, unsigned w, std::size_t window = 12);

// G(eps) = E[P_inf] under pi_eps, summed over w = 1..w_max with the remaining
// mass charged at the arrival floor. Truncation error <= amplitude e^{-decay w_max}.
double g_of_eps(double epsilon, unsigned w_max = 200,
                const service::Params& params = {});

// lambda(eps) = G / ((1 - eps) G + (1 + eps)), in raw profit per step.
double lambda_eps_analytic(double epsilon, unsigned w_max = 200,
                           const service::Params& params = {});

// Estimate that freezes the arrival probability at g0 = G(0):
// 1 / (1 - eps + (1 + eps) / g0).
double lambda_hat_static(double epsilon, double g0);

// pi_eps: slow when vacant, otherwise fast with probability eps.
FixedPolicyAgent epsilon_policy_agent(double epsilon,
                                      const service::Params& params = {});

enum class BaselineKind { static_estimator, first_order, second_order };

BaselineKind parse_baseline_kind(const std::string& name);
std::string to_string(BaselineKind kind);

struct SimulationEstimate {
  std::uint64_t seed = 1;
  std::size_t burn_in = 10000;
  std::size_t steps = 1000000;
  double probe_epsilon = 0.05;  // finite-difference offset for derivatives
};

struct BaselineOptions {
  unsigned w_max = 200;
  double fd_step = 1e-4;          // central differences on the analytic curve
  std::size_t grid_points = 21;   // epsilon grid for the static estimator
  double first_order_step = 0.1;  // increase applied if the slope is positive
  service::Params params;
  // When set, G(0) and the derivatives come from simulation instead.
  std::optional<SimulationEstimate> simulation;
};

struct BaselineChoice {
  BaselineKind kind = BaselineKind::static_estimator;
  double epsilon = 0.0;
  double g0 = 0.0;
  double lambda0 = 0.0;
  double first_derivative = 0.0;
  double half_second_derivative = 0.0;
};

struct Derivatives {
  double lambda0 = 0.0;
  double first = 0.0;
  double half_second = 0.0;
};

// Central differences of lambda_eps_analytic at eps = 0.
Derivatives analytic_derivatives(const BaselineOptions& options = {});

// Long-run raw reward of pi_eps by simulation, after burn_in steps.
double simulate_lambda(double epsilon, const SimulationEstimate& sim,
                       const service::Params& params = {});

// Mean arrival probability P_t seen by pi_0 after burn-in.
double simulate_g0(const SimulationEstimate& sim, const service::Params& params = {});

BaselineChoice baseline_choose(BaselineKind kind, const BaselineOptions& options = {});

}  // namespace oql::baselines
