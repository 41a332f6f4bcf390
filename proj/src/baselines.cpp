#include "oql/baselines.hpp"

#include <cmath>

namespace oql::baselines {

double w_steady_cdf(double epsilon, unsigned w, std::size_t window) {
  if (!(epsilon >= -1.0 && epsilon <= 1.0)) {
    throw ContractViolation("w_steady_cdf: epsilon out of range");
  }
  const double stay = (1.0 - epsilon) / 2.0;  // P(service continues one more step)
  return std::pow(1.0 - std::pow(stay, static_cast<double>(w)),
                  static_cast<double>(window));
}

double g_of_eps(double epsilon, unsigned w_max, const service::Params& params) {
  if (w_max < 1) throw ContractViolation("g_of_eps: w_max must be >= 1");
  double g = 0.0;
  double previous = w_steady_cdf(epsilon, 0, params.window);
  for (unsigned w = 1; w <= w_max; ++w) {
    const double cdf = w_steady_cdf(epsilon, w, params.window);
    g += (cdf - previous) * service::arrival_probability(w, params);
    previous = cdf;
  }
  return g + params.arrival_floor * (1.0 - previous);
}

double lambda_eps_analytic(double epsilon, unsigned w_max,
                           const service::Params& params) {
  const double g = g_of_eps(epsilon, w_max, params);
  return g / ((1.0 - epsilon) * g + (1.0 + epsilon));
}

double lambda_hat_static(double epsilon, double g0) {
  if (!(g0 > 0.0 && g0 <= 1.0)) throw ContractViolation("lambda_hat_static: g0 must lie in (0, 1]");
  return 1.0 / (1.0 - epsilon + (1.0 + epsilon) / g0);
}

FixedPolicyAgent epsilon_policy_agent(double epsilon,
                                      const service::Params& params) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon policy: epsilon must lie in [0, 1]");
  }
  return FixedPolicyAgent(
      service::agent_config(params),
      [epsilon](AleatoricStateId s, Rng& rng) {
        if (s.value == 0 || epsilon == 0.0) return service::kSlow;
        if (epsilon == 1.0) return service::kFast;
        return rng.bernoulli(epsilon) ? service::kFast : service::kSlow;
      });
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "static") return BaselineKind::static_estimator;
  if (name == "first_order") return BaselineKind::first_order;
  if (name == "second_order") return BaselineKind::second_order;
  throw ConfigError("unknown baseline '" + name +
                    "' (expected static, first_order or second_order)");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::static_estimator: return "static";
    case BaselineKind::first_order: return "first_order";
    case BaselineKind::second_order: return "second_order";
  }
  return "unknown";
}

Derivatives analytic_derivatives(const BaselineOptions& options) {
  const double h = options.fd_step;
  auto lambda = [&](double e) {
    return lambda_eps_analytic(e, options.w_max, options.params);
  };
  const double mid = lambda(0.0);
  const double up = lambda(h);
  const double down = lambda(-h);
  return Derivatives{mid, (up - down) / (2.0 * h),
                     0.5 * (up - 2.0 * mid + down) / (h * h)};
}

double simulate_lambda(double epsilon, const SimulationEstimate& sim,
                       const service::Params& params) {
  FixedPolicyAgent agent = epsilon_policy_agent(epsilon, params);
  service::ServiceStation env(params);
  Rng rng(sim.seed);
  double total = 0.0;
  run_stream(agent, env, sim.burn_in + sim.steps, rng,
             [&](std::size_t t, double r) {
               if (t >= sim.burn_in) total += r;
             });
  return total / static_cast<double>(sim.steps);
}

double simulate_g0(const SimulationEstimate& sim, const service::Params& params) {
  FixedPolicyAgent agent = epsilon_policy_agent(0.0, params);
  service::ServiceStation env(params);
  Rng rng(sim.seed);
  double total = 0.0;
  for (std::size_t t = 0; t < sim.burn_in + sim.steps; ++t) {
    if (t >= sim.burn_in) {
      total += service::arrival_probability(env.state().max_recent_service_time(), params);
    }
    const ActionId a = agent.act(rng);
    agent.observe(a, env.step(a, rng).observation);
  }
  return total / static_cast<double>(sim.steps);
}

namespace {

Derivatives simulated_derivatives(const SimulationEstimate& sim,
                                  const service::Params& params) {
  // Forward differences from eps = 0, probe and 2 probe with common seeds.
  const double h = sim.probe_epsilon;
  const double l0 = simulate_lambda(0.0, sim, params);
  const double l1 = simulate_lambda(h, sim, params);
  const double l2 = simulate_lambda(2.0 * h, sim, params);
  return Derivatives{l0, (-3.0 * l0 + 4.0 * l1 - l2) / (2.0 * h),
                     0.5 * (l0 - 2.0 * l1 + l2) / (h * h)};
}

}  // namespace

BaselineChoice baseline_choose(BaselineKind kind, const BaselineOptions& options) {
  BaselineChoice out;
  out.kind = kind;
  const Derivatives d = options.simulation
                            ? simulated_derivatives(*options.simulation, options.params)
                            : analytic_derivatives(options);
  out.g0 = options.simulation ? simulate_g0(*options.simulation, options.params)
                              : g_of_eps(0.0, options.w_max, options.params);
  out.lambda0 = d.lambda0;
  out.first_derivative = d.first;
  out.half_second_derivative = d.half_second;

  switch (kind) {
    case BaselineKind::static_estimator: {
      const std::size_t n = options.grid_points < 2 ? 2 : options.grid_points;
      double best = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = static_cast<double>(i) / static_cast<double>(n - 1);
        const double v = lambda_hat_static(e, out.g0);
        if (v > best) {
          best = v;
          out.epsilon = e;
        }
      }
      break;
    }
    case BaselineKind::first_order:
      out.epsilon = d.first > 0.0 ? std::min(1.0, options.first_order_step) : 0.0;
      break;
    case BaselineKind::second_order: {
      // Maximize lambda0 + first e + half_second e^2 over [0, 1].
      auto model = [&](double e) { return d.first * e + d.half_second * e * e; };
      double best_e = 0.0;
      double best = 0.0;
      if (model(1.0) > best) {
        best = model(1.0);
        best_e = 1.0;
      }
      if (d.half_second < 0.0) {
        const double e = -d.first / (2.0 * d.half_second);
        if (e > 0.0 && e < 1.0 && model(e) > best) best_e = e;
      }
      out.epsilon = best_e;
      break;
    }
  }
  return out;
}

}  // namespace oql::baselines
