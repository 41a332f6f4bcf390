#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "oql/baselines.hpp"
#include "oql/finite_mdp.hpp"
#include "oql/harness.hpp"
#include "oql/oracle.hpp"

using nlohmann::json;
using namespace oql;

namespace {

int fail(const std::string& kind, const std::string& message, int code = 2) {
  std::cerr << json{{"status", "error"}, {"error", kind}, {"message", message}}.dump() << "\n";
  return code;
}

// --- run --------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> horizon;
  std::optional<std::size_t> workers;
};

int cmd_run(const RunArgs& a) {
  harness::ExperimentConfig c = harness::load_experiment_config(a.config);
  if (a.seed) c.base_seed = *a.seed;
  if (a.out) c.output_path = *a.out;
  if (a.trials) c.trials = *a.trials;
  if (a.horizon) c.T = *a.horizon;
  if (a.workers) c.workers = *a.workers;
  const harness::MetricsTable m = harness::run_experiment(c);
  const auto& last = m.final_row();
  json out{{"status", "ok"},
           {"output_path", c.output_path},
           {"T", last.t},
           {"trials", c.trials},
           {"cma_mean", last.cma_mean},
           {"cma_std", last.cma_std}};
  if (last.regret_mean) out["regret_mean"] = *last.regret_mean;
  std::cout << out.dump(2) << "\n";
  return 0;
}

// --- oracle -----------------------------------------------------------------

struct OracleArgs {
  std::string mdp_path;
  std::string op = "value_iteration";
  double gamma = 0.9;
  double tau = 1.0;
  double tau_max = 1e3;
  double tol = 1e-10;
  std::vector<std::size_t> policy;        // per state, or per aleatoric state
  std::vector<std::size_t> aleatoric_policy;
  std::vector<double> gammas = {0.5, 0.9, 0.99};
  std::size_t t_max = 10000;
  std::size_t m_samples = 100;
  std::size_t iterations = 300;
  std::uint64_t seed = 1;
  std::size_t start = 0;
};

oracle::PolicyTable policy_from(const FiniteMdp& mdp, const OracleArgs& a) {
  if (!a.aleatoric_policy.empty()) return oracle::lift_aleatoric_policy(mdp, a.aleatoric_policy);
  if (!a.policy.empty()) return oracle::PolicyTable::deterministic(mdp.action_count(), a.policy);
  return oracle::PolicyTable::uniform(mdp.state_count(), mdp.action_count());
}

int cmd_oracle(const OracleArgs& a) {
  const FiniteMdp mdp = load_finite_mdp(a.mdp_path);
  json r{{"op", a.op}, {"n_states", mdp.state_count()}, {"n_actions", mdp.action_count()}};
  if (a.op == "value_iteration") {
    const auto q = oracle::value_iteration(mdp, a.gamma, a.tol);
    r.update({{"gamma", a.gamma}, {"q", q.q}, {"v", q.v}, {"iterations", q.iterations}, {"residual", q.residual}});
  } else if (a.op == "policy_evaluation") {
    r.update({{"gamma", a.gamma}, {"v", oracle::policy_evaluation_discounted(mdp, policy_from(mdp, a), a.gamma)}});
  } else if (a.op == "average_reward") {
    const auto ar = oracle::average_reward(mdp, policy_from(mdp, a));
    r.update({{"lambda", ar.per_state}, {"recurrent_classes", ar.recurrent_classes}, {"unichain", ar.unichain()}});
  } else if (a.op == "averaging_time") {
    const auto rep = oracle::averaging_time(mdp, policy_from(mdp, a), a.t_max);
    r.update({{"lambda", rep.lambda}, {"tau_hat", rep.tau_hat}, {"t_max", rep.t_max},
              {"argmax_state", rep.argmax_state}, {"argmax_horizon", rep.argmax_horizon},
              {"note", rep.tail_bound_note}});
  } else if (a.op == "distortion") {
    r.update({{"tau", a.tau}, {"distortion", oracle::distortion(mdp, a.tau)}});
  } else if (a.op == "sup_distortion") {
    const auto sd = oracle::sup_distortion(mdp, a.tau, a.tau_max);
    r.update({{"tau", a.tau}, {"sup_distortion", sd.value}, {"tau_grid", sd.tau_grid}, {"values", sd.values}});
  } else if (a.op == "best_aleatoric_policy" || a.op == "optimal_policy") {
    const auto p = a.op == "optimal_policy" ? oracle::optimal_stationary_policy(mdp, a.start)
                                            : oracle::best_aleatoric_policy(mdp, a.start);
    r.update({{"actions", p.actions}, {"lambda", p.lambda}, {"start_state", a.start}});
  } else if (a.op == "mixing") {
    const auto rep = oracle::check_mixing_lemma(mdp, policy_from(mdp, a), a.gammas, a.t_max);
    json checks = json::array();
    for (const auto& c : rep.checks) {
      checks.push_back({{"gamma", c.gamma}, {"state", c.state}, {"lhs", c.lhs}, {"bound", c.bound}});
    }
    r.update({{"tau_hat", rep.tau_hat}, {"passed", rep.passed}, {"worst_margin", rep.worst_margin},
              {"checks", checks}});
  } else if (a.op == "fitted_vi") {
    Rng rng(a.seed);
    const auto f = oracle::fitted_value_iteration(mdp, a.gamma, a.m_samples, a.iterations, rng);
    r.update({{"values", f.values}, {"greedy", f.greedy}, {"q", f.q}, {"iterations", f.iterations},
              {"last_change", f.last_change}});
  } else {
    throw ConfigError("unknown oracle op '" + a.op + "'");
  }
  std::cout << r.dump(2) << "\n";
  return 0;
}

// --- baselines --------------------------------------------------------------

struct BaselineArgs {
  bool simulate = false;
  std::size_t steps = 1000000;
  std::size_t burn_in = 10000;
  std::uint64_t seed = 1;
  double probe = 0.05;
  bool as_json = false;
};

int cmd_baselines(const BaselineArgs& a) {
  baselines::BaselineOptions opt;
  if (a.simulate) opt.simulation = baselines::SimulationEstimate{a.seed, a.burn_in, a.steps, a.probe};
  json rows = json::array();
  bool all_zero = true;
  baselines::BaselineChoice last;
  for (auto k : {baselines::BaselineKind::static_estimator, baselines::BaselineKind::first_order,
                 baselines::BaselineKind::second_order}) {
    last = baselines::baseline_choose(k, opt);
    all_zero = all_zero && last.epsilon == 0.0;
    rows.push_back({{"agent", baselines::to_string(k)}, {"epsilon", last.epsilon}});
  }
  const bool first_ok = last.first_derivative < -0.072 + 1e-3;
  const bool second_ok = last.half_second_derivative < 0.0716 + 1e-3;
  json out{{"mode", a.simulate ? "simulation" : "analytic"},
           {"g0", last.g0},
           {"lambda0", last.lambda0},
           {"first_derivative", last.first_derivative},
           {"half_second_derivative", last.half_second_derivative},
           {"choices", rows},
           {"checks", {{"all_epsilon_zero", all_zero},
                       {"first_derivative_below_-0.072", first_ok},
                       {"half_second_below_0.0716", second_ok}}}};
  if (a.as_json) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::printf("mode            %s\n", a.simulate ? "simulation" : "analytic");
    std::printf("G(0)            %.10f\n", last.g0);
    std::printf("lambda(0)       %.10f\n", last.lambda0);
    std::printf("dlambda/deps    %.6f  (< -0.072: %s)\n", last.first_derivative, first_ok ? "yes" : "no");
    std::printf("half d2lambda   %.6f  (< 0.0716: %s)\n", last.half_second_derivative, second_ok ? "yes" : "no");
    std::printf("\n%-14s %s\n", "agent", "epsilon");
    for (const auto& r : rows) {
      std::printf("%-14s %g\n", r["agent"].get<std::string>().c_str(), r["epsilon"].get<double>());
    }
    std::printf("\n%-6s %-12s %-12s\n", "eps", "lambda", "lambda_hat");
    for (int i = 0; i <= 10; ++i) {
      const double e = i / 10.0;
      std::printf("%-6.1f %-12.6f %-12.6f\n", e, baselines::lambda_eps_analytic(e),
                  baselines::lambda_hat_static(e, last.g0));
    }
  }
  return 0;
}

// --- verify -----------------------------------------------------------------

json verify_learning_rate(bool& ok, std::size_t k_max) {
  const auto rep = oracle::check_learning_rate_lemma({1, 2, 5, 10, 50}, k_max);
  ok = rep.passed;
  json per = json::array();
  for (const auto& r : rep.per_tau) {
    per.push_back({{"tau", r.tau}, {"min_ratio_a_lower", r.min_ratio_a_lower},
                   {"max_ratio_a_upper", r.max_ratio_a_upper}, {"max_ratio_b_max", r.max_ratio_b_max},
                   {"max_ratio_b_sq", r.max_ratio_b_sq}, {"max_c_error", r.max_c_error},
                   {"violations", r.violations}});
  }
  return {{"passed", ok}, {"k_max", rep.k_max}, {"tail_horizon", rep.tail_horizon}, {"per_tau", per}};
}

json verify_mixing(bool& ok) {
  ok = true;
  const FiniteMdp adp = build_adp_env({});
  const FiniteMdp alt = build_alternation_env();
  json cases = json::array();
  auto add = [&](const std::string& name, const FiniteMdp& mdp, const oracle::PolicyTable& p) {
    const auto rep = oracle::check_mixing_lemma(mdp, p, {0.5, 0.9, 0.99}, 10000);
    ok = ok && rep.passed;
    cases.push_back({{"case", name}, {"passed", rep.passed}, {"tau_hat", rep.tau_hat},
                     {"worst_margin", rep.worst_margin}});
  };
  add("adp_pi_prime", adp, oracle::lift_aleatoric_policy(adp, {0, 1}));
  add("adp_action1", adp, oracle::lift_aleatoric_policy(adp, {0, 0}));
  add("alternation_alternate", alt, oracle::PolicyTable::deterministic(2, {0, 1, 0}));
  add("alternation_uniform", alt, oracle::PolicyTable::uniform(3, 2));
  return {{"passed", ok}, {"cases", cases}};
}

json verify_closed_forms(bool& ok) {
  const FiniteMdp alt = build_alternation_env();
  double worst = 0.0;
  for (double g : {0.1, 0.5, 0.9, 0.99}) {
    const auto q = oracle::value_iteration(alt, g);
    worst = std::max({worst, std::abs(q.at(1, 1) - 1.0 / (1.0 - g)), std::abs(q.at(1, 0) - g / (1.0 - g)),
                      std::abs(q.at(2, 0) - 1.0 / (1.0 - g)), std::abs(q.at(2, 1) - g / (1.0 - g))});
  }
  double dist = 0.0;
  for (double tau : {1.0, 2.0, 10.0}) dist = std::max(dist, std::abs(oracle::distortion(alt, tau) - 1.0));
  const double lstar = oracle::optimal_stationary_policy(alt).lambda;
  const double ltilde = oracle::best_aleatoric_policy(alt).lambda;
  ok = worst <= 1e-8 && dist <= 1e-8 && std::abs(lstar - 1.0) <= 1e-12 && std::abs(ltilde) <= 1e-12;
  return {{"passed", ok}, {"max_q_error", worst}, {"max_distortion_error", dist},
          {"lambda_star", lstar}, {"lambda_tilde", ltilde}};
}

int cmd_verify(const std::vector<std::string>& suites, std::size_t k_max) {
  json report{{"suites", json::object()}};
  bool all = true;
  auto want = [&](const std::string& s) {
    return suites.empty() || std::find(suites.begin(), suites.end(), s) != suites.end();
  };
  bool ok = true;
  if (want("learning_rate")) {
    report["suites"]["learning_rate"] = verify_learning_rate(ok, k_max);
    all = all && ok;
  }
  if (want("mixing")) {
    report["suites"]["mixing"] = verify_mixing(ok);
    all = all && ok;
  }
  if (want("closed_forms")) {
    report["suites"]["closed_forms"] = verify_closed_forms(ok);
    all = all && ok;
  }
  report["status"] = all ? "ok" : "failed";
  std::cout << report.dump(2) << "\n";
  return all ? 0 : 1;
}

// --- bounds -----------------------------------------------------------------

struct BoundCliArgs {
  std::string kind = "theorem2";
  double S = 1, A = 1, tau = 1, delta = 0, T = 1;
  double horizon = 1;
};

int cmd_bounds(const BoundCliArgs& a) {
  const oracle::BoundArgs args{a.S, a.A, a.tau, a.delta, a.T, a.horizon};
  const double v = oracle::regret_bound_value(oracle::parse_bound_kind(a.kind), args);
  std::cout << json{{"kind", a.kind}, {"S", a.S}, {"A", a.A}, {"tau_pi", a.tau},
                    {"distortion", a.delta}, {"T", a.T}, {"horizon", a.horizon}, {"value", v}}
                   .dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimistic Q-learning with aleatoric states: experiments and oracles"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run a seeded multi-trial experiment from a JSON config");
  run->add_option("config", run_args.config, "experiment config (JSON)")->required();
  run->add_option("--seed", run_args.seed, "override base_seed");
  run->add_option("--out", run_args.out, "override output_path");
  run->add_option("--trials", run_args.trials, "override trials");
  run->add_option("--horizon", run_args.horizon, "override T");
  run->add_option("--workers", run_args.workers, "worker threads (default: $OQL_WORKERS or cores)");

  OracleArgs oa;
  auto* orc = app.add_subcommand("oracle", "exact computations on a finite MDP (JSON)");
  orc->add_option("mdp", oa.mdp_path, "finite MDP JSON file")->required();
  orc->add_option("--op", oa.op, "operation")
      ->check(CLI::IsMember({"value_iteration", "policy_evaluation", "average_reward", "averaging_time",
                             "distortion", "sup_distortion", "best_aleatoric_policy", "optimal_policy",
                             "mixing", "fitted_vi"}));
  orc->add_option("--gamma", oa.gamma, "discount factor");
  orc->add_option("--tau", oa.tau, "effective horizon");
  orc->add_option("--tau-max", oa.tau_max, "upper end of the sup-distortion grid");
  orc->add_option("--tol", oa.tol, "value iteration tolerance");
  orc->add_option("--policy", oa.policy, "deterministic action per state")->delimiter(',');
  orc->add_option("--aleatoric-policy", oa.aleatoric_policy, "action per aleatoric state")->delimiter(',');
  orc->add_option("--gammas", oa.gammas, "discount grid for --op mixing")->delimiter(',');
  orc->add_option("--t-max", oa.t_max, "horizon for averaging time");
  orc->add_option("--m", oa.m_samples, "fitted VI samples per iteration");
  orc->add_option("--iterations", oa.iterations, "fitted VI iterations");
  orc->add_option("--seed", oa.seed, "fitted VI seed");
  orc->add_option("--start", oa.start, "start state for policy search");

  BaselineArgs ba;
  auto* bl = app.add_subcommand("baselines", "epsilon choices of the three baseline agents");
  bl->add_flag("--simulate", ba.simulate, "estimate from simulation instead of the analytic curve");
  bl->add_option("--steps", ba.steps, "simulation steps per estimate");
  bl->add_option("--burn-in", ba.burn_in, "simulation burn-in");
  bl->add_option("--seed", ba.seed, "simulation seed");
  bl->add_option("--probe", ba.probe, "finite-difference offset in simulation mode");
  bl->add_flag("--json", ba.as_json, "print JSON");

  std::vector<std::string> suites;
  std::size_t k_max = 10000;
  auto* ver = app.add_subcommand("verify", "lemma and closed-form suites; nonzero exit on failure");
  ver->add_option("--suite", suites, "learning_rate, mixing, closed_forms (default: all)")
      ->check(CLI::IsMember({"learning_rate", "mixing", "closed_forms"}));
  ver->add_option("--k-max", k_max, "learning-rate lemma range");

  BoundCliArgs bnd;
  auto* bo = app.add_subcommand("bounds", "evaluate a regret bound formula");
  bo->add_option("--kind", bnd.kind, "theorem1 or theorem2")->check(CLI::IsMember({"theorem1", "theorem2"}));
  bo->add_option("--S", bnd.S, "aleatoric state count")->required();
  bo->add_option("--A", bnd.A, "action count")->required();
  bo->add_option("--tau", bnd.tau, "reward averaging time of the comparison policy");
  bo->add_option("--delta", bnd.delta, "distortion");
  bo->add_option("--T", bnd.T, "duration")->required();
  bo->add_option("--horizon", bnd.horizon, "effective horizon (theorem1 only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*orc) return cmd_oracle(oa);
    if (*bl) return cmd_baselines(ba);
    if (*ver) return cmd_verify(suites, k_max);
    if (*bo) return cmd_bounds(bnd);
  } catch (const harness::IoError& e) {
    return fail("io_error", e.what());
  } catch (const ConfigError& e) {
    return fail("config_error", e.what());
  } catch (const ContractViolation& e) {
    return fail("contract_violation", e.what());
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
  return 2;
}
