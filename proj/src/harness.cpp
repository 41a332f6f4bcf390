#include "oql/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace oql::harness {

using nlohmann::json;

namespace {

const char* const kRewardNote =
    "metrics use raw environment reward; service-station agents learn from "
    "(p + fast_cost) / (payment + fast_cost)";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

std::optional<double> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

service::Params service_params_from_json(const json& j) {
  service::Params p;
  p.arrival_floor = get_or(j, "arrival_floor", p.arrival_floor);
  p.arrival_amplitude = get_or(j, "arrival_amplitude", p.arrival_amplitude);
  p.arrival_decay = get_or(j, "arrival_decay", p.arrival_decay);
  p.window = get_or(j, "window", p.window);
  p.payment = get_or(j, "payment", p.payment);
  p.fast_cost = get_or(j, "fast_cost", p.fast_cost);
  return p;
}

json to_json(const service::Params& p) {
  return json{{"arrival_floor", p.arrival_floor},
              {"arrival_amplitude", p.arrival_amplitude},
              {"arrival_decay", p.arrival_decay},
              {"window", p.window},
              {"payment", p.payment},
              {"fast_cost", p.fast_cost}};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IoError(where + ": bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw IoError(where + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (T < 1) throw ConfigError("T must be >= 1");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (reference_lambda && !std::isfinite(*reference_lambda)) {
    throw ConfigError("reference_lambda must be finite");
  }
  if (environment.kind == "finite_mdp") {
    if (!environment.mdp) throw ConfigError("finite_mdp environment needs 'mdp' or 'mdp_path'");
    if (environment.start_state >= environment.mdp->state_count()) {
      throw ConfigError("start_state out of range");
    }
  } else if (environment.kind != "service_station") {
    throw ConfigError("unknown environment '" + environment.kind + "'");
  }
  static const char* kinds[] = {"discounted", "growing-episodic", "growing-smooth",
                                "fixed-policy", "baseline"};
  if (std::find(std::begin(kinds), std::end(kinds), agent.kind) == std::end(kinds)) {
    throw ConfigError("unknown agent '" + agent.kind + "'");
  }
  if (agent.kind == "baseline" && environment.kind != "service_station") {
    throw ConfigError("baseline agents need the service_station environment");
  }
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    const json env = j.value("environment", json::object());
    c.environment.kind = get_or<std::string>(env, "kind", "service_station");
    if (env.contains("params")) c.environment.service = service_params_from_json(env["params"]);
    c.environment.start_state = get_or<std::size_t>(env, "start_state", 0);
    if (env.contains("mdp")) {
      c.environment.mdp = std::make_shared<const FiniteMdp>(finite_mdp_from_json(env["mdp"]));
    } else if (env.contains("mdp_path")) {
      c.environment.mdp = std::make_shared<const FiniteMdp>(
          load_finite_mdp(env["mdp_path"].get<std::string>()));
    }

    const json agent = j.value("agent", json::object());
    c.agent.kind = get_or<std::string>(agent, "kind", c.agent.kind);
    const json ap = agent.value("params", json::object());
    c.agent.tau = get_or(ap, "tau", c.agent.tau);
    c.agent.beta = get_opt(ap, "beta");
    c.agent.q_init = get_opt(ap, "q_init");
    c.agent.horizon_scale = get_or(ap, "horizon_scale", c.agent.horizon_scale);
    c.agent.optimism_scale = get_or(ap, "optimism_scale", c.agent.optimism_scale);
    c.agent.actions = get_or(ap, "actions", c.agent.actions);
    c.agent.epsilon = get_opt(ap, "epsilon");
    c.agent.estimator = get_or<std::string>(ap, "estimator", c.agent.estimator);

    c.T = get_or(j, "T", c.T);
    c.trials = get_or(j, "trials", c.trials);
    c.base_seed = get_or(j, "base_seed", c.base_seed);
    c.log_every = get_or(j, "log_every", c.log_every);
    c.reference_lambda = get_opt(j, "reference_lambda");
    c.output_path = get_or<std::string>(j, "output_path", "");
    c.workers = get_or(j, "workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json env{{"kind", c.environment.kind}};
  if (c.environment.kind == "service_station") {
    env["params"] = to_json(c.environment.service);
  } else {
    env["start_state"] = c.environment.start_state;
    if (c.environment.mdp) env["mdp"] = oql::to_json(*c.environment.mdp);
  }
  json ap = json::object();
  const AgentSpec& a = c.agent;
  if (a.kind == "discounted") {
    ap["tau"] = a.tau;
    if (a.beta) ap["beta"] = *a.beta;
    if (a.q_init) ap["q_init"] = *a.q_init;
  } else if (a.kind == "growing-smooth") {
    ap["horizon_scale"] = a.horizon_scale;
    ap["optimism_scale"] = a.optimism_scale;
  } else if (a.kind == "fixed-policy") {
    if (!a.actions.empty()) ap["actions"] = a.actions;
    if (a.epsilon) ap["epsilon"] = *a.epsilon;
  } else if (a.kind == "baseline") {
    ap["estimator"] = a.estimator;
  }
  json j{{"environment", env},
         {"agent", {{"kind", a.kind}, {"params", ap}}},
         {"T", c.T},
         {"trials", c.trials},
         {"base_seed", c.base_seed},
         {"log_every", c.log_every},
         {"reference_lambda", c.reference_lambda ? json(*c.reference_lambda) : json(nullptr)},
         {"output_path", c.output_path},
         {"workers", c.workers}};
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return experiment_config_from_json(j);
}

std::vector<double> cma(const std::vector<double>& rewards) {
  if (rewards.empty()) throw ContractViolation("cma: empty input");
  std::vector<double> out(rewards.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    sum += rewards[t];
    out[t] = sum / static_cast<double>(t + 1);
  }
  return out;
}

std::vector<double> regret_series(const std::vector<double>& rewards, double lambda_ref) {
  std::vector<double> out(rewards.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    sum += lambda_ref - rewards[t];
    out[t] = sum;
  }
  return out;
}

std::vector<std::uint64_t> checkpoints(std::uint64_t T, std::uint64_t log_every) {
  if (log_every < 1) throw ContractViolation("checkpoints: log_every must be >= 1");
  std::vector<std::uint64_t> ts;
  for (std::uint64_t t = log_every; t <= T; t += log_every) ts.push_back(t);
  if (ts.empty() || ts.back() != T) ts.push_back(T);
  return ts;
}

std::vector<MetricsRow> aggregate(const std::vector<std::uint64_t>& ts,
                                  const std::vector<std::vector<double>>& cumulative,
                                  std::optional<double> reference_lambda) {
  const std::size_t n = cumulative.size();
  if (n == 0) throw ContractViolation("aggregate: no trials");
  std::vector<MetricsRow> rows(ts.size());
  for (std::size_t r = 0; r < ts.size(); ++r) {
    const double t = static_cast<double>(ts[r]);
    double sum = 0.0;
    double cum_sum = 0.0;
    for (const auto& trial : cumulative) {
      sum += trial.at(r) / t;
      cum_sum += trial[r];
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const auto& trial : cumulative) {
      const double d = trial[r] / t - mean;
      sq += d * d;
    }
    rows[r].t = ts[r];
    rows[r].cma_mean = mean;
    rows[r].cma_std = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    if (reference_lambda) {
      rows[r].regret_mean = t * *reference_lambda - cum_sum / static_cast<double>(n);
    }
  }
  return rows;
}

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec) {
  if (spec.kind == "service_station") {
    return std::make_unique<service::ServiceStation>(spec.service);
  }
  if (spec.kind == "finite_mdp") {
    if (!spec.mdp) throw ConfigError("finite_mdp environment without an mdp");
    return std::make_unique<FiniteEnvironment>(*spec.mdp, spec.start_state);
  }
  throw ConfigError("unknown environment '" + spec.kind + "'");
}

namespace {

AgentConfig agent_config_for(const EnvironmentSpec& env) {
  if (env.kind == "service_station") return service::agent_config(env.service);
  if (env.kind == "finite_mdp" && env.mdp) return finite_agent_config(*env.mdp, env.start_state);
  throw ConfigError("unknown environment '" + env.kind + "'");
}

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const EnvironmentSpec& env,
                                  std::uint64_t T) {
  AgentConfig cfg = agent_config_for(env);
  if (spec.kind == "discounted") {
    DiscountedAgentParams p;
    p.tau = spec.tau;
    p.duration = T;
    p.beta = spec.beta;
    p.q_init = spec.q_init;
    return std::make_unique<DiscountedQAgent>(std::move(cfg), p);
  }
  if (spec.kind == "growing-episodic") {
    return std::make_unique<GrowingHorizonQAgent>(std::move(cfg), episodic_schedule());
  }
  if (spec.kind == "growing-smooth") {
    return std::make_unique<GrowingHorizonQAgent>(
        std::move(cfg), smooth_schedule(spec.horizon_scale, spec.optimism_scale));
  }
  if (spec.kind == "fixed-policy") {
    if (spec.epsilon) {
      if (env.kind != "service_station") throw ConfigError("epsilon policies need the service station");
      return std::make_unique<FixedPolicyAgent>(baselines::epsilon_policy_agent(*spec.epsilon, env.service));
    }
    if (spec.actions.size() != cfg.state_count()) {
      throw ConfigError("fixed-policy: 'actions' needs one entry per aleatoric state");
    }
    for (std::size_t a : spec.actions) {
      if (a >= cfg.action_count()) throw ConfigError("fixed-policy: action out of range");
    }
    std::vector<std::size_t> actions = spec.actions;
    return std::make_unique<FixedPolicyAgent>(
        std::move(cfg), [actions](AleatoricStateId s, Rng&) { return ActionId{actions[s.value]}; });
  }
  if (spec.kind == "baseline") {
    if (env.kind != "service_station") throw ConfigError("baseline agents need the service station");
    baselines::BaselineOptions options;
    options.params = env.service;
    const baselines::BaselineChoice choice =
        baselines::baseline_choose(baselines::parse_baseline_kind(spec.estimator), options);
    return std::make_unique<FixedPolicyAgent>(
        baselines::epsilon_policy_agent(choice.epsilon, env.service));
  }
  throw ConfigError("unknown agent '" + spec.kind + "'");
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* v = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const unsigned long n = std::strtoul(v, &end, 10);
    if (*v != '\0' && *end == '\0' && n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

MetricsTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<std::uint64_t> ts = checkpoints(config.T, config.log_every);

  MetricsTable table;
  table.reference_lambda = config.reference_lambda;
  table.config = to_json(config);
  table.seeds.resize(config.trials);
  for (std::size_t i = 0; i < config.trials; ++i) table.seeds[i] = trial_seed(config.base_seed, i);
  table.trial_cumulative.assign(config.trials, std::vector<double>(ts.size(), 0.0));

  // Configuration errors surface here rather than inside a worker.
  (void)make_agent(config.agent, config.environment, config.T);

  auto run_trial = [&](std::size_t i) {
    std::unique_ptr<Environment> env = make_environment(config.environment);
    std::unique_ptr<Agent> agent = make_agent(config.agent, config.environment, config.T);
    Rng rng(table.seeds[i]);
    std::vector<double>& out = table.trial_cumulative[i];
    std::size_t next = 0;
    double sum = 0.0;
    run_stream(*agent, *env, config.T, rng, [&](std::size_t t, double r) {
      sum += r;
      if (next < ts.size() && t + 1 == ts[next]) out[next++] = sum;
    });
  };

  const std::size_t workers = std::min(resolve_workers(config.workers), config.trials);
  if (workers <= 1) {
    for (std::size_t i = 0; i < config.trials; ++i) run_trial(i);
  } else {
    std::atomic<std::size_t> next_trial{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next_trial.fetch_add(1)) < config.trials;) {
          try {
            run_trial(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  table.rows = aggregate(ts, table.trial_cumulative, config.reference_lambda);
  if (!config.output_path.empty()) write_metrics(table, config.output_path);
  return table;
}

std::string csv_text(const MetricsTable& table) {
  std::string s = "t,cma_mean,cma_std,regret_mean\n";
  for (const MetricsRow& r : table.rows) {
    s += std::to_string(r.t) + ',' + fmt(r.cma_mean) + ',' + fmt(r.cma_std) + ',';
    if (r.regret_mean) s += fmt(*r.regret_mean);
    s += '\n';
  }
  return s;
}

void write_metrics(const MetricsTable& table, const std::string& path) {
  auto write = [](const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + p + "'");
  };
  write(path, csv_text(table));

  std::string trials = "trial,seed";
  for (const MetricsRow& r : table.rows) trials += ",t" + std::to_string(r.t);
  trials += '\n';
  for (std::size_t i = 0; i < table.trial_cumulative.size(); ++i) {
    trials += std::to_string(i) + ',' + std::to_string(table.seeds.at(i));
    for (double v : table.trial_cumulative[i]) trials += ',' + fmt(v);
    trials += '\n';
  }
  write(path + ".trials.csv", trials);

  json meta{{"config", table.config},
            {"seeds", table.seeds},
            {"seed_rule", "trial_seed = splitmix64(base_seed ^ splitmix64(trial)); generator mt19937_64"},
            {"reward_note", kRewardNote},
            {"reference_lambda",
             table.reference_lambda ? json(*table.reference_lambda) : json(nullptr)},
            {"columns", {"t", "cma_mean", "cma_std", "regret_mean"}}};
  write(path + ".meta.json", meta.dump(2) + "\n");
}

MetricsTable load_metrics(const std::string& path) {
  MetricsTable table;
  {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line != "t,cma_mean,cma_std,regret_mean") throw IoError(path + ": unexpected header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      if (cells.size() != 4) throw IoError(path + ": expected 4 columns");
      MetricsRow r;
      r.t = parse_u64(cells[0], path);
      r.cma_mean = parse_double(cells[1], path);
      r.cma_std = parse_double(cells[2], path);
      if (!cells[3].empty()) r.regret_mean = parse_double(cells[3], path);
      table.rows.push_back(r);
    }
  }
  {
    const std::string p = path + ".trials.csv";
    std::ifstream in(p);
    if (!in) throw IoError("cannot open '" + p + "'");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      if (cells.size() != table.rows.size() + 2) throw IoError(p + ": column count mismatch");
      table.seeds.push_back(parse_u64(cells[1], p));
      std::vector<double> cum;
      for (std::size_t k = 2; k < cells.size(); ++k) cum.push_back(parse_double(cells[k], p));
      table.trial_cumulative.push_back(std::move(cum));
    }
  }
  {
    const std::string p = path + ".meta.json";
    std::ifstream in(p);
    if (!in) throw IoError("cannot open '" + p + "'");
    json meta;
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw IoError(p + ": " + e.what());
    }
    table.config = meta.value("config", json::object());
    table.reference_lambda = get_opt(meta, "reference_lambda");
  }
  return table;
}

double roundtrip_error(const MetricsTable& table) {
  std::vector<std::uint64_t> ts;
  for (const MetricsRow& r : table.rows) ts.push_back(r.t);
  const std::vector<MetricsRow> again =
      aggregate(ts, table.trial_cumulative, table.reference_lambda);
  double err = 0.0;
  for (std::size_t r = 0; r < ts.size(); ++r) {
    err = std::max(err, std::abs(again[r].cma_mean - table.rows[r].cma_mean));
    err = std::max(err, std::abs(again[r].cma_std - table.rows[r].cma_std));
    if (again[r].regret_mean.has_value() != table.rows[r].regret_mean.has_value()) return INFINITY;
    if (again[r].regret_mean) {
      err = std::max(err, std::abs(*again[r].regret_mean - *table.rows[r].regret_mean));
    }
  }
  return err;
}

}  // namespace oql::harness
