#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "oql/agents.hpp"
#include "oql/baselines.hpp"
#include "oql/finite_mdp.hpp"
#include "oql/service_station.hpp"

namespace oql::harness {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Environment variable read for the default worker count.
inline constexpr const char* kWorkersEnv = "OQL_WORKERS";

struct EnvironmentSpec {
  std::string kind = "service_station";  // service_station | finite_mdp
  service::Params service;
  std::shared_ptr<const FiniteMdp> mdp;  // finite_mdp only
  std::size_t start_state = 0;
};

struct AgentSpec {
  // discounted | growing-episodic | growing-smooth | fixed-policy | baseline
  std::string kind = "growing-smooth";
  double tau = 1.0;                     // discounted
  std::optional<double> beta;           // discounted
  std::optional<double> q_init;         // discounted
  double horizon_scale = 1.5;           // growing-smooth
  double optimism_scale = 0.44;         // growing-smooth
  std::vector<std::size_t> actions;     // fixed-policy, one per aleatoric state
  std::optional<double> epsilon;        // fixed-policy on the service station
  std::string estimator = "static";     // baseline
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  AgentSpec agent;
  std::uint64_t T = 200000;
  std::size_t trials = 200;
  std::uint64_t base_seed = 1;
  std::uint64_t log_every = 100;
  std::optional<double> reference_lambda;
  std::string output_path;
  std::size_t workers = 0;  // 0: OQL_WORKERS, else hardware concurrency

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::string& path);

// out[t] = (1 / (t + 1)) sum_{u <= t} rewards[u].
std::vector<double> cma(const std::vector<double>& rewards);

// Partial sums of (lambda_ref - reward).
std::vector<double> regret_series(const std::vector<double>& rewards,
                                  double lambda_ref);

struct MetricsRow {
  std::uint64_t t = 0;
  double cma_mean = 0.0;
  double cma_std = 0.0;
  std::optional<double> regret_mean;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  std::vector<std::uint64_t> seeds;
  // trial_cumulative[i][r]: trial i's summed raw reward up to rows[r].t.
  std::vector<std::vector<double>> trial_cumulative;
  std::optional<double> reference_lambda;
  nlohmann::json config;

  const MetricsRow& final_row() const { return rows.back(); }
};

// Logged timesteps: multiples of log_every, plus T.
std::vector<std::uint64_t> checkpoints(std::uint64_t T, std::uint64_t log_every);

// Rows from per-trial cumulative sums (mean, sample std, mean regret).
std::vector<MetricsRow> aggregate(const std::vector<std::uint64_t>& ts,
                                  const std::vector<std::vector<double>>& trial_cumulative,
                                  std::optional<double> reference_lambda);

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec);
std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const EnvironmentSpec& env,
                                  std::uint64_t T);

std::size_t resolve_workers(std::size_t requested);

// Runs the trials, and writes the CSV files if output_path is set.
MetricsTable run_experiment(const ExperimentConfig& config);

// <path>: t,cma_mean,cma_std,regret_mean
// <path>.trials.csv: trial,seed,<cumulative reward per logged t>
// <path>.meta.json: config echo, seeds, reward note
void write_metrics(const MetricsTable& table, const std::string& path);
MetricsTable load_metrics(const std::string& path);

// Largest deviation between the stored columns and those recomputed from the
// per-trial sums.
double roundtrip_error(const MetricsTable& table);

std::string csv_text(const MetricsTable& table);

}  // namespace oql::harness
