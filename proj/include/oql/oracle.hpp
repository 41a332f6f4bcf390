#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oql/finite_mdp.hpp"
#include "oql/rng.hpp"

namespace oql::oracle {

struct ValueTable {
  std::size_t state_count = 0;
  std::size_t action_count = 0;
  std::vector<double> q;  // row-major state x action
  std::vector<double> v;
  double gamma = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // final sup-norm Bellman residual

  double at(std::size_t s, std::size_t a) const { return q[s * action_count + a]; }
};

class PolicyTable {
 public:
  PolicyTable(std::size_t state_count, std::size_t action_count,
              std::vector<double> probabilities);

  static PolicyTable deterministic(std::size_t action_count,
                                   const std::vector<std::size_t>& actions);
  static PolicyTable uniform(std::size_t state_count, std::size_t action_count);

  std::size_t state_count() const noexcept { return state_count_; }
  std::size_t action_count() const noexcept { return action_count_; }
  double operator()(std::size_t s, std::size_t a) const {
    return probabilities_[s * action_count_ + a];
  }
  const std::vector<double>& probabilities() const noexcept { return probabilities_; }

 private:
  std::size_t state_count_;
  std::size_t action_count_;
  std::vector<double> probabilities_;
};

// Discounted value iteration on Q until the sup-norm residual is at most
// tol (1 - gamma) / 2, which puts the iterate within tol of Q*.
ValueTable value_iteration(const FiniteMdp& mdp, double gamma, double tol = 1e-10);

// Solves (I - gamma P_pi) v = r_pi.
std::vector<double> policy_evaluation_discounted(const FiniteMdp& mdp,
                                                 const PolicyTable& policy,
                                                 double gamma);

struct AverageReward {
  std::vector<double> per_state;  // Cesaro-limit average reward from each state
  std::size_t recurrent_classes = 0;
  bool unichain() const noexcept { return recurrent_classes == 1; }
};

// Stationary distribution of each closed recurrent class, then absorption
// probabilities for transient states.
AverageReward average_reward(const FiniteMdp& mdp, const PolicyTable& policy);

struct AveragingReport {
  std::vector<double> lambda;  // per state
  double tau_hat = 0.0;
  std::size_t t_max = 0;
  std::size_t argmax_state = 0;
  std::size_t argmax_horizon = 0;
  std::string tail_bound_note;
};

// tau_hat = max over states and T <= t_max of T |lambda(s, T) - lambda(s)|,
// a lower estimate of the reward averaging time. If start_states is empty all
// states are used.
AveragingReport averaging_time(const FiniteMdp& mdp, const PolicyTable& policy,
                               std::size_t t_max,
                               const std::vector<std::size_t>& start_states = {});

// Largest spread of Q* over states sharing an aleatoric state, gamma = 1 - 1/tau.
double distortion(const FiniteMdp& mdp, double tau);

struct SupDistortion {
  double value = 0.0;
  std::vector<double> tau_grid;
  std::vector<double> values;
};

// Maximum of distortion over the geometric grid tau, tau * factor, ... <= tau_max.
SupDistortion sup_distortion(const FiniteMdp& mdp, double tau,
                             double tau_max = 1e3, double factor = 1.5);

struct AleatoricPolicy {
  std::vector<std::size_t> actions;  // per aleatoric state
  PolicyTable policy;                // lifted to environment states
  double lambda = 0.0;               // average reward from start_state
};

// Lifts an action-per-aleatoric-state rule to the environment states.
PolicyTable lift_aleatoric_policy(const FiniteMdp& mdp,
                                  const std::vector<std::size_t>& actions);

// Best deterministic stationary policy measurable w.r.t. the aggregation.
// Throws ConfigError when |A|^|S| exceeds max_policies.
AleatoricPolicy best_aleatoric_policy(const FiniteMdp& mdp,
                                      std::size_t start_state = 0,
                                      std::size_t max_policies = 1000000);

// Best deterministic stationary policy over environment states (aggregation
// ignored); the optimal average reward for the finite instances used here.
AleatoricPolicy optimal_stationary_policy(const FiniteMdp& mdp,
                                          std::size_t start_state = 0,
                                          std::size_t max_policies = 1000000);

struct MixingCheck {
  double gamma = 0.0;
  std::size_t state = 0;
  double lhs = 0.0;    // |V(s) - lambda(s) / (1 - gamma)|
  double bound = 0.0;  // tau_hat (1 + slack_fraction)
  bool holds() const noexcept { return lhs <= bound; }
};

struct MixingReport {
  double tau_hat = 0.0;
  std::size_t t_max = 0;
  double slack_fraction = 0.0;
  std::vector<MixingCheck> checks;
  double worst_margin = 0.0;  // min(bound - lhs)
  bool passed = true;
};

MixingReport check_mixing_lemma(const FiniteMdp& mdp, const PolicyTable& policy,
                                const std::vector<double>& gamma_grid,
                                std::size_t t_max, double slack_fraction = 0.05);

// alpha_k^i = alpha_i prod_{l=i+1}^k (1 - alpha_l), i = 1..k, returned at
// index i - 1.
std::vector<double> learning_rate_weights(std::size_t k, double tau);

struct LearningRateReport {
  struct PerTau {
    double tau = 0.0;
    double min_ratio_a_lower = 0.0;  // min_k sqrt(k) sum alpha/sqrt(i) (>= 1)
    double max_ratio_a_upper = 0.0;  // max_k sqrt(k) sum alpha/sqrt(i) (<= 2)
    double max_ratio_b_max = 0.0;    // max_k k max_i alpha / (4 tau) (<= 1)
    double max_ratio_b_sq = 0.0;     // max_k k sum alpha^2 / (4 tau) (<= 1)
    double max_weight_sum_error = 0.0;
    double max_c_error = 0.0;        // max_i |sum_{k=i}^K alpha_k^i - (1 + 1/(2 tau))|
    std::size_t violations = 0;
  };
  std::size_t k_max = 0;
  std::size_t tail_horizon = 0;  // K
  std::vector<PerTau> per_tau;
  bool passed = true;
};

// Checks the three step-size properties for every tau in the grid and every
// k <= k_max. Part (c) uses the partial sum up to K = tail_factor * k_max and
// must be within c_tolerance of 1 + 1/(2 tau).
LearningRateReport check_learning_rate_lemma(const std::vector<double>& tau_grid,
                                             std::size_t k_max,
                                             double slack = 1e-9,
                                             double c_tolerance = 1e-3,
                                             std::size_t tail_factor = 100);

struct FittedViResult {
  std::vector<double> values;           // per aleatoric state
  std::vector<double> q;                // induced Q, state x action
  std::vector<std::size_t> greedy;      // per environment state (first argmax)
  std::size_t iterations = 0;
  double last_change = 0.0;             // sup-norm change of the final iteration
};

// Each iteration samples m_samples states uniformly, backs them up through
// V o phi and sets each sampled aggregate to the mean of its backups (the
// least-squares fit). Aggregates without samples keep their value; V starts
// at 0.
FittedViResult fitted_value_iteration(const FiniteMdp& mdp, double gamma,
                                      std::size_t m_samples,
                                      std::size_t iterations, Rng& rng);

enum class BoundKind { theorem1, theorem2 };

struct BoundArgs {
  double states = 1.0;     // |S|
  double actions = 1.0;    // |A|
  double tau_pi = 1.0;     // reward averaging time of the comparison policy
  double distortion = 0.0; // Delta_tau (theorem1) or sup distortion (theorem2)
  double T = 1.0;
  double horizon = 1.0;    // agent horizon tau, theorem1 only
};

double regret_bound_value(BoundKind kind, const BoundArgs& args);

BoundKind parse_bound_kind(const std::string& name);

}  // namespace oql::oracle
