#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "oql/oracle.hpp"

namespace oql::oracle {

namespace {

void check_policy(const FiniteMdp& mdp, const PolicyTable& policy) {
  if (policy.state_count() != mdp.state_count() ||
      policy.action_count() != mdp.action_count()) {
    throw ConfigError("policy shape does not match the mdp");
  }
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("discount factor must lie in [0, 1)");
  }
}

Eigen::MatrixXd policy_transition(const FiniteMdp& mdp, const PolicyTable& policy) {
  const auto n = static_cast<Eigen::Index>(mdp.state_count());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    for (std::size_t a = 0; a < mdp.action_count(); ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      for (std::size_t x = 0; x < mdp.state_count(); ++x) {
        p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(x)) +=
            w * mdp.p(s, a, x);
      }
    }
  }
  return p;
}

Eigen::VectorXd policy_reward(const FiniteMdp& mdp, const PolicyTable& policy) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mdp.state_count()));
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    for (std::size_t a = 0; a < mdp.action_count(); ++a) {
      r(static_cast<Eigen::Index>(s)) += policy(s, a) * mdp.mean_reward(s, a);
    }
  }
  return r;
}

// reach[i][j] = j reachable from i (including i itself).
std::vector<std::vector<char>> reachability(const Eigen::MatrixXd& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    auto& seen = reach[i];
    seen[i] = 1;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return reach;
}

}  // namespace

PolicyTable::PolicyTable(std::size_t state_count, std::size_t action_count,
                         std::vector<double> probabilities)
    : state_count_(state_count),
      action_count_(action_count),
      probabilities_(std::move(probabilities)) {
  if (probabilities_.size() != state_count * action_count) {
    throw ConfigError("policy table: wrong number of probabilities");
  }
  for (std::size_t s = 0; s < state_count; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < action_count; ++a) {
      const double w = (*this)(s, a);
      if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("policy table: probability outside [0, 1]");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("policy table: row does not sum to 1");
  }
}

PolicyTable PolicyTable::deterministic(std::size_t action_count,
                                       const std::vector<std::size_t>& actions) {
  std::vector<double> probs(actions.size() * action_count, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= action_count) throw ConfigError("policy table: action out of range");
    probs[s * action_count + actions[s]] = 1.0;
  }
  return PolicyTable(actions.size(), action_count, std::move(probs));
}

PolicyTable PolicyTable::uniform(std::size_t state_count, std::size_t action_count) {
  return PolicyTable(state_count, action_count,
                     std::vector<double>(state_count * action_count,
                                         1.0 / static_cast<double>(action_count)));
}

ValueTable value_iteration(const FiniteMdp& mdp, double gamma, double tol) {
  check_gamma(gamma);
  if (!(tol > 0.0)) throw ConfigError("value_iteration: tol must be positive");
  const std::size_t n = mdp.state_count();
  const std::size_t m = mdp.action_count();
  ValueTable out;
  out.state_count = n;
  out.action_count = m;
  out.gamma = gamma;
  out.q.assign(n * m, 0.0);
  out.v.assign(n, 0.0);
  std::vector<double> next(n * m);
  const double target = tol * (1.0 - gamma) / 2.0;
  for (;;) {
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t a = 0; a < m; ++a) {
        double backup = 0.0;
        for (std::size_t x = 0; x < n; ++x) backup += mdp.p(s, a, x) * out.v[x];
        const double q = mdp.mean_reward(s, a) + gamma * backup;
        residual = std::max(residual, std::abs(q - out.q[s * m + a]));
        next[s * m + a] = q;
      }
    }
    out.q.swap(next);
    for (std::size_t s = 0; s < n; ++s) {
      out.v[s] = *std::max_element(out.q.begin() + static_cast<std::ptrdiff_t>(s * m),
                                   out.q.begin() + static_cast<std::ptrdiff_t>((s + 1) * m));
    }
    ++out.iterations;
    out.residual = residual;
    if (residual <= target) break;
  }
  return out;
}

std::vector<double> policy_evaluation_discounted(const FiniteMdp& mdp,
                                                 const PolicyTable& policy,
                                                 double gamma) {
  check_policy(mdp, policy);
  check_gamma(gamma);
  const auto n = static_cast<Eigen::Index>(mdp.state_count());
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(n, n) - gamma * policy_transition(mdp, policy);
  const Eigen::VectorXd r = policy_reward(mdp, policy);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd v = lu.solve(r);
  v += lu.solve(r - a * v);  // one refinement step
  return {v.data(), v.data() + v.size()};
}

AverageReward average_reward(const FiniteMdp& mdp, const PolicyTable& policy) {
  check_policy(mdp, policy);
  const std::size_t n = mdp.state_count();
  const Eigen::MatrixXd p = policy_transition(mdp, policy);
  const Eigen::VectorXd r = policy_reward(mdp, policy);
  const auto reach = reachability(p);

  // A state is recurrent iff it can return from everywhere it can reach.
  std::vector<int> cls(n, -1);
  int classes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cls[i] >= 0) continue;
    bool recurrent = true;
    for (std::size_t j = 0; j < n && recurrent; ++j) {
      if (reach[i][j] && !reach[j][i]) recurrent = false;
    }
    if (!recurrent) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j]) cls[j] = classes;
    }
    ++classes;
  }

  AverageReward out;
  out.recurrent_classes = static_cast<std::size_t>(classes);
  out.per_state.assign(n, 0.0);

  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < n; ++s) {
      if (cls[s] == c) members.push_back(s);
    }
    const auto k = static_cast<Eigen::Index>(members.size());
    // Solve pi (P_C - I) = 0 with sum(pi) = 1 replacing the last equation.
    Eigen::MatrixXd a(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        a(i, j) = p(static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]),
                    static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)])) -
                  (i == j ? 1.0 : 0.0);
      }
    }
    a.row(k - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    const Eigen::VectorXd pi = a.fullPivLu().solve(b);
    double lambda = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      lambda += pi(i) * r(static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]));
    }
    for (std::size_t s : members) out.per_state[s] = lambda;
  }

  std::vector<std::size_t> transient;
  for (std::size_t s = 0; s < n; ++s) {
    if (cls[s] < 0) transient.push_back(s);
  }
  if (!transient.empty()) {
    const auto k = static_cast<Eigen::Index>(transient.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto si = static_cast<Eigen::Index>(transient[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < k; ++j) {
        a(i, j) -= p(si, static_cast<Eigen::Index>(transient[static_cast<std::size_t>(j)]));
      }
      for (std::size_t x = 0; x < n; ++x) {
        if (cls[x] >= 0) b(i) += p(si, static_cast<Eigen::Index>(x)) * out.per_state[x];
      }
    }
    const Eigen::VectorXd lt = a.fullPivLu().solve(b);
    for (Eigen::Index i = 0; i < k; ++i) {
      out.per_state[transient[static_cast<std::size_t>(i)]] = lt(i);
    }
  }
  return out;
}

AveragingReport averaging_time(const FiniteMdp& mdp, const PolicyTable& policy,
                               std::size_t t_max,
                               const std::vector<std::size_t>& start_states) {
  check_policy(mdp, policy);
  if (t_max < 1) throw ConfigError("averaging_time: t_max must be >= 1");
  const std::size_t n = mdp.state_count();
  std::vector<std::size_t> starts = start_states;
  if (starts.empty()) {
    starts.resize(n);
    std::iota(starts.begin(), starts.end(), std::size_t{0});
  }
  for (std::size_t s : starts) {
    if (s >= n) throw ConfigError("averaging_time: start state out of range");
  }

  AveragingReport out;
  out.lambda = average_reward(mdp, policy).per_state;
  out.t_max = t_max;
  const Eigen::MatrixXd p = policy_transition(mdp, policy);
  const Eigen::VectorXd r = policy_reward(mdp, policy);
  // cumulative(T) = sum_{t < T} P^t r, so cumulative(T) / T = lambda(s, T).
  Eigen::VectorXd cumulative = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t T = 1; T <= t_max; ++T) {
    cumulative = r + p * cumulative;
    for (std::size_t s : starts) {
      const double dev = std::abs(cumulative(static_cast<Eigen::Index>(s)) -
                                  static_cast<double>(T) * out.lambda[s]);
      if (dev > out.tau_hat) {
        out.tau_hat = dev;
        out.argmax_state = s;
        out.argmax_horizon = T;
      }
    }
  }
  out.tail_bound_note =
      "supremum over T truncated at t_max=" + std::to_string(t_max) +
      "; tau_hat is a lower estimate of the reward averaging time";
  return out;
}

double distortion(const FiniteMdp& mdp, double tau) {
  if (!(tau >= 1.0)) throw ConfigError("distortion: tau must be >= 1");
  const ValueTable vt = value_iteration(mdp, 1.0 - 1.0 / tau, 1e-10);
  const std::size_t g = mdp.aleatoric_count();
  const std::size_t m = mdp.action_count();
  std::vector<double> lo(g * m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(g * m, -std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    const std::size_t k = mdp.aggregate(s);
    for (std::size_t a = 0; a < m; ++a) {
      lo[k * m + a] = std::min(lo[k * m + a], vt.at(s, a));
      hi[k * m + a] = std::max(hi[k * m + a], vt.at(s, a));
    }
  }
  double spread = 0.0;
  for (std::size_t i = 0; i < g * m; ++i) spread = std::max(spread, hi[i] - lo[i]);
  return spread;
}

SupDistortion sup_distortion(const FiniteMdp& mdp, double tau, double tau_max,
                             double factor) {
  if (!(tau >= 1.0)) throw ConfigError("sup_distortion: tau must be >= 1");
  if (!(factor > 1.0)) throw ConfigError("sup_distortion: grid factor must exceed 1");
  SupDistortion out;
  for (double t = tau; t <= tau_max * (1.0 + 1e-12); t *= factor) {
    out.tau_grid.push_back(t);
  }
  if (out.tau_grid.empty()) out.tau_grid.push_back(tau);
  for (double t : out.tau_grid) {
    out.values.push_back(distortion(mdp, t));
    out.value = std::max(out.value, out.values.back());
  }
  return out;
}

PolicyTable lift_aleatoric_policy(const FiniteMdp& mdp,
                                  const std::vector<std::size_t>& actions) {
  if (actions.size() != mdp.aleatoric_count()) {
    throw ConfigError("aleatoric policy needs one action per aleatoric state");
  }
  std::vector<std::size_t> per_state(mdp.state_count());
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    per_state[s] = actions[mdp.aggregate(s)];
  }
  return PolicyTable::deterministic(mdp.action_count(), per_state);
}

namespace {

AleatoricPolicy enumerate_policies(const FiniteMdp& mdp, std::size_t classes,
                                   const std::vector<std::size_t>& label,
                                   std::size_t start_state,
                                   std::size_t max_policies) {
  if (start_state >= mdp.state_count()) throw ConfigError("start state out of range");
  const std::size_t m = mdp.action_count();
  double count = 1.0;
  for (std::size_t i = 0; i < classes; ++i) count *= static_cast<double>(m);
  if (count > static_cast<double>(max_policies)) {
    throw ConfigError("policy enumeration exceeds the guard of " +
                      std::to_string(max_policies) + " policies");
  }
  std::vector<std::size_t> actions(classes, 0);
  std::vector<std::size_t> per_state(mdp.state_count());
  bool have_best = false;
  AleatoricPolicy best{{}, PolicyTable::uniform(mdp.state_count(), m), 0.0};
  for (;;) {
    for (std::size_t s = 0; s < mdp.state_count(); ++s) per_state[s] = actions[label[s]];
    PolicyTable policy = PolicyTable::deterministic(m, per_state);
    const double lambda = average_reward(mdp, policy).per_state[start_state];
    if (!have_best || lambda > best.lambda + 1e-12) {
      best = AleatoricPolicy{actions, std::move(policy), lambda};
      have_best = true;
    }
    std::size_t i = 0;
    while (i < classes && ++actions[i] == m) actions[i++] = 0;
    if (i == classes) break;
  }
  return best;
}

}  // namespace

AleatoricPolicy best_aleatoric_policy(const FiniteMdp& mdp,
                                      std::size_t start_state,
                                      std::size_t max_policies) {
  return enumerate_policies(mdp, mdp.aleatoric_count(), mdp.aggregation(),
                            start_state, max_policies);
}

AleatoricPolicy optimal_stationary_policy(const FiniteMdp& mdp,
                                          std::size_t start_state,
                                          std::size_t max_policies) {
  std::vector<std::size_t> identity(mdp.state_count());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return enumerate_policies(mdp, mdp.state_count(), identity, start_state,
                            max_policies);
}

MixingReport check_mixing_lemma(const FiniteMdp& mdp, const PolicyTable& policy,
                                const std::vector<double>& gamma_grid,
                                std::size_t t_max, double slack_fraction) {
  const AveragingReport avg = averaging_time(mdp, policy, t_max);
  MixingReport out;
  out.tau_hat = avg.tau_hat;
  out.t_max = t_max;
  out.slack_fraction = slack_fraction;
  out.worst_margin = std::numeric_limits<double>::infinity();
  const double bound = avg.tau_hat * (1.0 + slack_fraction);
  for (double gamma : gamma_grid) {
    const std::vector<double> v = policy_evaluation_discounted(mdp, policy, gamma);
    for (std::size_t s = 0; s < mdp.state_count(); ++s) {
      MixingCheck c;
      c.gamma = gamma;
      c.state = s;
      const double scaled = avg.lambda[s] / (1.0 - gamma);
      c.lhs = std::abs(v[s] - scaled);
      // Round-off allowance so a zero averaging time is checkable.
      c.bound = bound + 1e-9 * (1.0 + std::abs(scaled));
      out.worst_margin = std::min(out.worst_margin, c.bound - c.lhs);
      out.passed = out.passed && c.holds();
      out.checks.push_back(c);
    }
  }
  return out;
}

}  // namespace oql::oracle
