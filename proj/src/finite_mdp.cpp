#include "oql/finite_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

namespace oql {

namespace {

std::vector<std::size_t> identity_map(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions,
                     std::vector<double> transition, std::vector<double> reward,
                     std::vector<std::size_t> aggregation)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      aggregation_(std::move(aggregation)) {
  validate();
}

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions,
                     std::vector<double> transition, std::vector<double> reward)
    : FiniteMdp(n_states, n_actions, std::move(transition), std::move(reward),
                identity_map(n_states)) {}

void FiniteMdp::validate() {
  if (n_states_ == 0 || n_actions_ == 0) {
    throw ConfigError("finite mdp: needs at least one state and one action");
  }
  const std::size_t n = n_states_ * n_actions_ * n_states_;
  if (transition_.size() != n || reward_.size() != n) {
    throw ConfigError("finite mdp: tensor sizes do not match n_states x n_actions x n_states");
  }
  if (aggregation_.size() != n_states_) {
    throw ConfigError("finite mdp: aggregation must map every state");
  }
  mean_reward_.assign(n_states_ * n_actions_, 0.0);
  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      double total = 0.0;
      double mean = 0.0;
      for (std::size_t x = 0; x < n_states_; ++x) {
        const double prob = p(s, a, x);
        if (!(prob >= 0.0 && prob <= 1.0)) {
          throw ConfigError("finite mdp: transition probability outside [0, 1]");
        }
        if (!std::isfinite(r(s, a, x))) {
          throw ConfigError("finite mdp: non-finite reward");
        }
        total += prob;
        mean += prob * r(s, a, x);
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError("finite mdp: transition row (" + std::to_string(s) +
                          ", " + std::to_string(a) + ") sums to " +
                          std::to_string(total));
      }
      mean_reward_[s * n_actions_ + a] = mean;
    }
  }
  // Aggregate labels must be 0..k-1 with every label used.
  const std::size_t k = *std::max_element(aggregation_.begin(), aggregation_.end()) + 1;
  std::vector<bool> used(k, false);
  for (std::size_t g : aggregation_) used[g] = true;
  if (!std::all_of(used.begin(), used.end(), [](bool b) { return b; })) {
    throw ConfigError("finite mdp: aggregation labels must be contiguous from 0");
  }
  n_aleatoric_ = k;
}

bool FiniteMdp::identity_aggregation() const {
  if (n_aleatoric_ != n_states_) return false;
  std::vector<bool> seen(n_states_, false);
  for (std::size_t g : aggregation_) {
    if (seen[g]) return false;
    seen[g] = true;
  }
  return true;
}

FiniteMdp FiniteMdp::with_aggregation(std::vector<std::size_t> aggregation) const {
  return FiniteMdp(n_states_, n_actions_, transition_, reward_,
                   std::move(aggregation));
}

nlohmann::json to_json(const FiniteMdp& mdp) {
  const std::size_t n = mdp.state_count();
  const std::size_t m = mdp.action_count();
  nlohmann::json t = nlohmann::json::array();
  nlohmann::json r = nlohmann::json::array();
  for (std::size_t s = 0; s < n; ++s) {
    nlohmann::json ts = nlohmann::json::array();
    nlohmann::json rs = nlohmann::json::array();
    for (std::size_t a = 0; a < m; ++a) {
      nlohmann::json ta = nlohmann::json::array();
      nlohmann::json ra = nlohmann::json::array();
      for (std::size_t x = 0; x < n; ++x) {
        ta.push_back(mdp.p(s, a, x));
        ra.push_back(mdp.r(s, a, x));
      }
      ts.push_back(std::move(ta));
      rs.push_back(std::move(ra));
    }
    t.push_back(std::move(ts));
    r.push_back(std::move(rs));
  }
  return {{"n_states", n},
          {"n_actions", m},
          {"transition", std::move(t)},
          {"reward", std::move(r)},
          {"aggregation", mdp.aggregation()}};
}

FiniteMdp finite_mdp_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n_states").get<std::size_t>();
    const auto m = j.at("n_actions").get<std::size_t>();
    const auto& tj = j.at("transition");
    const auto& rj = j.at("reward");
    std::vector<double> t;
    std::vector<double> r;
    t.reserve(n * m * n);
    r.reserve(n * m * n);
    if (tj.size() != n || rj.size() != n) {
      throw ConfigError("finite mdp json: outer arrays must have n_states entries");
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (tj[s].size() != m || rj[s].size() != m) {
        throw ConfigError("finite mdp json: each state needs n_actions rows");
      }
      for (std::size_t a = 0; a < m; ++a) {
        if (tj[s][a].size() != n || rj[s][a].size() != n) {
          throw ConfigError("finite mdp json: each row needs n_states entries");
        }
        for (std::size_t x = 0; x < n; ++x) {
          t.push_back(tj[s][a][x].get<double>());
          r.push_back(rj[s][a][x].get<double>());
        }
      }
    }
    if (j.contains("aggregation")) {
      return FiniteMdp(n, m, std::move(t), std::move(r),
                       j.at("aggregation").get<std::vector<std::size_t>>());
    }
    return FiniteMdp(n, m, std::move(t), std::move(r));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("finite mdp json: ") + e.what());
  }
}

FiniteMdp load_finite_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return finite_mdp_from_json(j);
}

void save_finite_mdp(const FiniteMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(mdp).dump(2) << '\n';
}

FiniteMdp build_alternation_env() {
  constexpr std::size_t n = 3;
  constexpr std::size_t m = 2;
  std::vector<double> t(n * m * n, 0.0);
  std::vector<double> r(n * m * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      const std::size_t next = a + 1;
      const std::size_t idx = (s * m + a) * n + next;
      t[idx] = 1.0;
      // s = 0 is the initial state; otherwise s - 1 is the previous action.
      if (s != 0 && s - 1 != a) r[idx] = 1.0;
    }
  }
  return FiniteMdp(n, m, std::move(t), std::move(r),
                   std::vector<std::size_t>(n, 0));
}

FiniteMdp build_adp_env(const AdpEnvParams& params) {
  const std::size_t half = params.half_states;
  const double eps1 = params.reset_probability;
  const double eps2 = params.leave_probability;
  if (half < 2) throw ConfigError("adp env: N must be >= 2");
  if (!(eps1 > 0.0 && eps1 < 1.0) || !(eps2 > 0.0 && eps2 < 1.0)) {
    throw ConfigError("adp env: eps1 and eps2 must lie in (0, 1)");
  }
  if (!(params.delta > 0.0) || !(params.kappa > 0.0)) {
    throw ConfigError("adp env: delta and kappa must be positive");
  }
  const std::size_t n = 2 * half;
  constexpr std::size_t m = 2;
  std::vector<double> t(n * m * n, 0.0);
  std::vector<double> r(n * m * n, 0.0);
  std::vector<std::size_t> phi(n);
  auto idx = [&](std::size_t s, std::size_t a, std::size_t x) {
    return (s * m + a) * n + x;
  };
  const double reset_mass = eps1 / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t label = s + 1;  // 1-based state label
    const bool odd = label % 2 == 1;
    phi[s] = odd ? 0 : 1;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t x = 0; x < n; ++x) t[idx(s, a, x)] = reset_mass;
      const double stay = 1.0 - eps1;
      if (label == 1) {
        t[idx(s, a, 0)] += stay * (1.0 - eps2);
        t[idx(s, a, 1)] += stay * eps2;
      } else if (label == 2) {
        t[idx(s, a, a == 0 ? 0 : 1)] += stay;
      } else {
        t[idx(s, a, odd ? 0 : 1)] += stay;
      }
      double reward = 0.0;
      if (label >= 3 && odd) {
        reward = -params.delta;
      } else if (label >= 4 && !odd) {
        reward = a == 0 ? params.delta : -params.kappa;
      } else if (label == 2 && a == 1) {
        reward = -params.kappa;
      }
      for (std::size_t x = 0; x < n; ++x) r[idx(s, a, x)] = reward;
    }
  }
  return FiniteMdp(n, m, std::move(t), std::move(r), std::move(phi));
}

FiniteStep finite_env_step(const FiniteMdp& mdp, std::size_t state,
                           ActionId action, Rng& rng) {
  if (state >= mdp.state_count() || action.value >= mdp.action_count()) {
    throw ContractViolation("finite_env_step: index out of range");
  }
  const double u = rng.uniform();
  const std::size_t n = mdp.state_count();
  std::size_t pick = n;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t x = 0; x < n; ++x) {
    const double prob = mdp.p(state, action.value, x);
    if (prob > 0.0) last_positive = x;
    cumulative += prob;
    if (pick == n && u < cumulative && prob > 0.0) pick = x;
  }
  if (pick == n) pick = last_positive;
  return FiniteStep{ObservationId{pick}, mdp.r(state, action.value, pick)};
}

FiniteEnvironment::FiniteEnvironment(const FiniteMdp& mdp,
                                     std::size_t start_state)
    : mdp_(&mdp), state_(start_state) {
  if (start_state >= mdp.state_count()) {
    throw ConfigError("finite environment: start state out of range");
  }
}

EnvStep FiniteEnvironment::step(ActionId action, Rng& rng) {
  const FiniteStep out = finite_env_step(*mdp_, state_, action, rng);
  state_ = out.next_state.value;
  return EnvStep{out.next_state, out.reward};
}

AgentConfig finite_agent_config(const FiniteMdp& mdp, std::size_t start_state) {
  const std::size_t n = mdp.state_count();
  return AgentConfig(
      n, mdp.action_count(), n, AleatoricStateId{start_state},
      [](AleatoricStateId, ActionId, ObservationId o) {
        return AleatoricStateId{o.value};
      },
      [&mdp](AleatoricStateId s, ActionId a, ObservationId o) {
        return mdp.r(s.value, a.value, o.value);
      });
}

}  // namespace oql
