#include <algorithm>
#include <cmath>

#include "oql/oracle.hpp"

namespace oql::oracle {

FittedViResult fitted_value_iteration(const FiniteMdp& mdp, double gamma,
                                      std::size_t m_samples,
                                      std::size_t iterations, Rng& rng) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("fitted_value_iteration: gamma must lie in [0, 1)");
  }
  if (m_samples < 1) throw ConfigError("fitted_value_iteration: m_samples must be >= 1");
  const std::size_t n = mdp.state_count();
  const std::size_t m = mdp.action_count();
  const std::size_t g = mdp.aleatoric_count();

  // Transition mass into each aggregate, so backups cost O(g) per action.
  std::vector<double> into(n * m * g, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t x = 0; x < n; ++x) {
        into[(s * m + a) * g + mdp.aggregate(x)] += mdp.p(s, a, x);
      }
    }
  }
  auto q_value = [&](const std::vector<double>& v, std::size_t s, std::size_t a) {
    double next = 0.0;
    for (std::size_t k = 0; k < g; ++k) next += into[(s * m + a) * g + k] * v[k];
    return mdp.mean_reward(s, a) + gamma * next;
  };

  FittedViResult out;
  out.values.assign(g, 0.0);
  std::vector<double> sum(g);
  std::vector<std::size_t> hits(g);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(hits.begin(), hits.end(), 0);
    for (std::size_t j = 0; j < m_samples; ++j) {
      const std::size_t s = rng.index(n);
      double best = q_value(out.values, s, 0);
      for (std::size_t a = 1; a < m; ++a) best = std::max(best, q_value(out.values, s, a));
      sum[mdp.aggregate(s)] += best;
      ++hits[mdp.aggregate(s)];
    }
    double change = 0.0;
    std::vector<double> next = out.values;
    for (std::size_t k = 0; k < g; ++k) {
      if (hits[k] == 0) continue;
      next[k] = sum[k] / static_cast<double>(hits[k]);
      change = std::max(change, std::abs(next[k] - out.values[k]));
    }
    out.values.swap(next);
    out.last_change = change;
    ++out.iterations;
  }

  out.q.resize(n * m);
  out.greedy.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t best_a = 0;
    for (std::size_t a = 0; a < m; ++a) {
      out.q[s * m + a] = q_value(out.values, s, a);
      if (out.q[s * m + a] > out.q[s * m + best_a]) best_a = a;
    }
    out.greedy[s] = best_a;
  }
  return out;
}

}  // namespace oql::oracle
