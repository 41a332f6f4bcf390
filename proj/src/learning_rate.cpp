#include <algorithm>
#include <cmath>

#include "oql/agents.hpp"
#include "oql/oracle.hpp"

namespace oql::oracle {

std::vector<double> learning_rate_weights(std::size_t k, double tau) {
  if (k < 1) throw ContractViolation("learning_rate_weights: k must be >= 1");
  if (!(tau >= 1.0)) throw ContractViolation("learning_rate_weights: tau must be >= 1");
  std::vector<double> w(k);
  double tail = 1.0;  // prod_{l=i+1}^k (1 - alpha_l)
  for (std::size_t i = k; i >= 1; --i) {
    const double alpha = step_size(static_cast<double>(i), tau);
    w[i - 1] = alpha * tail;
    tail *= 1.0 - alpha;
  }
  return w;
}

LearningRateReport check_learning_rate_lemma(const std::vector<double>& tau_grid,
                                             std::size_t k_max, double slack,
                                             double c_tolerance,
                                             std::size_t tail_factor) {
  if (k_max < 1) throw ConfigError("check_learning_rate_lemma: k_max must be >= 1");
  LearningRateReport report;
  report.k_max = k_max;
  report.tail_horizon = tail_factor * k_max;

  for (double tau : tau_grid) {
    LearningRateReport::PerTau r;
    r.tau = tau;
    r.min_ratio_a_lower = INFINITY;

    // Going from k - 1 to k every existing weight is multiplied by
    // (1 - alpha_k) and alpha_k^k = alpha_k is appended, so each statistic
    // has a one-line recursion.
    double weight_sum = 0.0;
    double inv_sqrt_sum = 0.0;
    double max_weight = 0.0;
    double sq_sum = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
      const double kd = static_cast<double>(k);
      const double alpha = step_size(kd, tau);
      const double keep = 1.0 - alpha;
      weight_sum = keep * weight_sum + alpha;
      inv_sqrt_sum = keep * inv_sqrt_sum + alpha / std::sqrt(kd);
      max_weight = std::max(keep * max_weight, alpha);
      sq_sum = keep * keep * sq_sum + alpha * alpha;

      const double root = std::sqrt(kd);
      const double cap = 4.0 * tau / kd;
      r.min_ratio_a_lower = std::min(r.min_ratio_a_lower, inv_sqrt_sum * root);
      r.max_ratio_a_upper = std::max(r.max_ratio_a_upper, inv_sqrt_sum * root);
      r.max_ratio_b_max = std::max(r.max_ratio_b_max, max_weight / cap);
      r.max_ratio_b_sq = std::max(r.max_ratio_b_sq, sq_sum / cap);
      r.max_weight_sum_error = std::max(r.max_weight_sum_error, std::abs(weight_sum - 1.0));

      if (inv_sqrt_sum < 1.0 / root - slack) ++r.violations;
      if (inv_sqrt_sum > 2.0 / root + slack) ++r.violations;
      if (max_weight > cap + slack) ++r.violations;
      if (sq_sum > cap + slack) ++r.violations;
    }

    // sum_{k=i}^K alpha_k^i = alpha_i * tail(i), where
    // tail(i) = 1 + (1 - alpha_{i+1}) tail(i+1) and tail(K) = 1.
    const double limit = 1.0 + 1.0 / (2.0 * tau);
    double tail = 1.0;
    for (std::size_t i = report.tail_horizon; i >= 1; --i) {
      if (i < report.tail_horizon) {
        tail = 1.0 + (1.0 - step_size(static_cast<double>(i + 1), tau)) * tail;
      }
      if (i <= k_max) {
        const double partial = step_size(static_cast<double>(i), tau) * tail;
        const double err = std::abs(partial - limit);
        r.max_c_error = std::max(r.max_c_error, err);
        if (err > c_tolerance) ++r.violations;
      }
    }

    report.passed = report.passed && r.violations == 0;
    report.per_tau.push_back(r);
  }
  return report;
}

}  // namespace oql::oracle
