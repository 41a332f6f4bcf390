#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oql/finite_mdp.hpp"
#include "oql/oracle.hpp"

using namespace oql;
using namespace oql::oracle;

namespace {

FiniteMdp single_state(double reward) { return FiniteMdp(1, 1, {1.0}, {reward}); }

// Two-state deterministic cycle, reward 1 on leaving state 0.
FiniteMdp two_cycle() {
  return FiniteMdp(2, 1, {0, 1, 1, 0}, {0, 1, 0, 0});
}

FiniteMdp random_mdp(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> t(n * m * n), r(n * m * n);
  for (std::size_t sa = 0; sa < n * m; ++sa) {
    double sum = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      t[sa * n + x] = rng.uniform() + 0.05;
      sum += t[sa * n + x];
      r[sa * n + x] = rng.uniform();
    }
    for (std::size_t x = 0; x < n; ++x) t[sa * n + x] /= sum;
  }
  return FiniteMdp(n, m, t, r);
}

// Cesaro average of P_pi^t r_pi by plain iteration.
std::vector<double> cesaro_average(const FiniteMdp& mdp, const PolicyTable& pol, int T) {
  const std::size_t n = mdp.state_count(), m = mdp.action_count();
  std::vector<double> r(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < m; ++a) r[s] += pol(s, a) * mdp.mean_reward(s, a);
  std::vector<double> v = r, acc(n, 0.0);
  for (int t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < n; ++s) acc[s] += v[s];
    std::vector<double> next(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t x = 0; x < n; ++x) next[s] += pol(s, a) * mdp.p(s, a, x) * v[x];
    v = next;
  }
  for (double& x : acc) x /= T;
  return acc;
}

}  // namespace

TEST_CASE("value iteration") {
  CHECK(value_iteration(single_state(1.0), 0.5).v[0] == doctest::Approx(2.0).epsilon(1e-9));
  const ValueTable zero = value_iteration(single_state(0.0), 0.9);
  CHECK(zero.v[0] == 0.0);

  const FiniteMdp alt = build_alternation_env();
  const ValueTable q = value_iteration(alt, 0.5);
  CHECK(std::abs(q.at(1, 1) - 2.0) <= 1e-8);
  CHECK(std::abs(q.at(1, 0) - 1.0) <= 1e-8);
  CHECK(q.residual <= 1e-10 * 0.5 / 2.0);
  CHECK_THROWS_AS(value_iteration(alt, 1.0), ConfigError);
}

TEST_CASE("value iteration satisfies the Bellman equations") {
  const FiniteMdp mdp = random_mdp(5, 3, 99);
  const double gamma = 0.95;
  const ValueTable q = value_iteration(mdp, gamma, 1e-11);
  for (std::size_t s = 0; s < 5; ++s) {
    double best = -INFINITY;
    for (std::size_t a = 0; a < 3; ++a) {
      double next = 0.0;
      for (std::size_t x = 0; x < 5; ++x) next += mdp.p(s, a, x) * q.v[x];
      CHECK(std::abs(q.at(s, a) - (mdp.mean_reward(s, a) + gamma * next)) <= 1e-10);
      best = std::max(best, q.at(s, a));
    }
    CHECK(q.v[s] == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("policy evaluation") {
  const auto v = policy_evaluation_discounted(two_cycle(), PolicyTable::deterministic(1, {0, 0}), 0.5);
  CHECK(std::abs(v[0] - 4.0 / 3.0) <= 1e-12);
  CHECK(std::abs(v[1] - 2.0 / 3.0) <= 1e-12);

  const FiniteMdp c(2, 2, std::vector<double>(8, 0.5), std::vector<double>(8, 0.3));
  for (double x : policy_evaluation_discounted(c, PolicyTable::uniform(2, 2), 0.8)) {
    CHECK(std::abs(x - 0.3 / 0.2) <= 1e-12);
  }

  // Uniform policy value equals the mean of the two one-step action backups.
  const FiniteMdp alt = build_alternation_env();
  const double gamma = 0.7;
  const auto vu = policy_evaluation_discounted(alt, PolicyTable::uniform(3, 2), gamma);
  for (std::size_t s = 0; s < 3; ++s) {
    double backup = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      double next = 0.0;
      for (std::size_t x = 0; x < 3; ++x) next += alt.p(s, a, x) * vu[x];
      backup += 0.5 * (alt.mean_reward(s, a) + gamma * next);
    }
    CHECK(std::abs(vu[s] - backup) <= 1e-12);
  }
}

TEST_CASE("policy table validation") {
  CHECK_THROWS_AS(PolicyTable(1, 2, {0.5, 0.6}), ConfigError);
  CHECK_THROWS_AS(PolicyTable::deterministic(2, {2}), ConfigError);
}

TEST_CASE("average reward") {
  const FiniteMdp alt = build_alternation_env();
  const auto alternate = PolicyTable::deterministic(2, {0, 1, 0});
  for (double x : average_reward(alt, alternate).per_state) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t a = 0; a < 2; ++a) {
    for (double x : average_reward(alt, PolicyTable::deterministic(2, {a, a, a})).per_state) {
      CHECK(std::abs(x) <= 1e-12);
    }
  }
  CHECK(average_reward(single_state(0.5), PolicyTable::uniform(1, 1)).per_state[0] ==
        doctest::Approx(0.5));

  // Two absorbing classes reached from a transient start.
  std::vector<double> t = {0, 0.3, 0.7, 0, 1, 0, 0, 0, 1};
  std::vector<double> r = {0, 0, 0, 0, 1, 0, 0, 0, 0};
  const FiniteMdp split(3, 1, t, r);
  const AverageReward ar = average_reward(split, PolicyTable::uniform(3, 1));
  CHECK(ar.recurrent_classes == 2);
  CHECK_FALSE(ar.unichain());
  CHECK(ar.per_state[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(ar.per_state[1] == doctest::Approx(1.0));
  CHECK(std::abs(ar.per_state[2]) <= 1e-12);
}

TEST_CASE("average reward agrees with a Cesaro oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const FiniteMdp mdp = random_mdp(4, 2, seed);
    const PolicyTable pol = PolicyTable::uniform(4, 2);
    const auto exact = average_reward(mdp, pol).per_state;
    const auto approx = cesaro_average(mdp, pol, 20000);
    for (std::size_t s = 0; s < 4; ++s) CHECK(std::abs(exact[s] - approx[s]) <= 1e-3);
  }
}

TEST_CASE("averaging time") {
  const FiniteMdp c(2, 1, {0.5, 0.5, 0.5, 0.5}, std::vector<double>(4, 0.4));
  CHECK(averaging_time(c, PolicyTable::uniform(2, 1), 100).tau_hat <= 1e-12);

  const FiniteMdp alt = build_alternation_env();
  const auto alternate = PolicyTable::deterministic(2, {0, 1, 0});
  const AveragingReport rep = averaging_time(alt, alternate, 100, {0});
  CHECK(rep.tau_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.t_max == 100);

  // The reset time 1/eps1 = 1/(1 - gamma) bounds the averaging time of pi'.
  const FiniteMdp adp = build_adp_env({});
  const AveragingReport r2 = averaging_time(adp, lift_aleatoric_policy(adp, {0, 1}), 10000);
  CHECK(r2.tau_hat > 0.0);
  CHECK(r2.tau_hat <= 1.0 / 0.1);
}

TEST_CASE("distortion") {
  const FiniteMdp alt = build_alternation_env();
  for (double tau : {1.0, 2.0, 10.0}) CHECK(std::abs(distortion(alt, tau) - 1.0) <= 1e-8);
  CHECK(std::abs(sup_distortion(alt, 1.0).value - 1.0) <= 1e-8);

  const FiniteMdp ident = alt.with_aggregation({0, 1, 2});
  CHECK(distortion(ident, 5.0) == 0.0);
  CHECK(sup_distortion(ident, 1.0).value == 0.0);

  for (std::size_t n : {2u, 4u}) {
    AdpEnvParams p;
    p.half_states = n;
    const FiniteMdp adp = build_adp_env(p);
    for (double tau : {1.0, 3.0, 30.0}) CHECK(std::abs(distortion(adp, tau) - p.delta) <= 1e-8);
    const SupDistortion sd = sup_distortion(adp, 1.0);
    CHECK(std::abs(sd.value - p.delta) <= 1e-8);
    CHECK(sd.tau_grid.front() == 1.0);
    CHECK(sd.tau_grid.back() >= 1e3 / 1.5);
  }
  CHECK_THROWS_AS(distortion(alt, 0.5), ConfigError);
}

TEST_CASE("distortion is invariant under relabeling within classes") {
  AdpEnvParams p;
  p.half_states = 3;
  const FiniteMdp adp = build_adp_env(p);
  // Swap environment states 2 and 4 (both odd labels).
  const std::size_t n = 6, m = 2;
  std::vector<std::size_t> perm = {0, 1, 4, 3, 2, 5};
  std::vector<double> t(n * m * n), r(n * m * n);
  std::vector<std::size_t> phi(n);
  for (std::size_t s = 0; s < n; ++s) {
    phi[perm[s]] = adp.aggregate(s);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t x = 0; x < n; ++x) {
        t[(perm[s] * m + a) * n + perm[x]] = adp.p(s, a, x);
        r[(perm[s] * m + a) * n + perm[x]] = adp.r(s, a, x);
      }
  }
  const FiniteMdp relabeled(n, m, t, r, phi);
  CHECK(distortion(relabeled, 4.0) == doctest::Approx(distortion(adp, 4.0)).epsilon(1e-12));
}

TEST_CASE("best aleatoric policy") {
  const FiniteMdp alt = build_alternation_env();
  const AleatoricPolicy tilde = best_aleatoric_policy(alt);
  CHECK(std::abs(tilde.lambda) <= 1e-12);
  const AleatoricPolicy star = optimal_stationary_policy(alt);
  CHECK(star.lambda == doctest::Approx(1.0));
  CHECK(star.lambda - tilde.lambda == doctest::Approx(sup_distortion(alt, 1.0).value).epsilon(1e-8));

  const FiniteMdp mdp = random_mdp(3, 2, 5);
  CHECK(best_aleatoric_policy(mdp).lambda == doctest::Approx(optimal_stationary_policy(mdp).lambda));

  const FiniteMdp adp = build_adp_env({});
  CHECK(std::abs(optimal_stationary_policy(adp).lambda) <= 1e-12);
  CHECK(average_reward(adp, lift_aleatoric_policy(adp, {0, 1})).per_state[0] < -0.5);

  AdpEnvParams big;
  big.half_states = 20;
  CHECK_THROWS_AS(optimal_stationary_policy(build_adp_env(big)), ConfigError);
}

TEST_CASE("mixing lemma") {
  const FiniteMdp c(1, 1, {1.0}, {0.3});
  const MixingReport rc = check_mixing_lemma(c, PolicyTable::uniform(1, 1), {0.5, 0.9}, 100);
  CHECK(rc.passed);
  for (const auto& chk : rc.checks) CHECK(chk.lhs <= 1e-12);

  const FiniteMdp alt = build_alternation_env();
  const MixingReport ra =
      check_mixing_lemma(alt, PolicyTable::deterministic(2, {0, 1, 0}), {0.9}, 1000);
  CHECK(ra.passed);
  CHECK(ra.tau_hat == doctest::Approx(1.0));
  // V(initial) = 0.9 / 0.1 and lambda / (1 - gamma) = 10.
  const auto v = policy_evaluation_discounted(alt, PolicyTable::deterministic(2, {0, 1, 0}), 0.9);
  CHECK(v[0] == doctest::Approx(9.0));

  const FiniteMdp adp = build_adp_env({});
  const MixingReport rp = check_mixing_lemma(adp, lift_aleatoric_policy(adp, {0, 1}), {0.5, 0.9}, 10000);
  CHECK(rp.passed);
  CHECK(rp.worst_margin >= 0.0);
}

TEST_CASE("learning rate weights") {
  CHECK(learning_rate_weights(1, 3.0) == std::vector<double>{1.0});
  const auto w = learning_rate_weights(2, 1.0);
  CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
  for (double tau : {1.0, 2.0, 7.5, 50.0}) {
    for (std::size_t k : {1u, 10u, 1000u}) {
      const auto wk = learning_rate_weights(k, tau);
      CHECK(std::abs(std::accumulate(wk.begin(), wk.end(), 0.0) - 1.0) <= 1e-10);
    }
  }
  const auto w4 = learning_rate_weights(10000, 10.0);
  CHECK(*std::max_element(w4.begin(), w4.end()) <= 4.0 * 10.0 / 1e4);
  CHECK_THROWS_AS(learning_rate_weights(0, 1.0), ContractViolation);
}

TEST_CASE("learning rate lemma: recursion matches brute force") {
  // Brute force partial sums for tau = 2, i = 1.
  double sum = 0.0;
  for (std::size_t k = 1; k <= 4000; ++k) sum += learning_rate_weights(k, 2.0)[0];
  CHECK(sum == doctest::Approx(1.25).epsilon(1e-3));

  const LearningRateReport rep = check_learning_rate_lemma({1.0, 2.0}, 300);
  CHECK(rep.passed);
  for (const auto& r : rep.per_tau) {
    double lo = INFINITY, hi = 0.0;
    for (std::size_t k = 1; k <= 300; ++k) {
      const auto wk = learning_rate_weights(k, r.tau);
      double s = 0.0;
      for (std::size_t i = 1; i <= k; ++i) s += wk[i - 1] / std::sqrt(double(i));
      lo = std::min(lo, s * std::sqrt(double(k)));
      hi = std::max(hi, s * std::sqrt(double(k)));
    }
    CHECK(r.min_ratio_a_lower == doctest::Approx(lo).epsilon(1e-10));
    CHECK(r.max_ratio_a_upper == doctest::Approx(hi).epsilon(1e-10));
  }
}

TEST_CASE("fitted value iteration") {
  const FiniteMdp mdp = random_mdp(4, 2, 8);
  Rng rng(3);
  const FittedViResult f = fitted_value_iteration(mdp, 0.8, 400, 200, rng);
  const ValueTable exact = value_iteration(mdp, 0.8);
  for (std::size_t s = 0; s < 4; ++s) CHECK(std::abs(f.values[s] - exact.v[s]) <= 1e-8);

  const FiniteMdp zero(2, 2, std::vector<double>(8, 0.5), std::vector<double>(8, 0.0));
  const FittedViResult z = fitted_value_iteration(zero, 0.9, 10, 50, rng);
  for (double v : z.values) CHECK(v == 0.0);

  // With a small kappa the aggregated values make action 2 greedy at label 2.
  AdpEnvParams p;
  p.half_states = 50;
  p.kappa = 0.5;
  const FittedViResult adp = fitted_value_iteration(build_adp_env(p), 0.9, 100, 300, rng);
  CHECK(adp.greedy[0] == 0);
  CHECK(adp.greedy[1] == 1);
  CHECK_THROWS_AS(fitted_value_iteration(zero, 0.9, 0, 5, rng), ConfigError);
}

TEST_CASE("regret bounds") {
  BoundArgs args{1, 1, 1, 0, 1, 1};
  CHECK(regret_bound_value(BoundKind::theorem2, args) ==
        doctest::Approx(120.0 * std::sqrt(std::log(2.0)) + 5.0 + 54.0 + 2.0).epsilon(1e-14));
  double prev = 0.0;
  for (double T = 10; T <= 1e7; T *= 3) {
    BoundArgs a{4, 2, 3, 0.1, T, 5};
    const double v = regret_bound_value(BoundKind::theorem2, a);
    CHECK(v > prev);
    prev = v;
  }
  BoundArgs a1{2, 2, 1, 0, 1e5, 4};
  const double expect = 24.0 * 8.0 * std::sqrt(4.0 * 1e5 * std::log(2e10)) + (1.0 / 4.0) * 1e5 +
                        (4.0 + 5.0 + 2.0 * std::log(1e5)) * 4.0;
  CHECK(regret_bound_value(BoundKind::theorem1, a1) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(parse_bound_kind("theorem1") == BoundKind::theorem1);
  CHECK_THROWS_AS(parse_bound_kind("theorem3"), ConfigError);
  BoundArgs bad{0, 1, 1, 0, 1, 1};
  CHECK_THROWS_AS(regret_bound_value(BoundKind::theorem2, bad), ConfigError);
}
