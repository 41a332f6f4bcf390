#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oql/agents.hpp"
#include "oql/service_station.hpp"

using namespace oql;

namespace {

// T_k recomputed independently: 1, 20, 40, 80, ...
double tk(std::uint64_t t) {
  double v = 1.0;
  for (double c = 20.0; c <= static_cast<double>(t); c *= 2.0) v = c;
  return v;
}

}  // namespace

TEST_CASE("step_size") {
  CHECK(step_size(1, 1) == 1.0);
  for (double tau : {1.0, 2.5, 10.0, 77.0}) CHECK(step_size(1, tau) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(step_size(3, 2) == doctest::Approx(5.0 / 7.0).epsilon(1e-15));
  CHECK_THROWS_AS(step_size(0, 2), ContractViolation);
  CHECK_THROWS_AS(step_size(1, 0.5), ContractViolation);
}

TEST_CASE("greedy_action") {
  EpistemicState q(1, 2, 0.0);
  Rng rng(5);
  q.q(0, 0) = 1.0;
  q.q(0, 1) = 2.0;
  for (int i = 0; i < 100; ++i) CHECK(greedy_action(q, AleatoricStateId{0}, rng).value == 1);

  q.q(0, 0) = 2.0;
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += greedy_action(q, AleatoricStateId{0}, rng).value == 1;
  CHECK(std::abs(ones / 10000.0 - 0.5) <= 0.02);

  q.q(0, 0) = 3.0;
  q.q(0, 1) = 3.0 - 1e-12;
  for (int i = 0; i < 100; ++i) CHECK(greedy_action(q, AleatoricStateId{0}, rng).value == 0);
}

TEST_CASE("unique argmax consumes no randomness") {
  EpistemicState q(1, 3, 0.0);
  q.q(0, 2) = 1.0;
  Rng a(8), b(8);
  greedy_action(q, AleatoricStateId{0}, a);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("q_update examples") {
  SUBCASE("first visit then clip") {
    EpistemicState q(2, 2, 2.0);
    q_update(q, AleatoricStateId{0}, ActionId{1}, 1.0, AleatoricStateId{1}, 2.0, 0.0);
    CHECK(q.q(0, 1) == 2.0);
    CHECK(q.count(0, 1) == 1.0);
  }
  SUBCASE("zero reward") {
    EpistemicState q(2, 2, 2.0);
    q_update(q, AleatoricStateId{0}, ActionId{1}, 0.0, AleatoricStateId{1}, 2.0, 0.0);
    CHECK(q.q(0, 1) == 1.0);
    CHECK(q.q(0, 0) == 2.0);
    CHECK(q.q(1, 0) == 2.0);
    CHECK(q.q(1, 1) == 2.0);
  }
  SUBCASE("optimism only") {
    EpistemicState q(2, 2, 0.0);
    q_update(q, AleatoricStateId{0}, ActionId{0}, 0.0, AleatoricStateId{0}, 2.0, 1.0);
    CHECK(q.q(0, 0) == 1.0);
  }
  SUBCASE("second visit uses the post-increment count") {
    EpistemicState q(1, 1, 0.0);
    q_update(q, AleatoricStateId{0}, ActionId{0}, 0.5, AleatoricStateId{0}, 4.0, 0.0);
    const double before = q.q(0, 0);  // 0.5
    q_update(q, AleatoricStateId{0}, ActionId{0}, 0.5, AleatoricStateId{0}, 4.0, 0.0);
    const double alpha = 9.0 / 10.0;
    const double target = 0.5 + 0.75 * before;
    CHECK(q.q(0, 0) == doctest::Approx(before + alpha * (target - before)).epsilon(1e-14));
  }
}

TEST_CASE("first-visit replacement ignores the prior value") {
  for (double prior : {0.0, 0.7, 3.0}) {
    EpistemicState q(2, 2, prior);
    q.q(1, 0) = 0.4;
    q.q(1, 1) = 0.9;
    q_update(q, AleatoricStateId{0}, ActionId{0}, 0.3, AleatoricStateId{1}, 3.0, 0.2);
    const double gamma = 1.0 - 1.0 / 3.0;
    CHECK(q.q(0, 0) == doctest::Approx(std::min(3.0, 0.3 + gamma * 0.9 + 0.2)));
  }
}

TEST_CASE("change_point_index") {
  CHECK(change_point(0) == 1.0);
  CHECK(change_point(1) == 20.0);
  CHECK(change_point(3) == 80.0);
  CHECK(change_point_index(0) == 0);
  CHECK(change_point_index(1) == 0);
  CHECK(change_point_index(19) == 0);
  CHECK(change_point_index(20) == 1);
  CHECK(change_point_index(39) == 1);
  CHECK(change_point_index(40) == 2);
  CHECK(change_point_index(100) == 3);
  for (std::uint64_t t = 1; t < 5000; t += 7) CHECK(change_point(change_point_index(t)) == tk(t));
}

TEST_CASE("episodic schedule values") {
  const Schedule s = episodic_schedule();
  for (std::uint64_t t : {1u, 19u, 20u, 21u, 40u, 80u}) {
    const double now = tk(t), before = tk(t - 1);
    CAPTURE(t);
    CHECK(s.horizon(t) == doctest::Approx(std::pow(now, 0.2)).epsilon(1e-14));
    CHECK(s.optimism(t) ==
          doctest::Approx(4.0 * std::pow(now, 0.3) * std::sqrt(std::log(2.0 * now * now))).epsilon(1e-14));
    CHECK(s.q_increment(t) == doctest::Approx(std::pow(now, 0.2) - std::pow(before, 0.2)).epsilon(1e-14));
    CHECK(s.count_multiplier(t) == (now == before ? 1.0 : 0.0));
  }
  CHECK(s.horizon(20) == doctest::Approx(1.8205642030260802));
  CHECK(s.q_increment(20) == doctest::Approx(0.8205642030260802));
  CHECK(s.optimism(20) == doctest::Approx(25.40429).epsilon(1e-6));
  CHECK(s.q_increment(1) == 0.0);
  CHECK(s.count_multiplier(1) == 1.0);
  CHECK(s.count_multiplier(19) == 1.0);
  CHECK(s.count_multiplier(21) == 1.0);
  CHECK(s.count_multiplier(40) == 0.0);
  CHECK(s.count_multiplier(80) == 0.0);
}

TEST_CASE("smooth schedule values") {
  const Schedule s = smooth_schedule();
  for (std::uint64_t t : {1u, 19u, 20u, 21u, 40u, 80u}) {
    const double td = static_cast<double>(t);
    CAPTURE(t);
    CHECK(s.horizon(t) == doctest::Approx(1.5 * std::pow(td, 0.2)).epsilon(1e-14));
    CHECK(s.optimism(t) ==
          doctest::Approx(0.44 * std::pow(td, 0.3) * std::sqrt(std::log(2.0 * td * td))).epsilon(1e-14));
    CHECK(s.q_increment(t) ==
          doctest::Approx(1.5 * (std::pow(td, 0.2) - std::pow(td - 1.0, 0.2))).epsilon(1e-14));
    CHECK(s.count_multiplier(t) == 1.0);
  }
  CHECK(s.horizon(1) == 1.5);
  CHECK(s.q_increment(2) == doctest::Approx(0.2230475).epsilon(1e-6));
}

TEST_CASE("growing horizon agent: change points shift values and zero counts") {
  const AgentConfig cfg = service::agent_config();
  GrowingHorizonQAgent agent(cfg, episodic_schedule());
  service::ServiceStation env;
  Rng rng(21);
  CHECK(agent.epistemic().q_values() == std::vector<double>(4, 1.0));
  for (std::uint64_t t = 1; t <= 200; ++t) {
    const std::vector<double> q_before = agent.epistemic().q_values();
    const std::vector<double> n_before = agent.epistemic().counts();
    const ActionId a = agent.act(rng);
    CHECK(agent.timestep() == t);
    const bool change = tk(t) != tk(t - 1);
    const double shift = std::pow(tk(t), 0.2) - std::pow(tk(t - 1), 0.2);
    for (std::size_t i = 0; i < 4; ++i) {
      if (change) {
        CHECK(agent.epistemic().counts()[i] == 0.0);
        CHECK(agent.epistemic().q_values()[i] == doctest::Approx(q_before[i] + shift).epsilon(1e-14));
      } else {
        CHECK(agent.epistemic().counts()[i] == n_before[i]);
        CHECK(agent.epistemic().q_values()[i] == q_before[i]);
      }
    }
    if (t == 1) CHECK(agent.tau() == 1.0);
    agent.observe(a, env.step(a, rng).observation);
    for (double q : agent.epistemic().q_values()) {
      CHECK(q <= agent.tau() + 1e-12);
      CHECK(q >= 0.0);
    }
  }
}

TEST_CASE("growing horizon agent: smooth schedule keeps counts") {
  const AgentConfig cfg = service::agent_config();
  GrowingHorizonQAgent agent(cfg, smooth_schedule());
  service::ServiceStation env;
  Rng rng(4);
  double total_count = 0.0;
  for (std::uint64_t t = 1; t <= 500; ++t) {
    const ActionId a = agent.act(rng);
    agent.observe(a, env.step(a, rng).observation);
    double sum = 0.0;
    for (double n : agent.epistemic().counts()) sum += n;
    CHECK(sum == total_count + 1.0);
    total_count = sum;
    // Entries never visited carry the initial 1 plus the accumulated shifts,
    // which is tau + 1; visited entries are clipped at tau.
    for (std::size_t i = 0; i < 4; ++i) {
      const double q = agent.epistemic().q_values()[i];
      CHECK(q >= 0.0);
      if (agent.epistemic().counts()[i] > 0.0) {
        CHECK(q <= agent.tau() + 1e-12);
      } else {
        CHECK(q == doctest::Approx(agent.tau() + 1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("discounted agent") {
  const AgentConfig cfg = service::agent_config();
  DiscountedAgentParams p;
  p.tau = 3.0;
  p.duration = 1000;
  CHECK(p.resolved_q_init() == 3.0);
  CHECK(p.resolved_beta() == doctest::Approx(4.0 * std::pow(3.0, 1.5) * std::sqrt(std::log(2e6))));
  DiscountedQAgent a = make_discounted_agent(cfg, p);
  DiscountedQAgent b = make_discounted_agent(cfg, p);
  CHECK(a.epistemic().q_values() == std::vector<double>(4, 3.0));
  service::ServiceStation ea, eb;
  Rng ra(17), rb(17);
  run_stream(a, ea, 1000, ra);
  run_stream(b, eb, 1000, rb);
  CHECK(a.epistemic() == b.epistemic());
  for (double q : a.epistemic().q_values()) CHECK(q <= 3.0);

  DiscountedAgentParams bad = p;
  bad.duration = 0;
  CHECK_THROWS_AS(make_discounted_agent(cfg, bad), ConfigError);
  bad = p;
  bad.tau = 0.5;
  CHECK_THROWS_AS(make_discounted_agent(cfg, bad), ConfigError);
  p.q_init = 0.25;
  CHECK(make_discounted_agent(cfg, p).epistemic().q(0, 0) == 0.25);
}

TEST_CASE("tau = 1 reduces to a bandit on immediate reward") {
  // One aleatoric state, arm 1 pays 1 and arm 0 pays 0.
  AgentConfig cfg(1, 2, 1, AleatoricStateId{0},
                  [](auto, auto, auto) { return AleatoricStateId{0}; },
                  [](auto, ActionId a, auto) { return a.value == 1 ? 1.0 : 0.0; });
  DiscountedAgentParams p;
  p.tau = 1.0;
  p.duration = 100;
  p.beta = 0.0;
  DiscountedQAgent agent(cfg, p);
  class Env final : public Environment {
   public:
    std::size_t action_count() const override { return 2; }
    std::size_t observation_count() const override { return 1; }
    EnvStep step(ActionId, Rng&) override { return {ObservationId{0}, 0.0}; }
  } env;
  Rng rng(2);
  run_stream(agent, env, 50, rng);
  CHECK(agent.epistemic().q(0, 1) == 1.0);
  if (agent.epistemic().count(0, 0) > 0) CHECK(agent.epistemic().q(0, 0) == 0.0);
}
