#include <cmath>

#include "doctest.h"
#include "fdctmc/mdp.hpp"
#include "fdctmc/simulate.hpp"
#include "fixtures.hpp"

using namespace fdctmc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DelayFunction delays_of(const FdCtmcStructure& st,
                        std::initializer_list<std::pair<const char*, double>> entries) {
  DelayFunction d;
  for (const auto& [name, v] : entries) d.delays[st.index_of(name)] = v;
  return d;
}

}  // namespace

TEST_CASE("identical seeds replay identical traces") {
  auto m = fixtures::retransmit_double();
  auto d = delays_of(m.structure, {{"init", 0.7}, {"lost", 0.7}, {"two", 0.7}});
  auto a = sample_run(m.structure, m.cost, d, 42);
  auto b = sample_run(m.structure, m.cost, d, 42);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].state == b.trace[i].state);
    CHECK(a.trace[i].sojourn == b.trace[i].sojourn);
    CHECK(a.trace[i].remaining_delay == b.trace[i].remaining_delay);
    CHECK(a.trace[i].kind == b.trace[i].kind);
  }
  CHECK(a.total_cost == b.total_cost);
  auto c = sample_run(m.structure, m.cost, d, 43);
  CHECK(a.total_cost != c.total_cost);
}

TEST_CASE("alarm bookkeeping along a trace") {
  auto m = fixtures::retransmit_double();
  auto d = delays_of(m.structure, {{"init", 0.9}, {"lost", 0.9}, {"two", 0.9}});
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto run = sample_run(m.structure, m.cost, d, seed);
    for (std::size_t i = 0; i + 1 < run.trace.size(); ++i) {
      const auto& here = run.trace[i];
      const auto& next = run.trace[i + 1];
      bool both_fd = m.structure.is_fd(here.state) && m.structure.is_fd(next.state);
      if (here.kind == StepKind::exp_delay) {
        CHECK(here.sojourn < here.remaining_delay);
        if (both_fd)
          CHECK(next.remaining_delay ==
                doctest::Approx(here.remaining_delay - here.sojourn).epsilon(1e-12));
      } else {
        CHECK(here.sojourn == here.remaining_delay);
        if (m.structure.is_fd(next.state))
          CHECK(next.remaining_delay == d.at(next.state));
      }
    }
    if (run.hit_goal) CHECK(*run.hit_goal == m.structure.index_of("OK"));
  }
}

TEST_CASE("a hair-trigger timeout fires first") {
  const char* text = R"(
states: s g
rate: 1
init: s
goal: g
fd: s
P: s g 1
P: g g 1
F: s g 1
R: s 1
R: g 1
IF: s g 3
)";
  auto m = parse_model(text);
  DelayFunction d;
  d.delays[0] = 1e-9;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto run = sample_run(m.structure, m.cost, d, seed);
    REQUIRE(run.trace.size() == 1);
    CHECK(run.trace[0].kind == StepKind::fixed_delay);
    CHECK(run.total_cost == doctest::Approx(3.0 + 1e-9).epsilon(1e-6));
  }
}

TEST_CASE("exponential sojourns have mean 1/lambda") {
  const char* text = R"(
states: s g
rate: 2.5
init: s
goal: g
P: s g 1
P: g g 1
R: s 1
R: g 1
)";
  auto m = parse_model(text);
  DelayFunction d;
  long n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    auto run = sample_run(m.structure, m.cost, d, static_cast<std::uint64_t>(i));
    sum += run.trace[0].sojourn;
    sum2 += run.trace[0].sojourn * run.trace[0].sojourn;
  }
  double mean = sum / double(n);
  double se = std::sqrt((sum2 / double(n) - mean * mean) / double(n));
  CHECK(std::fabs(mean - 1.0 / 2.5) <= 4.0 * se);
}

TEST_CASE("estimated cost matches the analytic value on the worked models") {
  struct Case {
    ParsedModel m;
    DelayFunction d;
  };
  std::vector<Case> cases;
  {
    auto m = fixtures::two_rates();
    auto d = delays_of(m.structure, {{"a", 1e-4}, {"b", 1e-2}});
    cases.push_back({std::move(m), d});
  }
  {
    auto m = fixtures::retransmit_single();
    auto d = delays_of(m.structure, {{"init", 1.0}, {"lost", 1.0}});
    cases.push_back({std::move(m), d});
  }
  {
    auto m = fixtures::retransmit_double();
    auto d = delays_of(m.structure, {{"init", 0.6}, {"lost", 0.6}, {"two", 0.4}});
    cases.push_back({std::move(m), d});
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [m, d] = cases[i];
    auto norm = normalize(m.structure, m.cost);
    auto analytic = evaluate_fdctmc(norm, d, 1e-12);
    REQUIRE(analytic.cost.finite);
    auto est = estimate_cost(m.structure, m.cost, d, 100000, 1000 + i);
    CHECK(est.truncated_fraction == 0.0);
    CHECK(std::fabs(est.mean - analytic.cost.value) <= 4.0 * est.std_error);

    auto reach = estimate_reach(m.structure, m.cost, d, 100000, 2000 + i);
    for (const auto& [g, stats] : reach) {
      double want = analytic.reach.count(g) ? analytic.reach.at(g) : 0.0;
      CHECK(std::fabs(stats.mean - want) <= 4.0 * stats.std_error + 1e-9);
    }
  }
}

TEST_CASE("normalization preserves the simulated expected cost") {
  Rng rng(500);
  for (int trial = 0; trial < 3; ++trial) {
    auto m = fixtures::random_model(rng, 5);
    auto norm = normalize(m.structure, m.cost);
    Rng drng(600 + static_cast<std::uint64_t>(trial));
    auto d = fixtures::random_delays(m.structure, drng);
    DelayFunction lifted_all;
    for (std::size_t v = 0; v < norm.base.size(); ++v)
      if (norm.base.fd[v]) lifted_all.delays[static_cast<int>(v)] = d.at(norm.lift[v]);
    auto a = estimate_cost(m.structure, m.cost, d, 100000, 31);
    auto b = estimate_cost(norm.base, norm.cost, lifted_all, 100000, 77);
    double se = std::hypot(a.std_error, b.std_error);
    CHECK(std::fabs(a.mean - b.mean) <= 4.0 * se);
  }
}

TEST_CASE("truncated runs are reported, not dropped silently") {
  const char* trapped = R"(
states: a b g
rate: 1
init: a
goal: g
P: a b 1
P: b b 1
P: g g 1
R: a 1
R: b 1
R: g 1
)";
  auto m = parse_model(trapped);
  DelayFunction d;
  auto est = estimate_cost(m.structure, m.cost, d, 200, 9, 50);
  CHECK(est.truncated_fraction == 1.0);
  auto run = sample_run(m.structure, m.cost, d, 1, 50);
  CHECK(run.truncated);
  CHECK(!run.hit_goal);
}

TEST_CASE("the oracle agrees with the analytic evaluator across a random corpus") {
  Rng rng(777);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto m = fixtures::random_model(rng, 6);
    auto norm = normalize(m.structure, m.cost);
    Rng drng(900 + static_cast<std::uint64_t>(trial));
    auto d = fixtures::random_delays(m.structure, drng);
    auto analytic = evaluate_fdctmc(norm, d, 1e-12);
    REQUIRE(analytic.cost.finite);
    auto est = estimate_cost(m.structure, m.cost, d, 20000, 40 + trial);
    CHECK(std::fabs(est.mean - analytic.cost.value) <= 4.0 * est.std_error);
    ++checked;
  }
  CHECK(checked == 20);
}
