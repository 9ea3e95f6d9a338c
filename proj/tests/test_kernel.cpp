#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "fdctmc/kernel.hpp"
#include "fdctmc/mdp.hpp"
#include "fdctmc/simulate.hpp"
#include "fixtures.hpp"

using namespace fdctmc;

namespace {

// Monte Carlo one-step oracle: runs the alarm-clock semantics from `s` with
// timeout d until the first re-entry into S', independent of the kernel path.
struct OneStepSample {
  std::map<int, double> freq;
  double mean_cost = 0.0;
  double cost_se = 0.0;
};

OneStepSample one_step_oracle(const NormalizedModel& model, int s, double d, long n,
                              std::uint64_t seed) {
  OneStepSample out;
  const auto& st = model.base;
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < n; ++i) {
    Rng rng = Rng::for_run(seed, static_cast<std::uint64_t>(i));
    int cur = s;
    double rem = d;
    double cost = 0.0;
    int hit = -1;
    while (hit < 0) {
      auto uc = static_cast<std::size_t>(cur);
      double t = rng.exponential(st.rate);
      if (t < rem) {
        int next = rng.pick(st.p[uc]);
        cost += t * model.cost.rate_cost[uc] + model.cost.imp_exp[uc][static_cast<std::size_t>(next)];
        rem -= t;
        cur = next;
      } else {
        int next = rng.pick(st.f[uc]);
        cost += rem * model.cost.rate_cost[uc] + model.cost.imp_fd[uc][static_cast<std::size_t>(next)];
        cur = next;
        rem = std::numeric_limits<double>::infinity();
      }
      if (model.in_sprime(cur)) hit = cur;
    }
    out.freq[hit] += 1.0;
    double delta = cost - mean;
    mean += delta / double(i + 1);
    m2 += delta * (cost - mean);
  }
  for (auto& [k, v] : out.freq) v /= double(n);
  out.mean_cost = mean;
  out.cost_se = std::sqrt(m2 / double(n - 1) / double(n));
  return out;
}

double direct_poisson(double lambda_d, int i) {
  return std::exp(double(i) * std::log(lambda_d) - lambda_d - std::lgamma(double(i) + 1.0));
}

}  // namespace

TEST_CASE("poisson truncation at lambda_d = 1") {
  auto p = poisson_terms(1.0, 1e-6);
  CHECK(p.terms[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  double sum = 0.0;
  for (double t : p.terms) sum += t;
  CHECK(sum >= 1.0 - 5e-7);
  CHECK(p.tail_bound <= 5e-7);
}

TEST_CASE("poisson truncation degenerates cleanly near zero") {
  auto p = poisson_terms(1e-300, 1e-9);
  CHECK(p.terms[0] == doctest::Approx(1.0));
  CHECK(p.terms.size() <= 2);
  auto z = poisson_terms(0.0, 0.5);
  CHECK(z.terms == std::vector<double>{1.0});
  CHECK(z.tail_bound == 0.0);
}

TEST_CASE("poisson truncation at the reduction scale stays finite") {
  auto p = poisson_terms(112.0, 1e-9);
  double sum = 0.0;
  for (double t : p.terms) {
    CHECK(std::isfinite(t));
    CHECK(t >= 0.0);
    sum += t;
  }
  CHECK(sum >= 1.0 - 5e-10);
}

TEST_CASE("poisson terms match the direct log-domain formula") {
  for (double lambda_d : {0.5, 3.0, 20.0, 112.0}) {
    auto p = poisson_terms(lambda_d, 1e-10);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.terms.size(); ++i) {
      double ref = direct_poisson(lambda_d, static_cast<int>(i));
      if (ref > 1e-280) CHECK(p.terms[i] == doctest::Approx(ref).epsilon(1e-11));
      sum += p.terms[i];
    }
    CHECK(sum + p.tail_bound == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("subordinated chain of the two-message model") {
  auto m = fixtures::retransmit_double();
  auto norm = normalize(m.structure, m.cost);
  int two = norm.base.index_of("two");
  auto chain = build_subordinated(norm, two);
  // every S' state is frozen; the fd self-loop of two lands on the frozen copy
  for (int v : norm.mdp_states) CHECK(chain.absorbing[static_cast<std::size_t>(v)]);
  CHECK(!chain.absorbing[static_cast<std::size_t>(chain.entry)]);
  REQUIRE(chain.f_rows[static_cast<std::size_t>(chain.entry)].size() == 1);
  CHECK(chain.f_rows[static_cast<std::size_t>(chain.entry)][0].first == two);
  // the entry copy replicates two's exponential row
  const auto& prow = chain.p_rows[static_cast<std::size_t>(chain.entry)];
  REQUIRE(prow.size() == 2);
  double to_keep_copy = 0.0;
  for (const auto& [t, p] : prow)
    if (t == norm.base.index_of("init#keep")) to_keep_copy = p;
  CHECK(to_keep_copy == 0.2);
  // absorbing states carry no cost
  for (int v : norm.mdp_states) {
    CHECK(chain.rate_cost[static_cast<std::size_t>(v)] == 0.0);
    CHECK(chain.jp[static_cast<std::size_t>(v)] == 0.0);
    CHECK(chain.jf[static_cast<std::size_t>(v)] == 0.0);
  }
}

TEST_CASE("every positive-probability path of a subordinated chain gets absorbed") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = fixtures::random_model(rng);
    auto norm = normalize(m.structure, m.cost);
    for (int s : norm.mdp_states) {
      if (!norm.base.fd[static_cast<std::size_t>(s)] || !norm.is_reset(s)) continue;
      auto chain = build_subordinated(norm, s);
      // walk the union graph: all bottom components must be absorbing states
      auto dim = static_cast<std::size_t>(chain.dim);
      std::vector<char> seen(dim, 0);
      std::vector<int> stack{chain.entry};
      seen[static_cast<std::size_t>(chain.entry)] = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        auto uv = static_cast<std::size_t>(v);
        if (chain.absorbing[uv]) continue;
        std::size_t out_degree = chain.p_rows[uv].size() + chain.f_rows[uv].size();
        CHECK(out_degree > 0);
        for (const auto& rows : {chain.p_rows[uv], chain.f_rows[uv]})
          for (const auto& [t, p] : rows)
            if (p > 0.0 && !seen[static_cast<std::size_t>(t)]) {
              seen[static_cast<std::size_t>(t)] = 1;
              stack.push_back(t);
            }
      }
      // transient states reached must have an F row (they can always fire)
      for (std::size_t v = 0; v < dim; ++v)
        if (seen[v] && !chain.absorbing[v]) CHECK(!chain.f_rows[v].empty());
    }
  }
}

TEST_CASE("kernel row of init at 0.4 matches the closed form") {
  auto m = fixtures::retransmit_double();
  auto norm = normalize(m.structure, m.cost);
  int init = norm.base.index_of("init");
  int two = norm.base.index_of("two");
  int ok = norm.base.index_of("OK");
  double d = 0.4;
  auto row = kernel_row(norm, init, d, 1e-10);

  // independent closed form for this chain: the only exp exit is init itself
  double p_ok = 0.8 * (1.0 - std::exp(-d));
  double p_init = 0.2 * (1.0 - std::exp(-d));
  double p_two = std::exp(-d);
  double elapsed = 0.2 * d + 0.8 * (1.0 - std::exp(-d));
  double cost = elapsed + 3.0 * (1.0 - p_ok);
  CHECK(row.prob_of(ok) == doctest::Approx(p_ok).epsilon(1e-9));
  CHECK(row.prob_of(init) == doctest::Approx(p_init).epsilon(1e-9));
  CHECK(row.prob_of(two) == doctest::Approx(p_two).epsilon(1e-9));
  CHECK(row.cost == doctest::Approx(cost).epsilon(1e-9));
  CHECK(row.abs_error <= 5e-11);
  CHECK(row.prob_sum() <= 1.0 + 1e-12);
  CHECK(row.prob_sum() >= 1.0 - 3 * row.abs_error);
}

TEST_CASE("kernel rows agree with the one-step Monte Carlo oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    auto m = fixtures::random_model(rng, 5);
    auto norm = normalize(m.structure, m.cost);
    for (int s : norm.mdp_states) {
      if (!norm.is_reset(s) || norm.cost.is_goal(s)) continue;
      double d = 0.2 + 1.5 * rng.next_unit();
      auto row = kernel_row(norm, s, d, 1e-10);
      auto oracle = one_step_oracle(norm, s, d, 100000, 555 + static_cast<std::uint64_t>(trial));
      for (const auto& [t, p] : row.probs) {
        double freq = oracle.freq.count(t) ? oracle.freq[t] : 0.0;
        double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / 100000.0);
        CHECK(std::fabs(p - freq) <= 4.0 * se + 1e-6);
      }
      CHECK(std::fabs(row.cost - oracle.mean_cost) <= 4.0 * oracle.cost_se + 1e-6);
      break;  // one reset state per model keeps the runtime modest
    }
  }
}

TEST_CASE("a vanishing timeout reproduces the F row") {
  auto m = fixtures::retransmit_double();
  auto norm = normalize(m.structure, m.cost);
  int two = norm.base.index_of("two");
  auto row = kernel_row(norm, two, 1e-9, 1e-10);
  CHECK(row.prob_of(two) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(row.cost == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("kernel rows are Lipschitz in the timeout") {
  Rng rng(5);
  auto m = fixtures::random_model(rng, 5);
  auto norm = normalize(m.structure, m.cost);
  double lambda = norm.base.rate;
  double theta = 1e-9;
  for (int s : norm.mdp_states) {
    if (!norm.is_reset(s) || norm.cost.is_goal(s)) continue;
    auto chain = build_subordinated(norm, s);
    for (double d : {0.1, 0.7, 1.9}) {
      double step = 0.01;
      auto a = kernel_row(norm, chain, d, theta);
      auto b = kernel_row(norm, chain, d + step, theta);
      for (int v : norm.mdp_states) {
        double diff = std::fabs(a.prob_of(v) - b.prob_of(v));
        CHECK(diff <= lambda * step + 2.0 * theta);
      }
    }
  }
}

TEST_CASE("exp-only rows") {
  const char* text = R"(
states: s g
rate: 1
init: s
goal: g
P: s g 1
P: g g 1
R: s 1
R: g 1
)";
  auto m = parse_model(text);
  auto norm = normalize(m.structure, m.cost);
  auto row = kernel_row_exp(norm, 0);
  CHECK(row.prob_of(1) == 1.0);
  CHECK(row.cost == 1.0);
  CHECK(row.abs_error == 0.0);

  const char* branching = R"(
states: s a b
rate: 2
init: s
goal: a b
P: s a 0.5
P: s b 0.5
P: a a 1
P: b b 1
R: s 4
R: a 1
R: b 1
IP: s a 1
IP: s b 3
)";
  auto m2 = parse_model(branching);
  auto norm2 = normalize(m2.structure, m2.cost);
  auto row2 = kernel_row_exp(norm2, 0);
  CHECK(row2.cost == doctest::Approx(4.0 / 2.0 + 0.5 * 1.0 + 0.5 * 3.0));

  auto fd_model = fixtures::retransmit_single();
  auto fd_norm = normalize(fd_model.structure, fd_model.cost);
  CHECK_THROWS_AS(kernel_row_exp(fd_norm, fd_norm.base.index_of("init")), ModelError);
}

TEST_CASE("rounding onto the kappa grid") {
  KernelRow row;
  row.source = 0;
  row.delay = 1.0;
  row.abs_error = 0.0;

  SUBCASE("exact multiples stay put") {
    row.probs = {{0, 0.5}, {1, 0.5}};
    row.cost = 0.75;
    auto r = round_row(row, 0.25);
    CHECK(r.prob_of(0) == 0.5);
    CHECK(r.prob_of(1) == 0.5);
    CHECK(r.cost == 0.75);
  }
  SUBCASE("thirds round up, the largest absorbs") {
    row.probs = {{0, 1.0 / 3.0}, {1, 2.0 / 3.0}};
    row.cost = 0.0;
    auto r = round_row(row, 0.01);
    CHECK(r.prob_of(0) == doctest::Approx(0.34).epsilon(1e-12));
    CHECK(r.prob_of(1) == doctest::Approx(0.66).epsilon(1e-12));
    double sum = r.prob_of(0) + r.prob_of(1);
    CHECK(sum == 1.0);
  }
  SUBCASE("zeros survive") {
    row.probs = {{0, 0.3}, {1, 0.0}, {2, 0.7}};
    row.cost = 0.1;
    auto r = round_row(row, 0.004);
    CHECK(r.prob_of(1) == 0.0);
    CHECK(r.prob_of(0) + r.prob_of(1) + r.prob_of(2) == 1.0);
  }
  SUBCASE("a kappa that would push the largest entry negative is rejected") {
    row.probs = {{0, 0.6}, {1, 0.4}};
    row.cost = 0.0;
    CHECK_THROWS_AS(round_row(row, 2.0), ModelError);
  }
  SUBCASE("stale error certificates are rejected") {
    row.probs = {{0, 1.0}};
    row.abs_error = 0.1;
    CHECK_THROWS_AS(round_row(row, 0.01), std::invalid_argument);
  }
}

TEST_CASE("rounded rows keep every entry within kappa") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    KernelRow row;
    row.source = 0;
    row.delay = 1.0;
    row.abs_error = 0.0;
    int n = 2 + static_cast<int>(rng.next_u64() % 7);
    std::vector<double> w(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& v : w) {
      v = 0.02 + rng.next_unit();
      sum += v;
    }
    for (int i = 0; i < n; ++i) row.probs.push_back({i, w[static_cast<std::size_t>(i)] / sum});
    row.cost = rng.next_unit();
    double kappa = 1e-4 + 1e-3 * rng.next_unit();
    auto r = round_row(row, kappa);
    std::size_t imax = 0;
    for (std::size_t i = 1; i < row.probs.size(); ++i)
      if (row.probs[i].second > row.probs[imax].second) imax = i;
    double total = 0.0;
    for (std::size_t i = 0; i < r.probs.size(); ++i) {
      CHECK(std::fabs(r.probs[i].second - row.probs[i].second) <= kappa + 1e-15);
      if (i != imax) total += r.probs[i].second;
    }
    total += r.probs[imax].second;  // the adjusted maximum closes the row
    CHECK(total == 1.0);
    CHECK(r.cost >= row.cost - 1e-15);
    CHECK(r.cost <= row.cost + kappa + 1e-15);
  }
}

TEST_CASE("poisson truncation survives lambda_d = 1e4") {
  auto p = poisson_terms(1e4, 1e-9);

  double sum = 0.0;
  for (double t : p.terms) {
    REQUIRE(std::isfinite(t));
    REQUIRE(t >= 0.0);
    sum += t;
  }
  CHECK(sum >= 1.0 - 5e-10);
  CHECK(sum + p.tail_bound <= 1.0 + 1e-9);
  CHECK(p.terms.size() < 12000);
}
