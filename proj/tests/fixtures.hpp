#ifndef FDCTMC_TESTS_FIXTURES_HPP
#define FDCTMC_TESTS_FIXTURES_HPP

#include <string>

#include "fdctmc/mdp.hpp"
#include "fdctmc/model.hpp"
#include "fdctmc/simulate.hpp"

namespace fixtures {

// Single message in flight: timeout in init retransmits, lost inherits it.
inline const char* kRetransmitSingle = R"(
states: init lost OK
rate: 1
init: init
goal: OK
fd: init lost
P: init lost 0.2
P: init OK 0.8
P: lost lost 1
P: OK OK 1
F: init init 1
F: lost init 1
R: init 1
R: lost 1
R: OK 1
IF: init init 3
IF: lost init 3
)";

// Up to two messages in flight; init and two are indistinguishable.
inline const char* kRetransmitDouble = R"(
states: init lost two OK
rate: 1
init: init
goal: OK
fd: init lost two
P: init lost 0.2
P: init OK 0.8
P: lost lost 1
P: two init 0.2
P: two OK 0.8
P: OK OK 1
F: init two 1
F: lost init 1
F: two two 1
R: init 1
R: lost 1
R: two 1
R: OK 1
IF: init two 3
IF: lost init 3
IF: two two 3
obs: init two
)";

// Two timeout states with cost rates 2 and 1; the optimum parks in b.
inline const char* kTwoRates = R"(
states: a t b
rate: 1
init: a
goal: t
fd: a b
P: a t 1
P: b t 1
P: t t 1
F: a b 1
F: b a 1
R: a 2
R: b 1
R: t 1
)";

inline fdctmc::ParsedModel retransmit_single() { return fdctmc::parse_model(kRetransmitSingle); }
inline fdctmc::ParsedModel retransmit_double() { return fdctmc::parse_model(kRetransmitDouble); }
inline fdctmc::ParsedModel two_rates() { return fdctmc::parse_model(kTwoRates); }

// Random valid model with <= max_states states, one goal, a nonempty fd set,
// strictly positive rate costs, and the goal reachable from everywhere (so
// the expected cost is finite).
inline fdctmc::ParsedModel random_model(fdctmc::Rng& rng, int max_states = 6) {
  using namespace fdctmc;
  for (;;) {
    int n = 2 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_states - 1));
    ParsedModel m;
    FdCtmcStructure& st = m.structure;
    CostStructure& cost = m.cost;
    for (int i = 0; i < n; ++i) st.states.push_back("s" + std::to_string(i));
    auto un = static_cast<std::size_t>(n);
    st.rate = 0.25 + 2.0 * rng.next_unit();
    st.p.assign(un, std::vector<double>(un, 0.0));
    st.f.assign(un, std::vector<double>(un, 0.0));
    st.fd.assign(un, 0);
    st.init = 0;
    cost.goal.assign(un, 0);
    cost.goal[un - 1] = 1;
    cost.rate_cost.assign(un, 0.0);
    cost.imp_exp.assign(un, std::vector<double>(un, 0.0));
    cost.imp_fd.assign(un, std::vector<double>(un, 0.0));

    // rows are made to sum to exactly 1.0 in ascending index order, so the
    // parser's stochasticity check sees them as already normalized
    auto fill_row = [&](std::vector<double>& row, int targets) {
      std::vector<double> w(un, 0.0);
      for (int t = 0; t < targets; ++t) w[rng.next_u64() % un] += 0.25 + rng.next_unit();
      double sum = 0.0;
      for (double v : w) sum += v;
      std::size_t last = 0;
      for (std::size_t t = 0; t < un; ++t)
        if (w[t] > 0.0) last = t;
      double partial = 0.0;
      for (std::size_t t = 0; t < un; ++t) {
        if (w[t] <= 0.0 || t == last) continue;
        row[t] = w[t] / sum;
        partial += row[t];
      }
      row[last] = 1.0 - partial;
    };
    for (std::size_t s = 0; s < un; ++s) {
      cost.rate_cost[s] = 0.25 + 2.0 * rng.next_unit();
      fill_row(st.p[s], 1 + static_cast<int>(rng.next_u64() % 3));
      if (s + 1 < un && rng.next_unit() < 0.5) {
        st.fd[s] = 1;
        fill_row(st.f[s], 1 + static_cast<int>(rng.next_u64() % 2));
      }
      for (std::size_t t = 0; t < un; ++t) {
        if (st.p[s][t] > 0.0 && rng.next_unit() < 0.3) cost.imp_exp[s][t] = rng.next_unit();
        if (st.fd[s] && st.f[s][t] > 0.0 && rng.next_unit() < 0.3)
          cost.imp_fd[s][t] = rng.next_unit();
      }
    }
    bool has_fd = false;
    for (char b : st.fd) has_fd = has_fd || b;
    if (!has_fd) continue;
    if (!validate(st, cost, true).empty()) continue;
    auto norm = normalize(st, cost);
    if (detect_infinite(norm)) continue;
    // the cost must be finite from every vertex, not just the initial one
    bool all_reach = true;
    DelayFunction d;
    for (std::size_t s = 0; s < norm.base.size(); ++s)
      if (norm.base.fd[s]) d.delays[static_cast<int>(s)] = 1.0 / st.rate;
    auto eval = evaluate_fdctmc(norm, d, 1e-9);
    for (const auto& x : eval.per_state) all_reach = all_reach && x.finite;
    if (!all_reach) continue;
    return m;
  }
}

// Uniform random delays on the original fd states, in [lo, hi].
inline fdctmc::DelayFunction random_delays(const fdctmc::FdCtmcStructure& st, fdctmc::Rng& rng,
                                           double lo = 0.05, double hi = 2.0) {
  fdctmc::DelayFunction d;
  for (int s : st.fd_state_list()) d.delays[s] = lo + (hi - lo) * rng.next_unit();
  return d;
}

}  // namespace fixtures

#endif
