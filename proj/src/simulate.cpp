#include "fdctmc/simulate.hpp"

#include <cmath>
#include <limits>

namespace fdctmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// One transition of the alarm-clock semantics, shared by the trace-recording
// and the estimation paths.
template <typename Sink>
RunSample run_core(const FdCtmcStructure& st, const CostStructure& cost, const DelayFunction& d,
                   Rng rng, long max_steps, Sink&& sink) {
  RunSample out;
  int s = st.init;
  double rem = st.is_fd(s) && d.has(s) ? d.at(s) : kInf;
  if (st.is_fd(s) && !d.has(s)) throw ModelError("delay function does not cover the initial state");

  for (long step = 0; step < max_steps; ++step) {
    double t_exp = rng.exponential(st.rate);
    int next;
    double sojourn;
    StepKind kind;
    double next_rem;
    auto us = static_cast<std::size_t>(s);
    if (t_exp < rem) {
      kind = StepKind::exp_delay;
      sojourn = t_exp;
      next = rng.pick(st.p[us]);
      auto un = static_cast<std::size_t>(next);
      out.total_cost += sojourn * cost.rate_cost[us] + cost.imp_exp[us][un];
      if (st.fd[un] && st.fd[us])
        next_rem = rem - t_exp;  // the running alarm is inherited
      else if (st.fd[un]) {
        if (!d.has(next)) throw ModelError("delay function does not cover a reset state");
        next_rem = d.at(next);
      } else {
        next_rem = kInf;
      }
    } else {
      kind = StepKind::fixed_delay;
      sojourn = rem;
      next = rng.pick(st.f[us]);
      auto un = static_cast<std::size_t>(next);
      out.total_cost += sojourn * cost.rate_cost[us] + cost.imp_fd[us][un];
      if (st.fd[un]) {
        if (!d.has(next)) throw ModelError("delay function does not cover a reset state");
        next_rem = d.at(next);
      } else {
        next_rem = kInf;
      }
    }
    sink(TraceStep{s, rem, sojourn, kind});
    s = next;
    rem = next_rem;
    if (cost.is_goal(s)) {
      out.hit_goal = s;
      return out;
    }
  }
  out.truncated = true;
  return out;
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

Rng Rng::for_run(std::uint64_t seed, std::uint64_t run_index) {
  std::uint64_t x = seed;
  std::uint64_t mixed = splitmix64(x) ^ (run_index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return Rng(mixed);
}

std::uint64_t Rng::next_u64() {
  std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log1p(-next_unit()) / rate; }

int Rng::pick(const std::vector<double>& weights) {
  double u = next_unit();
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  if (last_positive < 0) throw ModelError("cannot sample from an all-zero row");
  return last_positive;
}

RunSample sample_run(const FdCtmcStructure& st, const CostStructure& cost, const DelayFunction& d,
                     std::uint64_t seed, long max_steps) {
  std::vector<TraceStep> trace;
  RunSample out = run_core(st, cost, d, Rng(seed), max_steps,
                           [&](const TraceStep& step) { trace.push_back(step); });
  out.trace = std::move(trace);
  return out;
}

SimEstimate estimate_cost(const FdCtmcStructure& st, const CostStructure& cost,
                          const DelayFunction& d, long n, std::uint64_t seed, long max_steps) {
  if (n < 1) throw ModelError("need at least one run");
  SimEstimate est;
  long truncated = 0;
  double mean = 0.0, m2 = 0.0;
  long kept = 0;
  for (long i = 0; i < n; ++i) {
    RunSample run = run_core(st, cost, d, Rng::for_run(seed, static_cast<std::uint64_t>(i)),
                             max_steps, [](const TraceStep&) {});
    if (run.truncated) {
      ++truncated;
      continue;
    }
    ++kept;
    double delta = run.total_cost - mean;
    mean += delta / double(kept);
    m2 += delta * (run.total_cost - mean);
  }
  est.n = n;
  est.truncated_fraction = double(truncated) / double(n);
  est.mean = mean;
  est.std_error = kept > 1 ? std::sqrt(m2 / double(kept - 1) / double(kept)) : 0.0;
  return est;
}

std::map<int, SimEstimate> estimate_reach(const FdCtmcStructure& st, const CostStructure& cost,
                                          const DelayFunction& d, long n, std::uint64_t seed,
                                          long max_steps) {
  if (n < 1) throw ModelError("need at least one run");
  std::map<int, long> hits;
  for (int g : cost.goal_list()) hits[g] = 0;
  long truncated = 0;
  for (long i = 0; i < n; ++i) {
    RunSample run = run_core(st, cost, d, Rng::for_run(seed, static_cast<std::uint64_t>(i)),
                             max_steps, [](const TraceStep&) {});
    if (run.truncated) ++truncated;
    else if (run.hit_goal) ++hits[*run.hit_goal];
  }
  std::map<int, SimEstimate> out;
  for (const auto& [g, h] : hits) {
    SimEstimate est;
    est.n = n;
    est.truncated_fraction = double(truncated) / double(n);
    est.mean = double(h) / double(n);
    est.std_error = std::sqrt(est.mean * (1.0 - est.mean) / double(n));
    out[g] = est;
  }
  return out;
}

}  // namespace fdctmc
