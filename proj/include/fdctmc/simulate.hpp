#ifndef FDCTMC_SIMULATE_HPP
#define FDCTMC_SIMULATE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fdctmc/model.hpp"

namespace fdctmc {

/// xoshiro256** seeded through splitmix64. Fully specified here so traces
/// replay bit-identically on any platform; per-run streams come from mixing
/// the seed with the run index.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng for_run(std::uint64_t seed, std::uint64_t run_index);

  std::uint64_t next_u64();
  double next_unit();                 // [0, 1), 53-bit resolution
  double exponential(double rate);    // inverse transform
  int pick(const std::vector<double>& weights);  // cdf scan, weights sum ~1

 private:
  std::uint64_t s_[4];
};

enum class StepKind { exp_delay, fixed_delay };

struct TraceStep {
  int state;
  double remaining_delay;  // infinity when no timeout is armed
  double sojourn;
  StepKind kind;
};

struct RunSample {
  std::vector<TraceStep> trace;
  double total_cost = 0.0;
  std::optional<int> hit_goal;
  bool truncated = false;
};

struct SimEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n = 0;
  double truncated_fraction = 0.0;
};

RunSample sample_run(const FdCtmcStructure& structure, const CostStructure& cost,
                     const DelayFunction& d, std::uint64_t seed, long max_steps = 1000000);

SimEstimate estimate_cost(const FdCtmcStructure& structure, const CostStructure& cost,
                          const DelayFunction& d, long n, std::uint64_t seed,
                          long max_steps = 1000000);

std::map<int, SimEstimate> estimate_reach(const FdCtmcStructure& structure,
                                          const CostStructure& cost, const DelayFunction& d,
                                          long n, std::uint64_t seed, long max_steps = 1000000);

}  // namespace fdctmc

#endif
