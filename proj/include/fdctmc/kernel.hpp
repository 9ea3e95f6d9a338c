#ifndef FDCTMC_KERNEL_HPP
#define FDCTMC_KERNEL_HPP

#include <utility>
#include <vector>

#include "fdctmc/model.hpp"

namespace fdctmc {

/// Absorbing chain used for one-step transient analysis from a single entry
/// state: a fresh entry copy carries the entry state's outgoing rows, every
/// state of S' is absorbing and cost-free (so re-entering S' stops the step),
/// and the remaining keep states evolve as in the model.
struct SubordinatedChain {
  int source = -1;  // the S' state this chain analyzes
  int entry = -1;   // index of the fresh entry copy (== model size)
  int dim = 0;
  std::vector<std::vector<std::pair<int, double>>> p_rows;  // sparse rows
  std::vector<std::vector<std::pair<int, double>>> f_rows;
  std::vector<double> rate_cost;  // zero at absorbing states
  std::vector<double> jp;         // expected exp-impulse of the next transition
  std::vector<double> jf;         // expected fd-impulse of the next transition
  std::vector<char> absorbing;
};

struct PoissonTruncation {
  double lambda_d = 0.0;
  std::vector<double> terms;  // psi(0..I)
  double tail_bound = 0.0;    // mass beyond I
};

/// One-step distribution and accumulated cost of the embedded process, with a
/// certified absolute error bound on every probability and on the cost.
struct KernelRow {
  int source = -1;
  double delay = 0.0;  // infinity() for the exp-only action
  std::vector<std::pair<int, double>> probs;  // sparse over S', ascending state
  double cost = 0.0;
  double abs_error = 0.0;

  double prob_of(int state) const;
  double prob_sum() const;
};

SubordinatedChain build_subordinated(const NormalizedModel& model, int s);

/// Poisson point masses for parameter lambda_d, truncated so the omitted tail
/// is below theta/2. Stable for lambda_d up to at least 1e4.
PoissonTruncation poisson_terms(double lambda_d, double theta);

/// Row for a reset state under timeout d, via uniformized transient analysis
/// of the subordinated chain; abs_error <= theta/2.
KernelRow kernel_row(const NormalizedModel& model, int s, double d, double theta);

/// Same, reusing a prebuilt chain for s.
KernelRow kernel_row(const NormalizedModel& model, const SubordinatedChain& chain, double d,
                     double theta);

/// Row for a non-fd state: one exponential step; exact, abs_error = 0.
KernelRow kernel_row_exp(const NormalizedModel& model, int s);

/// Rounds the cost up to a multiple of kappa and the probabilities onto the
/// kappa grid: entries other than the largest are rounded up while the total
/// absorbed by the largest stays within kappa, the largest takes the slack so
/// the row sums to exactly 1, zeros stay zero.
KernelRow round_row(const KernelRow& row, double kappa);

}  // namespace fdctmc

#endif
