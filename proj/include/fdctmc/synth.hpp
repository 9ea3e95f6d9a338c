#ifndef FDCTMC_SYNTH_HPP
#define FDCTMC_SYNTH_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fdctmc/bounds.hpp"
#include "fdctmc/mdp.hpp"
#include "fdctmc/model.hpp"

namespace fdctmc {

/// User-scaled replacements for the theoretical discretization parameters.
/// Any override voids the epsilon guarantee; the report says so.
struct SynthOverrides {
  std::optional<double> delta;
  std::optional<double> d_max;
  std::optional<double> kappa;  // 0 disables rounding
  std::optional<double> vmax;
  bool use_theoretical_vmax = false;
  double theta = 1e-9;               // kernel truncation when kappa is 0
  std::size_t action_cap = 1000000;  // total kernel rows across the MDP
  std::size_t strategy_cap = 10000000;
};

struct SynthesisReport {
  DelayFunction delays;  // on original states
  ExtReal value;
  DiscretizationParams params;
  std::size_t mdp_vertices = 0;
  std::size_t mdp_actions = 0;
  std::size_t strategies_evaluated = 0;  // partial observation only
  bool guarantee = false;                // epsilon bound follows from the theory
  std::vector<std::string> notes;
};

/// Discretized MDP over S': reset vertices get every mesh action
/// {k delta : k >= 1, lower <= k delta <= upper} (endpoints inclusive), other
/// non-goal vertices the exp-only action; rows are computed to error kappa/2
/// and rounded onto the kappa grid (kappa 0 skips rounding, theta drives the
/// truncation instead).
Dtmdp discretize_mdp(const NormalizedModel& model, double delta, double kappa, double lower,
                     double upper, double theta = 1e-9, std::size_t action_cap = 1000000);

SynthesisReport synth_unconstrained(const NormalizedModel& model, const ModelConstants& c,
                                    double epsilon, const SynthOverrides& overrides = {});

SynthesisReport synth_partial_obs(const NormalizedModel& model, const ModelConstants& c,
                                  const ObservationRelation& equiv, double d_min, double d_max,
                                  double epsilon, const SynthOverrides& overrides = {});

enum class ThresholdAnswer { above, below };

ThresholdAnswer check_threshold(const NormalizedModel& model, const ModelConstants& c,
                                const ObservationRelation& equiv, double d_min, double d_max,
                                double epsilon, double x, const SynthOverrides& overrides = {});

/// Checks a candidate delay function against a cost threshold by building only
/// the kernel rows the candidate uses. The candidate must respect the bounds,
/// the mesh (delta from overrides, else derived from epsilon) and the
/// observation classes.
bool verify_certificate(const NormalizedModel& model, const ModelConstants& c,
                        const ObservationRelation& equiv, double d_min, double d_max,
                        const DelayFunction& candidate, double x, double epsilon,
                        const SynthOverrides& overrides = {});

}  // namespace fdctmc

#endif
