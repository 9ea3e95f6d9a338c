#ifndef FDCTMC_BOUNDS_HPP
#define FDCTMC_BOUNDS_HPP

#include <optional>
#include <string>
#include <vector>

#include "fdctmc/mdp.hpp"
#include "fdctmc/model.hpp"

namespace fdctmc {

/// Raised when the theoretical discretization parameters leave the range of
/// double precision; caller-supplied overrides are then the only way forward.
class InfeasibleParamsError : public std::runtime_error {
 public:
  explicit InfeasibleParamsError(const std::string& message) : std::runtime_error(message) {}
};

enum class VmaxSource { theoretical, heuristic };

struct VmaxEstimate {
  double value = 0.0;
  VmaxSource source = VmaxSource::heuristic;
  double heuristic_delay = 0.0;  // the constant delay that won, when heuristic
};

struct DiscretizationParams {
  double alpha = 0.0;
  double delta = 0.0;
  double d_max = 0.0;
  std::optional<double> d_min;  // partial-observation synthesis only
  double kappa = 0.0;
  double vmax = 0.0;
  VmaxSource vmax_source = VmaxSource::heuristic;
  double epsilon = 0.0;
};

/// Mesh-density constants: delta = alpha / D1 keeps one-step probabilities and
/// costs within alpha of any target delay; D2 scales the delay horizon.
std::pair<double, double> d1_d2(const NormalizedModel& model, const ModelConstants& c);

/// Worst-case bound on the per-state optimal expected cost. May be the
/// infinity marker on larger models; that is the expected regime.
double theoretical_M(const NormalizedModel& model, const ModelConstants& c);

/// Evaluates max-per-state cost for each candidate constant-delay heuristic
/// (1/lambda by default, plus extras, written against normalized states) and
/// keeps the smallest; falls back to the theoretical bound if every candidate
/// comes out infinite.
VmaxEstimate estimate_vmax(const NormalizedModel& model, const ModelConstants& c,
                           const std::vector<DelayFunction>& extra_heuristics = {},
                           double theta = 1e-9);

/// Step-versus-cost proportionality constant of the well-behaved strategies.
double big_N(const NormalizedModel& model, const ModelConstants& c, double vmax);

DiscretizationParams unconstrained_params(const NormalizedModel& model, const ModelConstants& c,
                                          double epsilon, const VmaxEstimate& vmax);

struct PoBounds {
  double b_steps = 0.0;
  double b_cost = 0.0;
  double b = 0.0;  // 8 * b_cost * b_steps * |S'|
};

PoBounds po_bound_B(const NormalizedModel& model, const ModelConstants& c, double d_min,
                    double d_max);

DiscretizationParams po_params(const NormalizedModel& model, const ModelConstants& c,
                               double epsilon, double d_min, double d_max);

}  // namespace fdctmc

#endif
