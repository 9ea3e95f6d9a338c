#include "fdctmc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdctmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double exp_or_inf(double ln) { return ln > 709.0 ? kInf : std::exp(ln); }

std::size_t fd_count(const NormalizedModel& model) {
  std::size_t k = 0;
  for (char b : model.base.fd) k += b != 0;
  return k;
}

DelayFunction constant_delays(const FdCtmcStructure& st, double d) {
  DelayFunction out;
  // written against the normalized structure itself; lift_delays is bypassed
  // by assigning reset states directly
  for (std::size_t s = 0; s < st.size(); ++s)
    if (st.fd[s]) out.delays[static_cast<int>(s)] = d;
  return out;
}

}  // namespace

std::pair<double, double> d1_d2(const NormalizedModel& model, const ModelConstants& c) {
  double lambda = model.base.rate;
  double d1 = std::max(lambda, 2.0 * (lambda + 1.0) * c.max_rate);
  double n = double(model.base.size());
  // |S| e^{|S|} / (minP^{|S|} min{1,lambda} min{1,minR}), in the log domain
  double ln_d2 = std::log(n) + n - n * std::log(c.min_prob) -
                 std::log(std::min(1.0, lambda)) - std::log(std::min(1.0, c.min_rate));
  return {d1, exp_or_inf(ln_d2)};
}

double theoretical_M(const NormalizedModel& model, const ModelConstants& c) {
  double lambda = model.base.rate;
  double n = double(model.base.size());
  double nfd = double(fd_count(model));
  double nprime = double(model.mdp_states.size());
  double ln = std::log(nprime) + std::log(nfd / lambda + nfd + 1.0) + std::log(c.max_rate) -
              n * n * (std::log(c.min_prob) - 1.0);
  return exp_or_inf(ln);
}

VmaxEstimate estimate_vmax(const NormalizedModel& model, const ModelConstants& c,
                           const std::vector<DelayFunction>& extra_heuristics, double theta) {
  std::vector<std::pair<DelayFunction, double>> candidates;
  double base = 1.0 / model.base.rate;
  candidates.push_back({constant_delays(model.base, base), base});
  for (const auto& d : extra_heuristics) candidates.push_back({d, 0.0});

  VmaxEstimate best;
  best.value = kInf;
  for (const auto& [d, tag] : candidates) {
    // delays here are written against normalized states already
    Dtmdp mdp;
    try {
      mdp = build_single_strategy_mdp(model, d, theta);
    } catch (const ModelError&) {
      continue;  // candidate does not cover all reset states
    }
    Strategy sigma;
    sigma.choice.assign(mdp.vertex_count(), -1);
    for (std::size_t v = 0; v < mdp.vertex_count(); ++v)
      if (!mdp.goal[v]) sigma.choice[v] = 0;
    EvalResult eval = evaluate_strategy(mdp, sigma);
    double worst = 0.0;
    for (const auto& x : eval.cost) {
      if (!x.finite) {
        worst = kInf;
        break;
      }
      worst = std::max(worst, x.value);
    }
    if (worst < best.value) {
      best.value = worst;
      best.source = VmaxSource::heuristic;
      best.heuristic_delay = tag;
    }
  }
  if (!std::isfinite(best.value)) {
    best.value = theoretical_M(model, c);
    best.source = VmaxSource::theoretical;
    best.heuristic_delay = 0.0;
  }
  return best;
}

double big_N(const NormalizedModel& model, const ModelConstants& c, double vmax) {
  double lambda = model.base.rate;
  double core = vmax + c.max_rate * (2.0 + 2.0 / lambda) * lambda;
  return core * core * 16.0 * lambda * lambda / (c.min_rate * c.min_rate * c.min_prob);
}

DiscretizationParams unconstrained_params(const NormalizedModel& model, const ModelConstants& c,
                                          double epsilon, const VmaxEstimate& vmax) {
  if (!(epsilon > 0.0)) throw InfeasibleParamsError("epsilon must be positive");
  if (!std::isfinite(vmax.value))
    throw InfeasibleParamsError("the value bound is infinite; supply a heuristic vmax");
  auto [d1, d2] = d1_d2(model, c);
  double n_bound = big_N(model, c, vmax.value);
  double nprime = double(model.mdp_states.size());
  double v1 = 1.0 + vmax.value;

  DiscretizationParams p;
  p.epsilon = epsilon;
  p.vmax = vmax.value;
  p.vmax_source = vmax.source;
  p.alpha = epsilon * epsilon / (64.0 * n_bound * nprime * v1 * v1);
  p.delta = p.alpha / d1;
  p.kappa = epsilon * p.delta * c.min_rate / (2.0 * nprime * v1 * v1);
  double d_max = std::fabs(std::log(p.alpha)) * d2 * (vmax.value + epsilon);
  if (!(p.alpha > 0.0) || !(p.delta > 0.0) || !(p.kappa > 0.0) || !std::isfinite(d_max))
    throw InfeasibleParamsError(
        "theoretical parameters underflow double precision; increase epsilon or use the "
        "heuristic vmax");
  p.d_max = std::ceil(d_max / p.delta) * p.delta;  // snapped up onto the mesh
  if (!std::isfinite(p.d_max))
    throw InfeasibleParamsError("d_max overflows double precision; increase epsilon");
  return p;
}

PoBounds po_bound_B(const NormalizedModel& model, const ModelConstants& c, double d_min,
                    double d_max) {
  if (!(d_min > 0.0) || !(d_max >= d_min))
    throw InfeasibleParamsError("need 0 < d_min <= d_max");
  double lambda = model.base.rate;
  double n = double(model.base.size());
  double nfd = std::max(1.0, double(fd_count(model)));
  double n_nonfd = n - double(fd_count(model));
  double nprime = double(model.mdp_states.size());

  double ln_prefactor = n * (std::log(nfd) - std::log(c.min_prob) -
                             std::log(std::min(1.0, lambda * d_min))) +
                        lambda * d_max * n_nonfd;
  PoBounds b;
  b.b_steps = exp_or_inf(ln_prefactor + std::log(nprime));
  double one_step = (std::max(1.0 / lambda, d_max * lambda + d_max) + 1.0);
  b.b_cost = exp_or_inf(ln_prefactor + std::log(one_step) + std::log(nprime) +
                        std::log(c.max_rate));
  double ln_b = std::log(8.0) + 2.0 * ln_prefactor + std::log(one_step) +
                3.0 * std::log(nprime) + std::log(c.max_rate);
  b.b = exp_or_inf(ln_b);
  return b;
}

DiscretizationParams po_params(const NormalizedModel& model, const ModelConstants& c,
                               double epsilon, double d_min, double d_max) {
  if (!(epsilon > 0.0)) throw InfeasibleParamsError("epsilon must be positive");
  PoBounds b = po_bound_B(model, c, d_min, d_max);
  auto [d1, d2] = d1_d2(model, c);
  (void)d2;
  DiscretizationParams p;
  p.epsilon = epsilon;
  p.d_min = d_min;
  p.d_max = d_max;
  p.alpha = epsilon / b.b;
  p.delta = p.alpha / d1;
  p.kappa = p.alpha * p.alpha;
  if (!(p.alpha > 0.0) || !(p.delta > 0.0) || !(p.kappa > 0.0))
    throw InfeasibleParamsError(
        "partial-observation parameters underflow double precision; supply delta/kappa "
        "overrides");
  return p;
}

}  // namespace fdctmc
