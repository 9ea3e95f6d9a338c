#include "fdctmc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fdctmc {

namespace {

struct Mesh {
  long k_lo = 0;
  long k_hi = -1;
  double delta = 0.0;
  std::size_t size() const { return k_lo > k_hi ? 0 : static_cast<std::size_t>(k_hi - k_lo + 1); }
};

Mesh make_mesh(double delta, double lower, double upper) {
  if (!(delta > 0.0)) throw InfeasibleParamsError("mesh step must be positive");
  Mesh m;
  m.delta = delta;
  m.k_lo = std::max(1L, static_cast<long>(std::ceil(lower / delta - 1e-9)));
  m.k_hi = static_cast<long>(std::floor(upper / delta + 1e-9));
  return m;
}

void require_valid_for_synthesis(const NormalizedModel& model) {
  auto diags = validate(model.base, model.cost, true);
  if (!diags.empty())
    throw ModelError("model not fit for synthesis: " + diags.front().message + " (" +
                     diags.front().location + ")");
}

Strategy all_zero_strategy(const Dtmdp& mdp) {
  Strategy sigma;
  sigma.choice.assign(mdp.vertex_count(), -1);
  for (std::size_t v = 0; v < mdp.vertex_count(); ++v)
    if (!mdp.goal[v]) sigma.choice[v] = 0;
  return sigma;
}

std::vector<int> original_fd_states(const NormalizedModel& model) {
  std::set<int> out;
  for (std::size_t v = 0; v < model.base.size(); ++v)
    if (model.base.fd[v]) out.insert(model.lift[v]);
  return {out.begin(), out.end()};
}

// Completes the observation classes to a partition of the original fd states
// and validates them; returns per-original-state class ids.
std::vector<std::vector<int>> complete_classes(const NormalizedModel& model,
                                               const ObservationRelation& equiv) {
  auto fd_orig = original_fd_states(model);
  std::set<int> fd_set(fd_orig.begin(), fd_orig.end());
  std::set<int> covered;
  std::vector<std::vector<int>> classes;
  for (const auto& cls : equiv.classes) {
    if (cls.empty()) throw ModelError("empty observation class");
    for (int s : cls) {
      if (!fd_set.count(s)) throw ModelError("observation class contains a non-fd state");
      if (!covered.insert(s).second) throw ModelError("state in two observation classes");
    }
    classes.push_back(cls);
    std::sort(classes.back().begin(), classes.back().end());
  }
  for (int s : fd_orig)
    if (!covered.count(s)) classes.push_back({s});
  std::sort(classes.begin(), classes.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) { return a[0] < b[0]; });
  return classes;
}

DiscretizationParams params_from_overrides(double epsilon, double delta, double d_max,
                                           double kappa, std::optional<double> d_min) {
  DiscretizationParams p;
  p.epsilon = epsilon;
  p.alpha = 0.0;
  p.delta = delta;
  p.d_max = d_max;
  p.d_min = d_min;
  p.kappa = kappa;
  p.vmax = std::numeric_limits<double>::quiet_NaN();
  return p;
}

}  // namespace

Dtmdp discretize_mdp(const NormalizedModel& model, double delta, double kappa, double lower,
                     double upper, double theta, std::size_t action_cap) {
  if (!(lower <= upper)) throw InfeasibleParamsError("mesh bounds out of order");
  Mesh mesh = make_mesh(delta, lower, upper);

  Dtmdp mdp;
  std::size_t m = model.base.size();
  mdp.state_vertex.assign(m, -1);
  for (int s : model.mdp_states) {
    mdp.state_vertex[static_cast<std::size_t>(s)] = static_cast<int>(mdp.vertex_state.size());
    mdp.vertex_state.push_back(s);
  }
  std::size_t n = mdp.vertex_state.size();
  mdp.goal.assign(n, 0);
  mdp.actions.resize(n);
  mdp.rows.resize(n);
  mdp.init = mdp.state_vertex[static_cast<std::size_t>(model.base.init)];

  std::size_t reset_count = 0, exp_count = 0;
  for (std::size_t v = 0; v < n; ++v) {
    int s = mdp.vertex_state[v];
    if (model.cost.is_goal(s)) continue;
    if (model.is_reset(s)) ++reset_count;
    else ++exp_count;
  }
  if (reset_count > 0 && mesh.size() == 0)
    throw InfeasibleParamsError("action mesh is empty: no multiple of delta lies in [" +
                                std::to_string(lower) + ", " + std::to_string(upper) + "]");
  std::size_t total = reset_count * mesh.size() + exp_count;
  if (total > action_cap)
    throw InfeasibleParamsError("discretized MDP needs " + std::to_string(total) +
                                " actions; raise the action cap to at least that");

  double row_theta = kappa > 0.0 ? kappa : theta;
  for (std::size_t v = 0; v < n; ++v) {
    int s = mdp.vertex_state[v];
    if (model.cost.is_goal(s)) {
      mdp.goal[v] = 1;
      continue;
    }
    if (model.is_reset(s)) {
      SubordinatedChain chain = build_subordinated(model, s);
      mdp.actions[v].reserve(mesh.size());
      mdp.rows[v].reserve(mesh.size());
      for (long k = mesh.k_lo; k <= mesh.k_hi; ++k) {
        double d = double(k) * mesh.delta;
        KernelRow row = kernel_row(model, chain, d, row_theta);
        if (kappa > 0.0) row = round_row(row, kappa);
        mdp.actions[v].push_back({d, k, false});
        mdp.rows[v].push_back(std::move(row));
      }
    } else {
      KernelRow row = kernel_row_exp(model, s);
      if (kappa > 0.0) row = round_row(row, kappa);
      mdp.actions[v].push_back({0.0, 0, true});
      mdp.rows[v].push_back(std::move(row));
    }
  }
  return mdp;
}

SynthesisReport synth_unconstrained(const NormalizedModel& model, const ModelConstants& c,
                                    double epsilon, const SynthOverrides& overrides) {
  require_valid_for_synthesis(model);
  SynthesisReport report;
  report.params.epsilon = epsilon;

  if (detect_infinite(model)) {
    report.value = ExtReal::infinite();
    report.notes.push_back("a goal-free bottom component is reachable; the cost is infinite "
                           "under every delay function");
    return report;
  }

  VmaxEstimate vmax;
  if (overrides.vmax) {
    vmax.value = *overrides.vmax;
    vmax.source = VmaxSource::heuristic;
    report.notes.push_back("vmax supplied by the caller; the epsilon bound is not certified");
  } else if (overrides.use_theoretical_vmax) {
    vmax.value = theoretical_M(model, c);
    vmax.source = VmaxSource::theoretical;
  } else {
    vmax = estimate_vmax(model, c, {}, overrides.theta);
  }

  bool overridden = overrides.delta || overrides.d_max || overrides.kappa || overrides.vmax;
  DiscretizationParams params;
  try {
    params = unconstrained_params(model, c, epsilon, vmax);
  } catch (const InfeasibleParamsError&) {
    if (!(overrides.delta && overrides.d_max))
      throw;
    params = params_from_overrides(epsilon, *overrides.delta, *overrides.d_max,
                                   overrides.kappa.value_or(0.0), std::nullopt);
    params.vmax = vmax.value;
    params.vmax_source = vmax.source;
  }
  if (overrides.delta) params.delta = *overrides.delta;
  if (overrides.d_max) params.d_max = *overrides.d_max;
  if (overrides.kappa) params.kappa = *overrides.kappa;
  report.params = params;
  report.guarantee = !overridden;
  if (overridden)
    report.notes.push_back("mesh overrides in effect; the result is best-effort on the "
                           "given mesh");

  Dtmdp mdp = discretize_mdp(model, params.delta, params.kappa, params.delta, params.d_max,
                             overrides.theta, overrides.action_cap);
  report.mdp_vertices = mdp.vertex_count();
  report.mdp_actions = mdp.action_count();

  auto [sigma, value] = optimal_strategy(mdp);
  report.value = value;

  Mesh mesh = make_mesh(params.delta, params.delta, params.d_max);
  for (std::size_t v = 0; v < mdp.vertex_count(); ++v) {
    int s = mdp.vertex_state[v];
    if (mdp.goal[v] || !model.is_reset(s)) continue;
    const Action& a = mdp.actions[v][static_cast<std::size_t>(sigma.choice[v])];
    report.delays.delays[model.lift[static_cast<std::size_t>(s)]] = a.delay;
  }
  // fd states that are only ever entered with a running timeout never consult
  // their delay; give them the lowest mesh point so the function is total
  for (int orig : original_fd_states(model)) {
    if (!report.delays.has(orig) && mesh.size() > 0)
      report.delays.delays[orig] = double(mesh.k_lo) * mesh.delta;
  }
  return report;
}

SynthesisReport synth_partial_obs(const NormalizedModel& model, const ModelConstants& c,
                                  const ObservationRelation& equiv, double d_min, double d_max,
                                  double epsilon, const SynthOverrides& overrides) {
  require_valid_for_synthesis(model);
  if (!(d_min > 0.0) || !(d_min <= d_max))
    throw InfeasibleParamsError("need 0 < d_min <= d_max");

  SynthesisReport report;
  report.params.epsilon = epsilon;
  if (detect_infinite(model)) {
    report.value = ExtReal::infinite();
    report.notes.push_back("a goal-free bottom component is reachable; the cost is infinite "
                           "under every delay function");
    return report;
  }

  bool overridden = overrides.delta || overrides.kappa;
  DiscretizationParams params;
  try {
    params = po_params(model, c, epsilon, d_min, d_max);
  } catch (const InfeasibleParamsError&) {
    if (!overrides.delta) throw;
    params = params_from_overrides(epsilon, *overrides.delta, d_max,
                                   overrides.kappa.value_or(0.0), d_min);
  }
  if (overrides.delta) params.delta = *overrides.delta;
  if (overrides.kappa) params.kappa = *overrides.kappa;
  params.d_min = d_min;
  params.d_max = d_max;
  report.params = params;
  report.guarantee = !overridden;
  if (overridden)
    report.notes.push_back("mesh overrides in effect; the result is best-effort on the "
                           "given mesh");

  Dtmdp mdp = discretize_mdp(model, params.delta, params.kappa, d_min, d_max, overrides.theta,
                             overrides.action_cap);
  report.mdp_vertices = mdp.vertex_count();
  report.mdp_actions = mdp.action_count();

  auto classes = complete_classes(model, equiv);
  std::map<int, std::size_t> class_of;  // original state -> class index
  for (std::size_t ci = 0; ci < classes.size(); ++ci)
    for (int s : classes[ci]) class_of[s] = ci;

  // group the acting (reset) vertices by observation class
  std::vector<std::vector<std::size_t>> members(classes.size());
  for (std::size_t v = 0; v < mdp.vertex_count(); ++v) {
    int s = mdp.vertex_state[v];
    if (mdp.goal[v] || !model.is_reset(s)) continue;
    members[class_of.at(model.lift[static_cast<std::size_t>(s)])].push_back(v);
  }
  std::vector<std::size_t> acting;  // classes that control at least one vertex
  for (std::size_t ci = 0; ci < classes.size(); ++ci)
    if (!members[ci].empty()) acting.push_back(ci);

  Mesh mesh = make_mesh(params.delta, d_min, d_max);
  std::size_t mesh_size = mesh.size();

  double count_f = 1.0;
  for (std::size_t i = 0; i < acting.size(); ++i) count_f *= double(mesh_size);
  if (!(count_f <= double(overrides.strategy_cap)))
    throw InfeasibleParamsError("partial-observation enumeration needs " +
                                std::to_string(count_f) +
                                " strategies; coarsen delta or raise the strategy cap");

  Strategy sigma = all_zero_strategy(mdp);
  std::vector<std::size_t> odo(acting.size(), 0);
  std::vector<std::size_t> best_odo;
  ExtReal best = ExtReal::infinite();
  bool have_best = false;
  std::size_t evaluated = 0;
  while (true) {
    for (std::size_t i = 0; i < acting.size(); ++i)
      for (std::size_t v : members[acting[i]]) sigma.choice[v] = static_cast<int>(odo[i]);
    EvalResult eval = evaluate_strategy(mdp, sigma);
    ExtReal val = eval.cost[static_cast<std::size_t>(mdp.init)];
    ++evaluated;
    bool better = !have_best || (val.finite && !best.finite) ||
                  (val.finite && best.finite && val.value < best.value);
    if (better) {
      best = val;
      best_odo = odo;
      have_best = true;
    }
    // lexicographic odometer, last class fastest
    std::size_t pos = acting.size();
    while (pos > 0) {
      --pos;
      if (++odo[pos] < mesh_size) break;
      odo[pos] = 0;
      if (pos == 0) {
        pos = SIZE_MAX;
        break;
      }
    }
    if (acting.empty() || pos == SIZE_MAX) break;
  }

  report.strategies_evaluated = evaluated;
  report.value = best;
  for (std::size_t ci = 0; ci < classes.size() && mesh_size > 0; ++ci) {
    double d = double(mesh.k_lo) * mesh.delta;  // classes that never act
    for (std::size_t i = 0; i < acting.size(); ++i)
      if (acting[i] == ci) d = double(mesh.k_lo + static_cast<long>(best_odo[i])) * mesh.delta;
    for (int s : classes[ci]) report.delays.delays[s] = d;
  }
  return report;
}

ThresholdAnswer check_threshold(const NormalizedModel& model, const ModelConstants& c,
                                const ObservationRelation& equiv, double d_min, double d_max,
                                double epsilon, double x, const SynthOverrides& overrides) {
  SynthesisReport report = synth_partial_obs(model, c, equiv, d_min, d_max, epsilon, overrides);
  if (!report.value.finite) return ThresholdAnswer::above;
  return report.value.value > x ? ThresholdAnswer::above : ThresholdAnswer::below;
}

bool verify_certificate(const NormalizedModel& model, const ModelConstants& c,
                        const ObservationRelation& equiv, double d_min, double d_max,
                        const DelayFunction& candidate, double x, double epsilon,
                        const SynthOverrides& overrides) {
  require_valid_for_synthesis(model);
  DiscretizationParams params;
  if (overrides.delta) {
    params = params_from_overrides(epsilon, *overrides.delta, d_max,
                                   overrides.kappa.value_or(0.0), d_min);
  } else {
    params = po_params(model, c, epsilon, d_min, d_max);
    if (overrides.kappa) params.kappa = *overrides.kappa;
  }

  auto classes = complete_classes(model, equiv);
  for (const auto& cls : classes) {
    double ref = 0.0;
    bool first = true;
    for (int s : cls) {
      if (!candidate.has(s)) throw ModelError("candidate does not assign every fd state");
      double d = candidate.at(s);
      if (d < d_min - 1e-9 || d > d_max + 1e-9)
        throw ModelError("candidate delay outside [d_min, d_max]");
      double k = d / params.delta;
      if (std::fabs(k - std::round(k)) > 1e-6 * std::max(1.0, k))
        throw ModelError("candidate delay is not on the mesh");
      if (first) {
        ref = d;
        first = false;
      } else if (d != ref) {
        throw ModelError("candidate violates the observation classes");
      }
    }
  }

  // only the fragment the candidate uses is built: one row per vertex
  DelayFunction lifted = lift_delays(candidate, model);
  double row_theta = params.kappa > 0.0 ? params.kappa : overrides.theta;
  Dtmdp mdp = build_single_strategy_mdp(model, lifted, row_theta);
  if (params.kappa > 0.0) {
    for (auto& rows : mdp.rows)
      for (auto& row : rows) row = round_row(row, params.kappa);
  }
  Strategy sigma = all_zero_strategy(mdp);
  EvalResult eval = evaluate_strategy(mdp, sigma);
  ExtReal val = eval.cost[static_cast<std::size_t>(mdp.init)];
  return val.finite && val.value < x;
}

}  // namespace fdctmc
