#include "fdctmc.h"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "fdctmc/bounds.hpp"
#include "fdctmc/mdp.hpp"
#include "fdctmc/model.hpp"
#include "fdctmc/report.hpp"
#include "fdctmc/satgen.hpp"
#include "fdctmc/simulate.hpp"
#include "fdctmc/synth.hpp"

struct fdc_model {
  fdctmc::ParsedModel parsed;
};

struct fdc_report {
  fdctmc::Report report;
  std::string kv_cache;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

fdc_status run_guarded(fdc_report** out, const std::function<fdctmc::Report()>& body) {
  if (out == nullptr) {
    set_error("output handle is null");
    return FDC_ERR_USAGE;
  }
  *out = nullptr;
  try {
    auto* rep = new fdc_report{body(), {}};
    rep->kv_cache = rep->report.kv_block();
    *out = rep;
    return FDC_OK;
  } catch (const fdctmc::ParseError& e) {
    set_error(e.what());
    return FDC_ERR_MODEL;
  } catch (const fdctmc::InfeasibleParamsError& e) {
    set_error(e.what());
    return FDC_ERR_INFEASIBLE;
  } catch (const fdctmc::ModelError& e) {
    set_error(e.what());
    return FDC_ERR_MODEL;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return FDC_ERR_USAGE;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return FDC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FDC_ERR_INTERNAL;
  }
}

const fdctmc::ParsedModel& need_model(const fdc_model* model) {
  if (model == nullptr) throw std::invalid_argument("model handle is null");
  return model->parsed;
}

fdc_options options_or_default(const fdc_options* opts) {
  fdc_options o;
  fdc_options_init(&o);
  if (opts != nullptr) o = *opts;
  return o;
}

fdctmc::SynthOverrides overrides_of(const fdc_options& o) {
  fdctmc::SynthOverrides ov;
  if (o.delta >= 0.0) ov.delta = o.delta;
  if (o.dmax >= 0.0) ov.d_max = o.dmax;
  if (o.kappa >= 0.0) ov.kappa = o.kappa;
  if (o.vmax >= 0.0) ov.vmax = o.vmax;
  ov.use_theoretical_vmax = o.use_theoretical_vmax != 0;
  ov.theta = o.theta > 0.0 ? o.theta : 1e-9;
  if (o.action_cap > 0) ov.action_cap = static_cast<std::size_t>(o.action_cap);
  if (o.strategy_cap > 0) ov.strategy_cap = static_cast<std::size_t>(o.strategy_cap);
  return ov;
}

const char* source_name(fdctmc::VmaxSource s) {
  return s == fdctmc::VmaxSource::theoretical ? "theoretical" : "heuristic";
}

std::string state_name(const fdctmc::FdCtmcStructure& st, int s) {
  return st.states[static_cast<std::size_t>(s)];
}

void put_delays(fdctmc::Report& rep, const fdctmc::FdCtmcStructure& st,
                const fdctmc::DelayFunction& d) {
  for (const auto& [s, v] : d.delays) rep.put("delay." + state_name(st, s), v);
}

void put_synthesis(fdctmc::Report& rep, const fdctmc::ParsedModel& parsed,
                   const fdctmc::SynthesisReport& r, bool po) {
  std::ostringstream text;
  if (!r.value.finite) {
    text << "the expected total cost is infinite for every delay function\n";
    rep.put("value", std::numeric_limits<double>::infinity());
  } else {
    text << "synthesized value: " << r.value.value << "\n";
    text << "delays:\n";
    for (const auto& [s, v] : r.delays.delays)
      text << "  " << state_name(parsed.structure, s) << " " << v << "\n";
    rep.put("value", r.value.value);
  }
  rep.put("guarantee", static_cast<long long>(r.guarantee ? 1 : 0));
  rep.put("delta", r.params.delta);
  rep.put("dmax", r.params.d_max);
  if (r.params.d_min) rep.put("dmin", *r.params.d_min);
  rep.put("kappa", r.params.kappa);
  if (!po) {
    rep.put("vmax", r.params.vmax);
    rep.put("vmax_source", source_name(r.params.vmax_source));
  }
  rep.put("vertices", static_cast<long long>(r.mdp_vertices));
  rep.put("actions", static_cast<long long>(r.mdp_actions));
  if (po) rep.put("strategies", static_cast<long long>(r.strategies_evaluated));
  put_delays(rep, parsed.structure, r.delays);
  for (const auto& note : r.notes) text << "note: " << note << "\n";
  rep.text = text.str();
}

fdctmc::ObservationRelation obs_of(const fdctmc::ParsedModel& parsed) {
  return parsed.obs ? *parsed.obs : fdctmc::ObservationRelation{};
}

}  // namespace

extern "C" {

void fdc_options_init(fdc_options* opts) {
  if (opts == nullptr) return;
  opts->epsilon = 0.1;
  opts->theta = 1e-9;
  opts->delta = -1.0;
  opts->dmax = -1.0;
  opts->dmin = -1.0;
  opts->kappa = -1.0;
  opts->vmax = -1.0;
  opts->use_theoretical_vmax = 0;
  opts->x = 0.0;
  opts->runs = 100000;
  opts->seed = 1;
  opts->max_steps = 1000000;
  opts->action_cap = 1000000;
  opts->strategy_cap = 10000000;
}

fdc_status fdc_model_parse(const char* text, fdc_model** out) {
  if (out == nullptr || text == nullptr) {
    set_error("null argument");
    return FDC_ERR_USAGE;
  }
  *out = nullptr;
  try {
    auto parsed = fdctmc::parse_model(text);
    *out = new fdc_model{std::move(parsed)};
    return FDC_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FDC_ERR_MODEL;
  }
}

void fdc_model_free(fdc_model* model) { delete model; }

fdc_status fdc_model_serialize(const fdc_model* model, fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    fdctmc::Report rep;
    rep.text = fdctmc::serialize_model(parsed.structure, parsed.cost,
                                       parsed.obs ? &*parsed.obs : nullptr);
    rep.put("model", rep.text);
    return rep;
  });
}

fdc_status fdc_validate(const fdc_model* model, int for_synthesis, fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    auto diags = fdctmc::validate(parsed.structure, parsed.cost, for_synthesis != 0);
    fdctmc::Report rep;
    std::ostringstream text;
    rep.put("diagnostics", static_cast<long long>(diags.size()));
    for (std::size_t i = 0; i < diags.size(); ++i) {
      text << diags[i].location << ": " << diags[i].message << "\n";
      rep.put("diagnostic." + std::to_string(i), diags[i].location + ": " + diags[i].message);
    }
    if (diags.empty()) text << "model is valid\n";
    rep.text = text.str();
    return rep;
  });
}

fdc_status fdc_analyze(const fdc_model* model, const char* delays_text, const fdc_options* opts,
                       fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    if (delays_text == nullptr) throw std::invalid_argument("analyze needs a delays file");
    fdc_options o = options_or_default(opts);
    auto delays = fdctmc::parse_delay_file(delays_text, parsed.structure);
    auto norm = fdctmc::normalize(parsed.structure, parsed.cost);
    auto eval = fdctmc::evaluate_fdctmc(norm, delays, o.theta > 0.0 ? o.theta : 1e-9);

    fdctmc::Report rep;
    std::ostringstream text;
    rep.put("value", eval.cost.or_inf());
    rep.put("error_bound", eval.error_bound);
    if (eval.cost.finite)
      text << "expected total cost from " << state_name(parsed.structure, parsed.structure.init)
           << ": " << eval.cost.value << "  (error bound " << eval.error_bound << ")\n";
    else
      text << "expected total cost is infinite (goal-free bottom component reachable)\n";
    text << "first-hit probabilities:\n";
    double mass = 0.0;
    for (const auto& [g, p] : eval.reach) {
      text << "  " << state_name(parsed.structure, g) << "  " << p << "\n";
      rep.put("reach." + state_name(parsed.structure, g), p);
      mass += p;
    }
    rep.put("reach_total", mass);
    rep.text = text.str();
    return rep;
  });
}

fdc_status fdc_params(const fdc_model* model, const fdc_options* opts, fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    fdc_options o = options_or_default(opts);
    auto norm = fdctmc::normalize(parsed.structure, parsed.cost);
    auto c = fdctmc::constants(parsed.structure, parsed.cost);

    fdctmc::Report rep;
    std::ostringstream text;
    rep.put("minR", c.min_rate);
    rep.put("maxR", c.max_rate);
    rep.put("minP", c.min_prob);
    auto [d1, d2] = fdctmc::d1_d2(norm, c);
    rep.put("D1", d1);
    rep.put("D2", d2);
    double m_bound = fdctmc::theoretical_M(norm, c);
    rep.put("M", m_bound);

    fdctmc::VmaxEstimate vmax;
    if (o.use_theoretical_vmax) {
      vmax.value = m_bound;
      vmax.source = fdctmc::VmaxSource::theoretical;
    } else {
      vmax = fdctmc::estimate_vmax(norm, c, {}, o.theta > 0.0 ? o.theta : 1e-9);
    }
    rep.put("vmax", vmax.value);
    rep.put("vmax_source", std::string(source_name(vmax.source)) +
                               (vmax.source == fdctmc::VmaxSource::heuristic
                                    ? "(" + std::to_string(vmax.heuristic_delay) + ")"
                                    : ""));
    rep.put("N", fdctmc::big_N(norm, c, vmax.value));

    text << "model constants: minR " << c.min_rate << ", maxR " << c.max_rate << ", minP "
         << c.min_prob << "\n";
    text << "mesh constants: D1 " << d1 << ", D2 " << d2 << ", M " << m_bound << "\n";
    text << "value bound vmax " << vmax.value << " (" << source_name(vmax.source) << ")\n";
    try {
      auto p = fdctmc::unconstrained_params(norm, c, o.epsilon, vmax);
      rep.put("alpha", p.alpha);
      rep.put("delta", p.delta);
      rep.put("dmax", p.d_max);
      rep.put("kappa", p.kappa);
      text << "unconstrained mesh for epsilon " << o.epsilon << ": delta " << p.delta
           << ", dmax " << p.d_max << ", kappa " << p.kappa << "\n";
    } catch (const fdctmc::InfeasibleParamsError& e) {
      rep.put("params_error", std::string(e.what()));
      text << "unconstrained mesh: " << e.what() << "\n";
    }
    if (o.dmin >= 0.0 && o.dmax >= 0.0) {
      auto b = fdctmc::po_bound_B(norm, c, o.dmin, o.dmax);
      rep.put("B_steps", b.b_steps);
      rep.put("B_cost", b.b_cost);
      rep.put("B", b.b);
      text << "partial-observation bound B " << b.b << "\n";
      try {
        auto p = fdctmc::po_params(norm, c, o.epsilon, o.dmin, o.dmax);
        rep.put("po_alpha", p.alpha);
        rep.put("po_delta", p.delta);
        rep.put("po_kappa", p.kappa);
        text << "partial-observation mesh: delta " << p.delta << ", kappa " << p.kappa << "\n";
      } catch (const fdctmc::InfeasibleParamsError& e) {
        rep.put("po_params_error", std::string(e.what()));
        text << "partial-observation mesh: " << e.what() << "\n";
      }
    }
    rep.put("epsilon", o.epsilon);
    rep.text = text.str();
    return rep;
  });
}

fdc_status fdc_synth(const fdc_model* model, const fdc_options* opts, fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    fdc_options o = options_or_default(opts);
    auto norm = fdctmc::normalize(parsed.structure, parsed.cost);
    auto c = fdctmc::constants(parsed.structure, parsed.cost);
    auto r = fdctmc::synth_unconstrained(norm, c, o.epsilon, overrides_of(o));
    fdctmc::Report rep;
    rep.put("epsilon", o.epsilon);
    put_synthesis(rep, parsed, r, false);
    return rep;
  });
}

fdc_status fdc_synth_po(const fdc_model* model, const fdc_options* opts, fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    fdc_options o = options_or_default(opts);
    if (!(o.dmin > 0.0) || !(o.dmax > 0.0))
      throw std::invalid_argument("synth-po needs positive dmin and dmax");
    auto norm = fdctmc::normalize(parsed.structure, parsed.cost);
    auto c = fdctmc::constants(parsed.structure, parsed.cost);
    fdctmc::SynthOverrides ov = overrides_of(o);
    ov.d_max.reset();  // dmax is the bound here, not a mesh override
    auto r = fdctmc::synth_partial_obs(norm, c, obs_of(parsed), o.dmin, o.dmax, o.epsilon, ov);
    fdctmc::Report rep;
    rep.put("epsilon", o.epsilon);
    put_synthesis(rep, parsed, r, true);
    return rep;
  });
}

fdc_status fdc_threshold(const fdc_model* model, const fdc_options* opts, fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    fdc_options o = options_or_default(opts);
    if (!(o.dmin > 0.0) || !(o.dmax > 0.0))
      throw std::invalid_argument("threshold needs positive dmin and dmax");
    auto norm = fdctmc::normalize(parsed.structure, parsed.cost);
    auto c = fdctmc::constants(parsed.structure, parsed.cost);
    fdctmc::SynthOverrides ov = overrides_of(o);
    ov.d_max.reset();
    auto r = fdctmc::synth_partial_obs(norm, c, obs_of(parsed), o.dmin, o.dmax, o.epsilon, ov);
    bool above = !r.value.finite || r.value.value > o.x;
    fdctmc::Report rep;
    rep.put("answer", above ? "above" : "below");
    rep.put("x", o.x);
    rep.put("value", r.value.or_inf());
    rep.text = std::string("the constrained optimum is ") + (above ? "above" : "below") + " " +
               std::to_string(o.x) + "\n";
    return rep;
  });
}

fdc_status fdc_verify(const fdc_model* model, const char* delays_text, const fdc_options* opts,
                      fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    if (delays_text == nullptr) throw std::invalid_argument("verify needs a delays file");
    fdc_options o = options_or_default(opts);
    if (!(o.dmin > 0.0) || !(o.dmax > 0.0))
      throw std::invalid_argument("verify needs positive dmin and dmax");
    auto delays = fdctmc::parse_delay_file(delays_text, parsed.structure);
    auto norm = fdctmc::normalize(parsed.structure, parsed.cost);
    auto c = fdctmc::constants(parsed.structure, parsed.cost);
    bool accept = fdctmc::verify_certificate(norm, c, obs_of(parsed), o.dmin, o.dmax, delays,
                                             o.x, o.epsilon, overrides_of(o));
    fdctmc::Report rep;
    rep.put("accept", static_cast<long long>(accept ? 1 : 0));
    rep.put("x", o.x);
    rep.text = accept ? "certificate accepted: the candidate stays below the threshold\n"
                      : "certificate rejected\n";
    return rep;
  });
}

fdc_status fdc_simulate(const fdc_model* model, const char* delays_text, const fdc_options* opts,
                        fdc_report** out) {
  return run_guarded(out, [&] {
    const auto& parsed = need_model(model);
    if (delays_text == nullptr) throw std::invalid_argument("simulate needs a delays file");
    fdc_options o = options_or_default(opts);
    auto delays = fdctmc::parse_delay_file(delays_text, parsed.structure);
    auto cost_est = fdctmc::estimate_cost(parsed.structure, parsed.cost, delays, o.runs, o.seed,
                                          o.max_steps);
    auto reach_est = fdctmc::estimate_reach(parsed.structure, parsed.cost, delays, o.runs, o.seed,
                                            o.max_steps);
    fdctmc::Report rep;
    std::ostringstream text;
    text << "mean total cost over " << o.runs << " runs: " << cost_est.mean << " (std error "
         << cost_est.std_error << ", truncated fraction " << cost_est.truncated_fraction << ")\n";
    rep.put("mean", cost_est.mean);
    rep.put("std_error", cost_est.std_error);
    rep.put("runs", static_cast<long long>(o.runs));
    rep.put("seed", static_cast<long long>(o.seed));
    rep.put("truncated_fraction", cost_est.truncated_fraction);
    text << "first-hit frequencies:\n";
    for (const auto& [g, est] : reach_est) {
      text << "  " << state_name(parsed.structure, g) << "  " << est.mean << " +- "
           << est.std_error << "\n";
      rep.put("reach." + state_name(parsed.structure, g), est.mean);
      rep.put("reach." + state_name(parsed.structure, g) + ".std_error", est.std_error);
    }
    rep.text = text.str();
    return rep;
  });
}

fdc_status fdc_gen_sat(const char* dimacs_text, fdc_report** out) {
  return run_guarded(out, [&] {
    if (dimacs_text == nullptr) throw std::invalid_argument("gen-sat needs DIMACS text");
    auto phi = fdctmc::parse_dimacs(dimacs_text);
    auto gadget = fdctmc::build_gadget(phi);
    std::string model_text =
        fdctmc::serialize_model(gadget.structure, gadget.cost, &gadget.obs);
    fdctmc::Report rep;
    rep.text = model_text;
    rep.put("model", model_text);
    rep.put("states", static_cast<long long>(gadget.structure.size()));
    rep.put("k", static_cast<long long>(gadget.k));
    rep.put("dmin", gadget.d_min);
    rep.put("dmax", gadget.d_max);
    rep.put("x", gadget.threshold_x);
    rep.put("epsilon", gadget.epsilon);
    if (gadget.k < 7)
      rep.put("warning",
              "the unsatisfiable separation is only guaranteed for 7 or more literals");
    return rep;
  });
}

const char* fdc_report_text(const fdc_report* report) {
  return report == nullptr ? "" : report->report.text.c_str();
}

const char* fdc_report_kv(const fdc_report* report) {
  return report == nullptr ? "" : report->kv_cache.c_str();
}

int fdc_report_get(const fdc_report* report, const char* key, double* out) {
  if (report == nullptr || key == nullptr || out == nullptr) return 0;
  const std::string* v = report->report.find(key);
  if (v == nullptr) return 0;
  char* end = nullptr;
  double parsed = std::strtod(v->c_str(), &end);
  if (end == v->c_str()) return 0;
  *out = parsed;
  return 1;
}

const char* fdc_report_get_str(const fdc_report* report, const char* key) {
  if (report == nullptr || key == nullptr) return nullptr;
  const std::string* v = report->report.find(key);
  return v == nullptr ? nullptr : v->c_str();
}

void fdc_report_free(fdc_report* report) { delete report; }

const char* fdc_last_error(void) { return g_last_error.c_str(); }

const char* fdc_version(void) { return "0.1.0"; }

}  // extern "C"
