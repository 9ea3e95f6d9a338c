#include "fdctmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace fdctmc {

namespace {

constexpr double kRowSumTolerance = 1e-9;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + tok + "'", line);
  }
  if (pos != tok.size()) throw ParseError("trailing characters in number '" + tok + "'", line);
  return v;
}

}  // namespace

int FdCtmcStructure::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> FdCtmcStructure::fd_state_list() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (fd[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> CostStructure::goal_list() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < goal.size(); ++i)
    if (goal[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<std::vector<int>> ObservationRelation::complete_partition(
    const FdCtmcStructure& s) const {
  std::vector<std::vector<int>> out = classes;
  std::vector<char> covered(s.size(), 0);
  for (const auto& cls : classes)
    for (int st : cls) covered[static_cast<std::size_t>(st)] = 1;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.fd[i] && !covered[i]) out.push_back({static_cast<int>(i)});
  std::sort(out.begin(), out.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) { return a[0] < b[0]; });
  return out;
}

bool NormalizedModel::in_sprime(int s) const {
  return std::binary_search(mdp_states.begin(), mdp_states.end(), s);
}

ParsedModel parse_model(const std::string& text) {
  ParsedModel m;
  FdCtmcStructure& st = m.structure;
  CostStructure& cost = m.cost;

  bool have_states = false, have_rate = false, have_init = false;
  std::set<std::pair<int, std::pair<int, int>>> declared;  // (kind, (a,b)) triples seen
  std::vector<std::vector<int>> obs_classes;

  auto state_of = [&](const std::string& name, int line) {
    if (!have_states) throw ParseError("'states:' must come first", line);
    int s = st.index_of(name);
    if (s < 0) throw ParseError("unknown state identifier '" + name + "'", line);
    return s;
  };

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    std::vector<std::string> args(toks.begin() + 1, toks.end());

    if (key == "states:") {
      if (have_states) throw ParseError("duplicate declaration of 'states:'", lineno);
      if (args.empty()) throw ParseError("'states:' needs at least one identifier", lineno);
      std::set<std::string> seen;
      for (const auto& name : args) {
        if (!seen.insert(name).second)
          throw ParseError("duplicate state identifier '" + name + "'", lineno);
        st.states.push_back(name);
      }
      std::size_t n = st.states.size();
      st.p.assign(n, std::vector<double>(n, 0.0));
      st.f.assign(n, std::vector<double>(n, 0.0));
      st.fd.assign(n, 0);
      cost.goal.assign(n, 0);
      cost.rate_cost.assign(n, 0.0);
      cost.imp_exp.assign(n, std::vector<double>(n, 0.0));
      cost.imp_fd.assign(n, std::vector<double>(n, 0.0));
      have_states = true;
    } else if (key == "rate:") {
      if (have_rate) throw ParseError("duplicate declaration of 'rate:'", lineno);
      if (args.size() != 1) throw ParseError("'rate:' takes one number", lineno);
      st.rate = parse_number(args[0], lineno);
      if (!(st.rate > 0.0)) throw ParseError("rate must be positive", lineno);
      have_rate = true;
    } else if (key == "init:") {
      if (have_init) throw ParseError("duplicate declaration of 'init:'", lineno);
      if (args.size() != 1) throw ParseError("'init:' takes one state", lineno);
      st.init = state_of(args[0], lineno);
      have_init = true;
    } else if (key == "goal:") {
      for (const auto& name : args) {
        int s = state_of(name, lineno);
        if (cost.goal[static_cast<std::size_t>(s)])
          throw ParseError("duplicate declaration of goal state '" + name + "'", lineno);
        cost.goal[static_cast<std::size_t>(s)] = 1;
      }
    } else if (key == "fd:") {
      for (const auto& name : args) {
        int s = state_of(name, lineno);
        if (st.fd[static_cast<std::size_t>(s)])
          throw ParseError("duplicate declaration of fd state '" + name + "'", lineno);
        st.fd[static_cast<std::size_t>(s)] = 1;
      }
    } else if (key == "P:" || key == "F:" || key == "IP:" || key == "IF:") {
      if (args.size() != 3) throw ParseError("'" + key + "' takes <s> <s'> <value>", lineno);
      int a = state_of(args[0], lineno);
      int b = state_of(args[1], lineno);
      double v = parse_number(args[2], lineno);
      int kind = key == "P:" ? 0 : key == "F:" ? 1 : key == "IP:" ? 2 : 3;
      if (!declared.insert({kind, {a, b}}).second)
        throw ParseError("duplicate declaration '" + key + " " + args[0] + " " + args[1] + "'",
                         lineno);
      if (v < 0.0) throw ParseError("negative value in '" + key + "'", lineno);
      if (kind <= 1 && v > 1.0 + kRowSumTolerance)
        throw ParseError("probability above 1 in '" + key + "'", lineno);
      auto ua = static_cast<std::size_t>(a);
      auto ub = static_cast<std::size_t>(b);
      if (kind == 0) st.p[ua][ub] = v;
      else if (kind == 1) st.f[ua][ub] = v;
      else if (kind == 2) cost.imp_exp[ua][ub] = v;
      else cost.imp_fd[ua][ub] = v;
    } else if (key == "R:") {
      if (args.size() != 2) throw ParseError("'R:' takes <s> <cost>", lineno);
      int s = state_of(args[0], lineno);
      double v = parse_number(args[1], lineno);
      if (v < 0.0) throw ParseError("negative rate cost", lineno);
      if (!declared.insert({4, {s, -1}}).second)
        throw ParseError("duplicate declaration 'R: " + args[0] + "'", lineno);
      cost.rate_cost[static_cast<std::size_t>(s)] = v;
    } else if (key == "obs:") {
      if (args.empty()) throw ParseError("'obs:' needs at least one state", lineno);
      std::vector<int> cls;
      for (const auto& name : args) cls.push_back(state_of(name, lineno));
      obs_classes.push_back(std::move(cls));
    } else {
      throw ParseError("unknown directive '" + key + "'", lineno);
    }
  }

  if (!have_states) throw ParseError("missing 'states:'", 0);
  if (!have_rate) throw ParseError("missing 'rate:'", 0);
  if (!have_init) throw ParseError("missing 'init:'", 0);

  std::size_t n = st.size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double v : st.p[i]) sum += v;
    if (std::fabs(sum - 1.0) > kRowSumTolerance)
      throw ParseError("row of P does not sum to 1 for state '" + st.states[i] + "' (sum " +
                           fmt_double(sum) + ")",
                       0);
    if (sum != 1.0)
      for (double& v : st.p[i]) v /= sum;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double v : st.f[i]) sum += v;
    if (st.fd[i]) {
      if (std::fabs(sum - 1.0) > kRowSumTolerance)
        throw ParseError("row of F does not sum to 1 for fd state '" + st.states[i] + "' (sum " +
                             fmt_double(sum) + ")",
                         0);
      if (sum != 1.0)
        for (double& v : st.f[i]) v /= sum;
    } else if (sum != 0.0) {
      throw ParseError("F transitions declared for non-fd state '" + st.states[i] + "'", 0);
    }
  }

  if (!obs_classes.empty()) {
    std::vector<char> covered(n, 0);
    for (const auto& cls : obs_classes) {
      for (int s : cls) {
        auto us = static_cast<std::size_t>(s);
        if (!st.fd[us])
          throw ParseError("obs class contains non-fd state '" + st.states[us] + "'", 0);
        if (covered[us])
          throw ParseError("state '" + st.states[us] + "' appears in two obs classes", 0);
        covered[us] = 1;
      }
    }
    m.obs = ObservationRelation{obs_classes};
  }
  return m;
}

std::string serialize_model(const FdCtmcStructure& st, const CostStructure& cost,
                            const ObservationRelation* obs) {
  std::ostringstream out;
  out << "states:";
  for (const auto& s : st.states) out << ' ' << s;
  out << '\n';
  out << "rate: " << fmt_double(st.rate) << '\n';
  out << "init: " << st.states[static_cast<std::size_t>(st.init)] << '\n';
  auto goals = cost.goal_list();
  if (!goals.empty()) {
    out << "goal:";
    for (int g : goals) out << ' ' << st.states[static_cast<std::size_t>(g)];
    out << '\n';
  }
  auto fds = st.fd_state_list();
  if (!fds.empty()) {
    out << "fd:";
    for (int s : fds) out << ' ' << st.states[static_cast<std::size_t>(s)];
    out << '\n';
  }
  std::size_t n = st.size();
  auto emit_matrix = [&](const char* key, const std::vector<std::vector<double>>& mat) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (mat[i][j] != 0.0)
          out << key << ' ' << st.states[i] << ' ' << st.states[j] << ' ' << fmt_double(mat[i][j])
              << '\n';
  };
  emit_matrix("P:", st.p);
  emit_matrix("F:", st.f);
  for (std::size_t i = 0; i < n; ++i)
    if (cost.rate_cost[i] != 0.0)
      out << "R: " << st.states[i] << ' ' << fmt_double(cost.rate_cost[i]) << '\n';
  emit_matrix("IP:", cost.imp_exp);
  emit_matrix("IF:", cost.imp_fd);
  if (obs) {
    auto classes = obs->classes;
    for (auto& cls : classes) std::sort(cls.begin(), cls.end());
    std::sort(classes.begin(), classes.end());
    for (const auto& cls : classes) {
      out << "obs:";
      for (int s : cls) out << ' ' << st.states[static_cast<std::size_t>(s)];
      out << '\n';
    }
  }
  return out.str();
}

std::vector<Diagnostic> validate(const FdCtmcStructure& st, const CostStructure& cost,
                                 bool for_synthesis) {
  std::vector<Diagnostic> diags;
  auto add = [&](std::string msg, std::string loc) {
    diags.push_back({std::move(msg), std::move(loc)});
  };
  std::size_t n = st.size();
  if (n == 0) {
    add("model has no states", "states");
    return diags;
  }
  if (!(st.rate > 0.0)) add("rate must be positive", "rate");
  if (st.init < 0 || static_cast<std::size_t>(st.init) >= n) add("init is not a state", "init");

  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    bool neg = false;
    for (double v : st.p[i]) {
      sum += v;
      neg = neg || v < 0.0;
    }
    if (neg) add("negative entry in P row", st.states[i]);
    if (std::fabs(sum - 1.0) > kRowSumTolerance) add("row sum != 1 in P", st.states[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    bool neg = false;
    for (double v : st.f[i]) {
      sum += v;
      neg = neg || v < 0.0;
    }
    if (neg) add("negative entry in F row", st.states[i]);
    if (st.fd[i]) {
      if (std::fabs(sum - 1.0) > kRowSumTolerance) add("row sum != 1 in F", st.states[i]);
    } else if (sum != 0.0) {
      add("F transitions from non-fd state", st.states[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cost.rate_cost[i] < 0.0) add("negative rate cost", st.states[i]);
    if (for_synthesis && cost.rate_cost[i] == 0.0)
      add("positive rate cost required for synthesis", st.states[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (cost.imp_exp[i][j] < 0.0) add("negative exp impulse cost", st.states[i]);
      if (cost.imp_fd[i][j] < 0.0) add("negative fd impulse cost", st.states[i]);
    }
  }
  return diags;
}

NormalizedModel normalize(const FdCtmcStructure& st, const CostStructure& cost) {
  std::size_t n = st.size();
  std::vector<char> wants_reset(n, 0), wants_keep(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (st.p[s][t] > 0.0 && st.fd[t]) {
        if (st.fd[s]) wants_keep[t] = 1;
        else wants_reset[t] = 1;
      }
      if (st.fd[s] && st.f[s][t] > 0.0 && st.fd[t]) wants_reset[t] = 1;
    }
  }
  if (st.init >= 0 && st.fd[static_cast<std::size_t>(st.init)])
    wants_reset[static_cast<std::size_t>(st.init)] = 1;
  // fd states with no incoming transition at all can only ever start a run;
  // they take the reset role
  for (std::size_t s = 0; s < n; ++s)
    if (st.fd[s] && !wants_reset[s] && !wants_keep[s]) wants_reset[s] = 1;

  NormalizedModel out;
  std::vector<int> keep_copy(n, -1);  // original -> index of its keep copy
  out.base.states = st.states;
  out.base.rate = st.rate;
  out.lift.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.lift[s] = static_cast<int>(s);
  for (std::size_t s = 0; s < n; ++s) {
    if (st.fd[s] && wants_reset[s] && wants_keep[s]) {
      keep_copy[s] = static_cast<int>(out.base.states.size());
      out.base.states.push_back(st.states[s] + "#keep");
      out.lift.push_back(static_cast<int>(s));
    }
  }

  std::size_t m = out.base.states.size();
  out.base.p.assign(m, std::vector<double>(m, 0.0));
  out.base.f.assign(m, std::vector<double>(m, 0.0));
  out.base.fd.assign(m, 0);
  out.base.init = st.init;
  out.cost.goal.assign(m, 0);
  out.cost.rate_cost.assign(m, 0.0);
  out.cost.imp_exp.assign(m, std::vector<double>(m, 0.0));
  out.cost.imp_fd.assign(m, std::vector<double>(m, 0.0));
  out.reset.assign(m, 0);
  out.keep.assign(m, 0);

  for (std::size_t v = 0; v < m; ++v) {
    auto o = static_cast<std::size_t>(out.lift[v]);
    bool is_copy = v >= n;
    out.base.fd[v] = st.fd[o];
    out.cost.goal[v] = cost.goal[o];
    out.cost.rate_cost[v] = cost.rate_cost[o];
    if (st.fd[o]) {
      if (is_copy) out.keep[v] = 1;
      else if (wants_reset[o]) out.reset[v] = 1;
      else out.keep[v] = 1;
    }
    bool src_fd = st.fd[o] != 0;
    for (std::size_t t = 0; t < n; ++t) {
      // targets split into both roles are redirected by the class the source
      // entry induces: P from fd goes to the keep copy, everything else to the
      // original slot
      if (st.p[o][t] > 0.0) {
        std::size_t tgt = (keep_copy[t] >= 0 && src_fd) ? static_cast<std::size_t>(keep_copy[t]) : t;
        out.base.p[v][tgt] = st.p[o][t];
        out.cost.imp_exp[v][tgt] = cost.imp_exp[o][t];
      }
      if (src_fd && st.f[o][t] > 0.0) {
        out.base.f[v][t] = st.f[o][t];
        out.cost.imp_fd[v][t] = cost.imp_fd[o][t];
      }
    }
  }

  for (std::size_t v = 0; v < m; ++v) {
    bool nonfd = !out.base.fd[v];
    if (out.reset[v] || nonfd || out.cost.goal[v]) out.mdp_states.push_back(static_cast<int>(v));
  }
  return out;
}

ModelConstants constants(const FdCtmcStructure& st, const CostStructure& cost) {
  ModelConstants c;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;
  std::size_t n = st.size();
  for (std::size_t s = 0; s < n; ++s) {
    double r = cost.rate_cost[s];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    if (r > 0.0) any = true;
    for (std::size_t t = 0; t < n; ++t) {
      for (double imp : {cost.imp_exp[s][t], cost.imp_fd[s][t]}) {
        if (imp > 0.0) {
          lo = std::min(lo, imp);
          hi = std::max(hi, imp);
          any = true;
        }
      }
    }
  }
  if (!any) throw ModelError("no positive cost in the model");
  c.min_rate = lo;
  c.max_rate = hi;
  double minp = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      if (st.p[s][t] > 0.0) minp = std::min(minp, st.p[s][t]);
      if (st.f[s][t] > 0.0) minp = std::min(minp, st.f[s][t]);
    }
  c.min_prob = std::isfinite(minp) ? minp : 1.0;
  return c;
}

DelayFunction parse_delay_file(const std::string& text, const FdCtmcStructure& st) {
  DelayFunction d;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    if (toks.size() != 2) throw ParseError("expected '<state> <delay>'", lineno);
    int s = st.index_of(toks[0]);
    if (s < 0) throw ParseError("unknown state identifier '" + toks[0] + "'", lineno);
    if (!st.is_fd(s)) throw ParseError("state '" + toks[0] + "' has no timeout", lineno);
    double v = parse_number(toks[1], lineno);
    if (!(v > 0.0) || !std::isfinite(v)) throw ParseError("delay must be positive and finite", lineno);
    if (!d.delays.emplace(s, v).second)
      throw ParseError("duplicate delay for state '" + toks[0] + "'", lineno);
  }
  for (int s : st.fd_state_list())
    if (!d.has(s))
      throw ParseError("no delay given for fd state '" + st.states[static_cast<std::size_t>(s)] + "'",
                       0);
  return d;
}

DelayFunction lift_delays(const DelayFunction& d, const NormalizedModel& model) {
  DelayFunction out;
  for (std::size_t v = 0; v < model.base.size(); ++v) {
    if (!model.is_reset(static_cast<int>(v))) continue;
    int orig = model.lift[v];
    if (!d.has(orig))
      throw ModelError("no delay given for reset state '" + model.base.states[v] + "'");
    out.delays[static_cast<int>(v)] = d.at(orig);
  }
  return out;
}

}  // namespace fdctmc
