#include "fdctmc/satgen.hpp"

#include <map>
#include <sstream>

namespace fdctmc {

int CnfFormula::total_literals() const {
  int k = 0;
  for (const auto& cls : clauses) k += static_cast<int>(cls.size());
  return k;
}

CnfFormula parse_dimacs(const std::string& text) {
  CnfFormula phi;
  std::istringstream is(text);
  std::string line;
  int declared_clauses = -1;
  std::vector<int> current;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c" || tok[0] == 'c') continue;
    if (tok == "p") {
      std::string fmt;
      if (!(ls >> fmt >> phi.num_vars >> declared_clauses) || fmt != "cnf")
        throw ParseError("malformed problem line; expected 'p cnf <vars> <clauses>'", lineno);
      continue;
    }
    ls.clear();
    ls.seekg(0);
    int lit;
    while (ls >> lit) {
      if (lit == 0) {
        if (current.empty()) throw ParseError("empty clause", lineno);
        phi.clauses.push_back(current);
        current.clear();
      } else {
        int var = lit > 0 ? lit : -lit;
        if (phi.num_vars == 0) throw ParseError("clause before the problem line", lineno);
        if (var > phi.num_vars) throw ParseError("variable index out of range", lineno);
        current.push_back(lit);
      }
    }
    if (ls.fail() && !ls.eof()) throw ParseError("malformed literal", lineno);
  }
  if (!current.empty()) phi.clauses.push_back(current);
  if (phi.clauses.empty()) throw ParseError("formula has no clauses", 0);
  return phi;
}

SatGadget build_gadget(const CnfFormula& phi) {
  if (phi.clauses.empty()) throw ModelError("formula has no clauses");
  SatGadget g;
  g.k = phi.total_literals();
  g.d_max = 16.0 * g.k;
  g.threshold_x = 17.0 * double(g.k) * double(g.k) + 0.5;

  FdCtmcStructure& st = g.structure;
  CostStructure& cost = g.cost;
  auto add_state = [&](const std::string& name) {
    st.states.push_back(name);
    return static_cast<int>(st.states.size()) - 1;
  };

  g.init_state = add_state("sin");
  struct LiteralStates {
    int s0;
    int tail;  // the state with the exponential self-loop
    int goal;
    std::vector<int> chain;  // s0 .. s^{8k-1} for positive literals, {s0} for negative
    bool positive;
  };
  std::vector<std::vector<LiteralStates>> lits(phi.clauses.size());
  int kk = g.k;
  for (std::size_t ci = 0; ci < phi.clauses.size(); ++ci) {
    for (std::size_t li = 0; li < phi.clauses[ci].size(); ++li) {
      int lit = phi.clauses[ci][li];
      LiteralStates ls;
      ls.positive = lit > 0;
      std::string prefix = "c" + std::to_string(ci + 1) + "l" + std::to_string(li + 1);
      int chain_len = ls.positive ? 8 * kk : 1;
      for (int m = 0; m < chain_len; ++m) ls.chain.push_back(add_state(prefix + "s" + std::to_string(m)));
      ls.s0 = ls.chain.front();
      ls.tail = add_state(prefix + "s" + std::to_string(chain_len));  // the >= state
      ls.goal = add_state(prefix + "g");
      lits[ci].push_back(ls);
    }
  }

  std::size_t n = st.states.size();
  st.rate = 1.0;
  st.init = g.init_state;
  st.p.assign(n, std::vector<double>(n, 0.0));
  st.f.assign(n, std::vector<double>(n, 0.0));
  st.fd.assign(n, 0);
  cost.goal.assign(n, 0);
  cost.rate_cost.assign(n, 1.0);
  cost.imp_exp.assign(n, std::vector<double>(n, 0.0));
  cost.imp_fd.assign(n, std::vector<double>(n, 0.0));

  auto su = [](int s) { return static_cast<std::size_t>(s); };
  // the branching entry: exponential self-loop, timeout fans out uniformly
  st.fd[su(g.init_state)] = 1;
  st.p[su(g.init_state)][su(g.init_state)] = 1.0;
  double inv_n = 1.0 / double(phi.clauses.size());
  for (std::size_t ci = 0; ci < phi.clauses.size(); ++ci)
    st.f[su(g.init_state)][su(lits[ci][0].s0)] = inv_n;

  g.s0_of_clause.resize(phi.clauses.size());
  g.var_of_clause.resize(phi.clauses.size());
  for (std::size_t ci = 0; ci < phi.clauses.size(); ++ci) {
    std::size_t width = lits[ci].size();
    for (std::size_t li = 0; li < width; ++li) {
      const LiteralStates& ls = lits[ci][li];
      int next_s0 = lits[ci][(li + 1) % width].s0;
      g.s0_of_clause[ci].push_back(ls.s0);
      int lit = phi.clauses[ci][li];
      g.var_of_clause[ci].push_back(lit > 0 ? lit : -lit);

      cost.goal[su(ls.goal)] = 1;
      st.p[su(ls.goal)][su(ls.goal)] = 1.0;
      for (std::size_t m = 0; m < ls.chain.size(); ++m) {
        int here = ls.chain[m];
        int succ = m + 1 < ls.chain.size() ? ls.chain[m + 1] : ls.tail;
        st.fd[su(here)] = 1;
        st.p[su(here)][su(succ)] = 1.0;
      }
      st.fd[su(ls.tail)] = 1;
      st.p[su(ls.tail)][su(ls.tail)] = 1.0;
      if (ls.positive) {
        // the timeout exits the chain sideways until 8k exponential steps have
        // happened; after that it hits the goal
        for (int here : ls.chain) st.f[su(here)][su(next_s0)] = 1.0;
        st.f[su(ls.tail)][su(ls.goal)] = 1.0;
      } else {
        st.f[su(ls.s0)][su(ls.goal)] = 1.0;
        st.f[su(ls.tail)][su(next_s0)] = 1.0;
      }
    }
  }

  // observation classes: the s0 states of each variable act in unison
  std::map<int, std::vector<int>> per_var;
  for (std::size_t ci = 0; ci < phi.clauses.size(); ++ci)
    for (std::size_t li = 0; li < g.s0_of_clause[ci].size(); ++li)
      per_var[g.var_of_clause[ci][li]].push_back(g.s0_of_clause[ci][li]);
  for (auto& [var, states] : per_var) g.obs.classes.push_back(states);
  return g;
}

DelayFunction assignment_strategy(const CnfFormula& phi, const std::vector<bool>& nu,
                                  const SatGadget& g) {
  if (nu.size() < static_cast<std::size_t>(phi.num_vars))
    throw ModelError("assignment does not cover every variable");
  DelayFunction d;
  for (std::size_t s = 0; s < g.structure.size(); ++s)
    if (g.structure.fd[s]) d.delays[static_cast<int>(s)] = g.d_min;
  for (std::size_t ci = 0; ci < g.s0_of_clause.size(); ++ci) {
    for (std::size_t li = 0; li < g.s0_of_clause[ci].size(); ++li) {
      int var = g.var_of_clause[ci][li];
      if (nu[static_cast<std::size_t>(var) - 1])
        d.delays[g.s0_of_clause[ci][li]] = g.d_max;
    }
  }
  return d;
}

}  // namespace fdctmc
