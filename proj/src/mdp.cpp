#include "fdctmc/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "fdctmc/linalg.hpp"

namespace fdctmc {

namespace {

// Strongly connected components, iterative Tarjan. Returns component id per
// vertex; ids are assigned in reverse topological order.
std::vector<int> scc_of(const std::vector<std::vector<int>>& adj, int& count) {
  int n = static_cast<int>(adj.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  int next_index = 0;
  count = 0;

  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = next_index++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      auto uv = static_cast<std::size_t>(f.v);
      if (f.edge < adj[uv].size()) {
        int w = adj[uv][f.edge++];
        auto uw = static_cast<std::size_t>(w);
        if (index[uw] == -1) {
          index[uw] = low[uw] = next_index++;
          stack.push_back(w);
          on_stack[uw] = 1;
          call.push_back({w, 0});
        } else if (on_stack[uw]) {
          low[uv] = std::min(low[uv], index[uw]);
        }
      } else {
        if (low[uv] == index[uv]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = 0;
            comp[static_cast<std::size_t>(w)] = count;
            if (w == f.v) break;
          }
          ++count;
        }
        call.pop_back();
        if (!call.empty()) {
          auto up = static_cast<std::size_t>(call.back().v);
          low[up] = std::min(low[up], low[uv]);
        }
      }
    }
  }
  return comp;
}

const KernelRow& row_of(const Dtmdp& mdp, const Strategy& sigma, std::size_t v) {
  int a = sigma.choice[v];
  return mdp.rows[v][static_cast<std::size_t>(a)];
}

void check_strategy(const Dtmdp& mdp, const Strategy& sigma) {
  if (sigma.choice.size() != mdp.vertex_count())
    throw ModelError("strategy size does not match the MDP");
  for (std::size_t v = 0; v < mdp.vertex_count(); ++v) {
    if (mdp.goal[v]) continue;
    int a = sigma.choice[v];
    if (a < 0 || static_cast<std::size_t>(a) >= mdp.actions[v].size())
      throw ModelError("strategy picks a disabled action");
  }
}

struct ChainAnalysis {
  std::vector<char> bad;            // vertex lies in a goal-free bottom SCC
  std::vector<char> can_reach_bad;  // some path (under sigma) enters a bad SCC
};

ChainAnalysis analyze_chain(const Dtmdp& mdp, const Strategy& sigma) {
  std::size_t n = mdp.vertex_count();
  std::vector<std::vector<int>> adj(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (mdp.goal[v]) continue;
    for (const auto& [t, p] : row_of(mdp, sigma, v).probs)
      if (p > 0.0) adj[v].push_back(mdp.state_vertex[static_cast<std::size_t>(t)]);
  }
  int ncomp = 0;
  auto comp = scc_of(adj, ncomp);
  std::vector<char> comp_has_goal(static_cast<std::size_t>(ncomp), 0);
  std::vector<char> comp_bottom(static_cast<std::size_t>(ncomp), 1);
  for (std::size_t v = 0; v < n; ++v) {
    if (mdp.goal[v]) comp_has_goal[static_cast<std::size_t>(comp[v])] = 1;
    for (int w : adj[v])
      if (comp[static_cast<std::size_t>(w)] != comp[v])
        comp_bottom[static_cast<std::size_t>(comp[v])] = 0;
  }
  ChainAnalysis out;
  out.bad.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto c = static_cast<std::size_t>(comp[v]);
    if (comp_bottom[c] && !comp_has_goal[c]) out.bad[v] = 1;
  }
  // reverse reachability toward the bad components
  std::vector<std::vector<int>> radj(n);
  for (std::size_t v = 0; v < n; ++v)
    for (int w : adj[v]) radj[static_cast<std::size_t>(w)].push_back(static_cast<int>(v));
  out.can_reach_bad = out.bad;
  std::vector<int> queue;
  for (std::size_t v = 0; v < n; ++v)
    if (out.bad[v]) queue.push_back(static_cast<int>(v));
  while (!queue.empty()) {
    int w = queue.back();
    queue.pop_back();
    for (int u : radj[static_cast<std::size_t>(w)]) {
      auto uu = static_cast<std::size_t>(u);
      if (!out.can_reach_bad[uu]) {
        out.can_reach_bad[uu] = 1;
        queue.push_back(u);
      }
    }
  }
  return out;
}

// Solves the absorbing-chain systems (I - Q) x = rhs over the vertex subset
// `solve_set`, for several right-hand sides at once.
std::vector<std::vector<double>> solve_transient(const Dtmdp& mdp, const Strategy& sigma,
                                                 const std::vector<int>& solve_set,
                                                 const std::vector<std::vector<double>>& rhs) {
  int n = static_cast<int>(solve_set.size());
  std::vector<int> pos(mdp.vertex_count(), -1);
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(solve_set[static_cast<std::size_t>(i)])] = i;
  std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    auto v = static_cast<std::size_t>(solve_set[static_cast<std::size_t>(i)]);
    a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = 1.0;
    for (const auto& [t, p] : row_of(mdp, sigma, v).probs) {
      int w = mdp.state_vertex[static_cast<std::size_t>(t)];
      int j = pos[static_cast<std::size_t>(w)];
      if (j >= 0)
        a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] -=
            p;
    }
  }
  LuSolver solver(std::move(a), n);
  std::vector<std::vector<double>> out;
  out.reserve(rhs.size());
  for (const auto& b : rhs) out.push_back(solver.solve(b));
  return out;
}

}  // namespace

std::size_t Dtmdp::action_count() const {
  std::size_t total = 0;
  for (const auto& a : actions) total += a.size();
  return total;
}

EvalResult evaluate_strategy(const Dtmdp& mdp, const Strategy& sigma) {
  check_strategy(mdp, sigma);
  std::size_t n = mdp.vertex_count();
  EvalResult res;
  res.cost.assign(n, ExtReal::of(0.0));
  res.steps.assign(n, ExtReal::of(0.0));

  auto analysis = analyze_chain(mdp, sigma);

  std::vector<char> finite_mask(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (mdp.goal[v]) continue;
    if (analysis.can_reach_bad[v]) {
      res.cost[v] = ExtReal::infinite();
      res.steps[v] = ExtReal::infinite();
    } else {
      finite_mask[v] = 1;
    }
  }

  // block-triangular solve: the block reachable from the initial vertex goes
  // first, so its values do not pick up rounding noise from vertices the
  // strategy never visits; the remainder is solved against those results
  std::vector<char> reachable(n, 0);
  {
    std::vector<int> queue{mdp.init};
    reachable[static_cast<std::size_t>(mdp.init)] = 1;
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      auto uv = static_cast<std::size_t>(v);
      if (mdp.goal[uv]) continue;
      for (const auto& [t, p] : row_of(mdp, sigma, uv).probs) {
        if (p <= 0.0) continue;
        int w = mdp.state_vertex[static_cast<std::size_t>(t)];
        if (!reachable[static_cast<std::size_t>(w)]) {
          reachable[static_cast<std::size_t>(w)] = 1;
          queue.push_back(w);
        }
      }
    }
  }
  auto solve_block = [&](const std::vector<int>& block) {
    if (block.empty()) return;
    std::vector<double> f, ones;
    for (int v : block) {
      auto uv = static_cast<std::size_t>(v);
      double cost_rhs = row_of(mdp, sigma, uv).cost;
      double steps_rhs = 1.0;
      for (const auto& [t, p] : row_of(mdp, sigma, uv).probs) {
        int w = mdp.state_vertex[static_cast<std::size_t>(t)];
        auto uw = static_cast<std::size_t>(w);
        // contributions from the already-solved block enter the right side
        if (!mdp.goal[uw] && finite_mask[uw] && reachable[uw] && !reachable[uv]) {
          cost_rhs += p * res.cost[uw].value;
          steps_rhs += p * res.steps[uw].value;
        }
      }
      f.push_back(cost_rhs);
      ones.push_back(steps_rhs);
    }
    auto sol = solve_transient(mdp, sigma, block, {f, ones});
    for (std::size_t i = 0; i < block.size(); ++i) {
      auto v = static_cast<std::size_t>(block[i]);
      res.cost[v] = ExtReal::of(sol[0][i]);
      res.steps[v] = ExtReal::of(sol[1][i]);
    }
  };
  std::vector<int> block_near, block_far;
  for (std::size_t v = 0; v < n; ++v) {
    if (!finite_mask[v]) continue;
    (reachable[v] ? block_near : block_far).push_back(static_cast<int>(v));
  }
  solve_block(block_near);
  solve_block(block_far);

  // absorption probabilities from the initial vertex, one per goal vertex
  auto ui = static_cast<std::size_t>(mdp.init);
  if (mdp.goal[ui]) {
    res.reach[mdp.init] = 1.0;
    return res;
  }
  std::vector<int> transient;  // non-goal vertices outside goal-free bottom SCCs
  for (std::size_t v = 0; v < n; ++v)
    if (!mdp.goal[v] && !analysis.bad[v]) transient.push_back(static_cast<int>(v));
  std::vector<int> goals;
  for (std::size_t v = 0; v < n; ++v)
    if (mdp.goal[v]) goals.push_back(static_cast<int>(v));
  if (!goals.empty() && !transient.empty()) {
    std::vector<std::vector<double>> rhs;
    for (int g : goals) {
      std::vector<double> b;
      for (int v : transient) {
        double p = 0.0;
        for (const auto& [t, q] : row_of(mdp, sigma, static_cast<std::size_t>(v)).probs)
          if (mdp.state_vertex[static_cast<std::size_t>(t)] == g) p += q;
        b.push_back(p);
      }
      rhs.push_back(std::move(b));
    }
    auto sol = solve_transient(mdp, sigma, transient, rhs);
    std::size_t init_pos = 0;
    bool init_transient = false;
    for (std::size_t i = 0; i < transient.size(); ++i)
      if (transient[i] == mdp.init) {
        init_pos = i;
        init_transient = true;
      }
    for (std::size_t gi = 0; gi < goals.size(); ++gi)
      res.reach[goals[gi]] = init_transient ? std::max(0.0, sol[gi][init_pos]) : 0.0;
  }
  return res;
}

std::vector<ExtReal> expected_steps(const Dtmdp& mdp, const Strategy& sigma) {
  return evaluate_strategy(mdp, sigma).steps;
}

std::map<int, double> reach_probabilities(const Dtmdp& mdp, const Strategy& sigma) {
  return evaluate_strategy(mdp, sigma).reach;
}

namespace {

// Initial policy for policy iteration: on the almost-sure-reachability region
// it picks, per vertex, the lowest-index action that keeps the chain inside
// the region and makes progress toward a goal, so the starting values are
// finite wherever any strategy achieves that. Improvement from a finite-value
// policy never loses finiteness (costs are nonnegative), so iteration cannot
// get trapped in a configuration where escaping needs joint switches.
Strategy proper_initial_policy(const Dtmdp& mdp) {
  std::size_t n = mdp.vertex_count();
  // greatest fixpoint: keep vertices that can reach a goal with positive
  // probability using actions whose support stays inside the kept region
  std::vector<char> region(n, 1);
  for (;;) {
    std::vector<char> reach(n, 0);
    for (std::size_t v = 0; v < n; ++v) reach[v] = mdp.goal[v] && region[v];
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t v = 0; v < n; ++v) {
        if (reach[v] || !region[v] || mdp.goal[v]) continue;
        for (const auto& row : mdp.rows[v]) {
          bool inside = true, touches = false;
          for (const auto& [t, p] : row.probs) {
            if (p <= 0.0) continue;
            auto w = static_cast<std::size_t>(mdp.state_vertex[static_cast<std::size_t>(t)]);
            inside = inside && region[w];
            touches = touches || reach[w];
          }
          if (inside && touches) {
            reach[v] = 1;
            grew = true;
            break;
          }
        }
      }
    }
    if (reach == region) break;
    region = reach;
  }

  // BFS layers toward the goals over region-preserving actions
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<int> dist(n, kUnreached);
  for (std::size_t v = 0; v < n; ++v)
    if (mdp.goal[v] && region[v]) dist[v] = 0;
  Strategy sigma;
  sigma.choice.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v)
    if (!mdp.goal[v]) {
      if (mdp.actions[v].empty()) throw ModelError("non-goal vertex without enabled actions");
      sigma.choice[v] = 0;
    }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (mdp.goal[v] || !region[v]) continue;
      for (int a = 0; a < static_cast<int>(mdp.actions[v].size()); ++a) {
        bool inside = true;
        int best_succ = kUnreached;
        for (const auto& [t, p] : mdp.rows[v][static_cast<std::size_t>(a)].probs) {
          if (p <= 0.0) continue;
          auto w = static_cast<std::size_t>(mdp.state_vertex[static_cast<std::size_t>(t)]);
          inside = inside && region[w];
          best_succ = std::min(best_succ, dist[w]);
        }
        if (!inside || best_succ == kUnreached) continue;
        if (best_succ + 1 < dist[v]) {
          dist[v] = best_succ + 1;
          sigma.choice[v] = a;
          changed = true;
        }
      }
    }
  }
  return sigma;
}

}  // namespace

std::pair<Strategy, ExtReal> optimal_strategy(const Dtmdp& mdp) {
  std::size_t n = mdp.vertex_count();
  Strategy sigma = proper_initial_policy(mdp);

  auto q_value = [&](const std::vector<ExtReal>& x, std::size_t v, int a) -> ExtReal {
    const KernelRow& row = mdp.rows[v][static_cast<std::size_t>(a)];
    double q = row.cost;
    for (const auto& [t, p] : row.probs) {
      if (p <= 0.0) continue;
      int w = mdp.state_vertex[static_cast<std::size_t>(t)];
      const ExtReal& xv = x[static_cast<std::size_t>(w)];
      if (!xv.finite) return ExtReal::infinite();
      q += p * xv.value;
    }
    return ExtReal::of(q);
  };

  EvalResult eval;
  for (long iter = 0;; ++iter) {
    if (iter > 100000) throw ModelError("policy iteration failed to terminate");
    eval = evaluate_strategy(mdp, sigma);
    bool changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (mdp.goal[v]) continue;
      // deterministic greedy argmin; ascending scan keeps the lowest action
      // index among equals
      int best = 0;
      ExtReal best_q = q_value(eval.cost, v, 0);
      for (int a = 1; a < static_cast<int>(mdp.actions[v].size()); ++a) {
        ExtReal q = q_value(eval.cost, v, a);
        if (!best_q.finite ? q.finite : (q.finite && q.value < best_q.value)) {
          best = a;
          best_q = q;
        }
      }
      ExtReal current = q_value(eval.cost, v, sigma.choice[v]);
      bool improves = !current.finite
                          ? best_q.finite
                          : (best_q.finite &&
                             best_q.value < current.value - 1e-12 * (1.0 + std::fabs(current.value)));
      if (improves && best != sigma.choice[v]) {
        sigma.choice[v] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return {sigma, eval.cost[static_cast<std::size_t>(mdp.init)]};
}

bool detect_infinite(const NormalizedModel& model) {
  const auto& st = model.base;
  std::size_t n = st.size();
  std::vector<std::vector<int>> adj(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (model.cost.is_goal(static_cast<int>(s))) continue;
    for (std::size_t t = 0; t < n; ++t) {
      if (st.p[s][t] > 0.0) adj[s].push_back(static_cast<int>(t));
      if (st.fd[s] && st.f[s][t] > 0.0) adj[s].push_back(static_cast<int>(t));
    }
  }
  int ncomp = 0;
  auto comp = scc_of(adj, ncomp);
  std::vector<char> has_goal(static_cast<std::size_t>(ncomp), 0);
  std::vector<char> bottom(static_cast<std::size_t>(ncomp), 1);
  for (std::size_t v = 0; v < n; ++v) {
    if (model.cost.is_goal(static_cast<int>(v))) has_goal[static_cast<std::size_t>(comp[v])] = 1;
    for (int w : adj[v])
      if (comp[static_cast<std::size_t>(w)] != comp[v]) bottom[static_cast<std::size_t>(comp[v])] = 0;
  }
  // reachability from the initial state
  std::vector<char> seen(n, 0);
  std::vector<int> queue{st.init};
  seen[static_cast<std::size_t>(st.init)] = 1;
  while (!queue.empty()) {
    int v = queue.back();
    queue.pop_back();
    auto c = static_cast<std::size_t>(comp[static_cast<std::size_t>(v)]);
    if (bottom[c] && !has_goal[c]) return true;
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        queue.push_back(w);
      }
    }
  }
  return false;
}

Dtmdp build_single_strategy_mdp(const NormalizedModel& model, const DelayFunction& lifted,
                                double theta) {
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
  for (std::size_t v = 0; v < n; ++v) {
    int s = mdp.vertex_state[v];
    if (model.cost.is_goal(s)) {
      mdp.goal[v] = 1;
      continue;
    }
    if (model.is_reset(s)) {
      if (!lifted.has(s))
        throw ModelError("delay function does not cover reset state '" +
                         model.base.states[static_cast<std::size_t>(s)] + "'");
      double d = lifted.at(s);
      mdp.actions[v].push_back({d, 0, false});
      mdp.rows[v].push_back(kernel_row(model, s, d, theta));
    } else {
      mdp.actions[v].push_back({0.0, 0, true});
      mdp.rows[v].push_back(kernel_row_exp(model, s));
    }
  }
  return mdp;
}

FdctmcEvaluation evaluate_fdctmc(const NormalizedModel& model, const DelayFunction& delays,
                                 double theta) {
  DelayFunction lifted = lift_delays(delays, model);
  Dtmdp mdp = build_single_strategy_mdp(model, lifted, theta);
  Strategy sigma;
  sigma.choice.assign(mdp.vertex_count(), -1);
  for (std::size_t v = 0; v < mdp.vertex_count(); ++v)
    if (!mdp.goal[v]) sigma.choice[v] = 0;
  EvalResult eval = evaluate_strategy(mdp, sigma);

  FdctmcEvaluation out;
  out.per_state = eval.cost;
  out.vertex_state = mdp.vertex_state;
  out.cost = eval.cost[static_cast<std::size_t>(mdp.init)];
  for (const auto& [gv, p] : eval.reach) {
    int orig = model.lift[static_cast<std::size_t>(mdp.vertex_state[static_cast<std::size_t>(gv)])];
    out.reach[orig] += p;
  }
  double max_cost = 0.0, max_steps = 0.0;
  bool all_finite = true;
  for (std::size_t v = 0; v < mdp.vertex_count(); ++v) {
    if (!eval.cost[v].finite) {
      all_finite = false;
      continue;
    }
    max_cost = std::max(max_cost, eval.cost[v].value);
    if (eval.steps[v].finite) max_steps = std::max(max_steps, eval.steps[v].value);
  }
  out.error_bound =
      all_finite ? theta * max_steps * (1.0 + max_cost * double(mdp.vertex_count())) : 0.0;
  return out;
}

}  // namespace fdctmc
