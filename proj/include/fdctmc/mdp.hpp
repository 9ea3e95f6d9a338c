#ifndef FDCTMC_MDP_HPP
#define FDCTMC_MDP_HPP

#include <limits>
#include <map>
#include <vector>

#include "fdctmc/kernel.hpp"
#include "fdctmc/model.hpp"

namespace fdctmc {

/// A total-cost value that is either a finite real or infinite. The infinite
/// case is decided structurally (goal-free bottom component reachable), never
/// by arithmetic overflow.
struct ExtReal {
  bool finite = true;
  double value = 0.0;

  static ExtReal infinite() { return {false, 0.0}; }
  static ExtReal of(double v) { return {true, v}; }
  double or_inf() const { return finite ? value : std::numeric_limits<double>::infinity(); }
};

struct Action {
  double delay = 0.0;       // meaningful when !exp_only
  long mesh_index = 0;      // delay == mesh_index * delta on a discretized mesh
  bool exp_only = false;    // the "wait for the exponential" action
};

/// Finite discrete-time MDP over the vertex set S'. Goal vertices carry no
/// actions; reset vertices carry timeout actions; the remaining vertices carry
/// the single exp-only action.
struct Dtmdp {
  std::vector<int> vertex_state;             // vertex -> normalized state id
  std::vector<int> state_vertex;             // normalized state id -> vertex or -1
  std::vector<char> goal;                    // per vertex
  std::vector<std::vector<Action>> actions;  // per vertex
  std::vector<std::vector<KernelRow>> rows;  // per vertex, parallel to actions
  int init = -1;

  std::size_t vertex_count() const { return vertex_state.size(); }
  std::size_t action_count() const;
};

/// Per-vertex choice of an enabled action (index into the vertex's action
/// list); -1 on goal vertices.
struct Strategy {
  std::vector<int> choice;
};

struct EvalResult {
  std::vector<ExtReal> cost;    // per vertex
  std::vector<ExtReal> steps;   // per vertex, unit one-step costs
  std::map<int, double> reach;  // goal vertex -> absorption probability from init
};

EvalResult evaluate_strategy(const Dtmdp& mdp, const Strategy& sigma);

std::vector<ExtReal> expected_steps(const Dtmdp& mdp, const Strategy& sigma);

std::map<int, double> reach_probabilities(const Dtmdp& mdp, const Strategy& sigma);

/// Globally optimal memoryless deterministic strategy by policy iteration with
/// exact policy evaluation; greedy ties break toward the lowest action index.
std::pair<Strategy, ExtReal> optimal_strategy(const Dtmdp& mdp);

/// True iff a goal-free bottom component is reachable from the initial state
/// in the graph of all positive-probability transitions. The answer does not
/// depend on the (finite, positive) delays.
bool detect_infinite(const NormalizedModel& model);

struct FdctmcEvaluation {
  ExtReal cost;                    // from the initial state
  std::vector<ExtReal> per_state;  // per S' vertex, indexed like the Dtmdp
  std::vector<int> vertex_state;
  std::map<int, double> reach;     // goal state id -> probability
  double error_bound = 0.0;        // |reported - true| bound induced by theta
};

/// Expected total cost and first-hit goal probabilities of the model under a
/// fixed delay function (given on original states), via exact kernel rows.
FdctmcEvaluation evaluate_fdctmc(const NormalizedModel& model, const DelayFunction& delays,
                                 double theta);

/// Single-strategy embedded chain used by evaluate_fdctmc; exposed so callers
/// can evaluate several delay functions against one vertex layout.
Dtmdp build_single_strategy_mdp(const NormalizedModel& model, const DelayFunction& lifted,
                                double theta);

}  // namespace fdctmc

#endif
