#include <cmath>

#include "doctest.h"
#include "fdctmc/mdp.hpp"
#include "fdctmc/satgen.hpp"
#include "fdctmc/synth.hpp"
#include "fixtures.hpp"

using namespace fdctmc;

TEST_CASE("DIMACS parsing") {
  auto phi = parse_dimacs("c example\np cnf 2 2\n1 -2 0\n2 0\n");
  CHECK(phi.num_vars == 2);
  REQUIRE(phi.clauses.size() == 2);
  CHECK(phi.clauses[0] == std::vector<int>{1, -2});
  CHECK(phi.clauses[1] == std::vector<int>{2});
  CHECK(phi.total_literals() == 3);

  CHECK_THROWS_AS(parse_dimacs("p cnf 1 1\n0\n"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p cnf 1 1\n2 0\n"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p cnf 1 0\n"), ParseError);
}

TEST_CASE("gadget sizes follow the construction") {
  // (x or not y) and (y): k = 3, positive literals cost 8k+2 states each
  auto phi = parse_dimacs("p cnf 2 2\n1 -2 0\n2 0\n");
  auto g = build_gadget(phi);
  CHECK(g.k == 3);
  CHECK(g.structure.size() == 1 + (8 * 3 + 2) + 3 + (8 * 3 + 2));
  CHECK(g.d_max == 48.0);
  CHECK(g.d_min == 0.01);
  CHECK(g.threshold_x == 17.0 * 9.0 + 0.5);

  auto unit = build_gadget(parse_dimacs("p cnf 1 1\n1 0\n"));
  CHECK(unit.k == 1);
  CHECK(unit.structure.size() == 11);
  CHECK(unit.d_max == 16.0);
}

TEST_CASE("the generated model validates cleanly and stays finite") {
  auto phi = parse_dimacs("p cnf 2 2\n1 -2 0\n2 0\n");
  auto g = build_gadget(phi);
  CHECK(validate(g.structure, g.cost, true).empty());
  auto norm = normalize(g.structure, g.cost);
  CHECK(!detect_infinite(norm));
}

TEST_CASE("one observation class per variable") {
  auto phi = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n");
  auto g = build_gadget(phi);
  CHECK(g.obs.classes.size() == 3);
  // variable 2 occurs twice, its class has two s0 states
  std::size_t sizes = 0;
  for (const auto& cls : g.obs.classes) sizes += cls.size();
  CHECK(sizes == 4);
}

TEST_CASE("assignment strategies sit on the two-point mesh and respect classes") {
  auto phi = parse_dimacs("p cnf 2 2\n1 -2 0\n2 0\n");
  auto g = build_gadget(phi);
  auto d = assignment_strategy(phi, {true, false}, g);
  for (int s : g.structure.fd_state_list()) {
    REQUIRE(d.has(s));
    bool on_mesh = d.at(s) == g.d_min || d.at(s) == g.d_max;
    CHECK(on_mesh);
  }
  for (const auto& cls : g.obs.classes) {
    for (int s : cls) CHECK(d.at(s) == d.at(cls[0]));
  }
  CHECK(d.at(g.init_state) == g.d_min);
  // x true: its s0 runs at d_max; y false: both y literals at d_min
  CHECK(d.at(g.s0_of_clause[0][0]) == g.d_max);
  CHECK(d.at(g.s0_of_clause[0][1]) == g.d_min);
  CHECK(d.at(g.s0_of_clause[1][0]) == g.d_min);

  auto all_false = assignment_strategy(phi, {false, false}, g);
  for (std::size_t ci = 0; ci < g.s0_of_clause.size(); ++ci)
    for (int s : g.s0_of_clause[ci]) CHECK(all_false.at(s) == g.d_min);
}

TEST_CASE("satisfied literals pull the run into the goal quickly") {
  // single positive unit clause, satisfied: most of the cost is one long
  // timeout window of length 16k
  auto phi = parse_dimacs("p cnf 1 1\n1 0\n");
  auto g = build_gadget(phi);
  auto norm = normalize(g.structure, g.cost);
  auto d_true = assignment_strategy(phi, {true}, g);
  auto eval = evaluate_fdctmc(norm, d_true, 1e-9);
  REQUIRE(eval.cost.finite);
  CHECK(eval.cost.value < 17.0);  // 17 k^2 with k = 1

  auto d_false = assignment_strategy(phi, {false}, g);
  auto eval_false = evaluate_fdctmc(norm, d_false, 1e-9);
  // an unsatisfied positive literal at d_min almost never reaches the goal
  if (eval_false.cost.finite) CHECK(eval_false.cost.value > 1000.0);
}

TEST_CASE("assignment certificates verify against the separation threshold") {
  // k = 7 satisfiable instance: (x|y|z) & (x) & (!y) & (!z) & (w)
  auto phi = parse_dimacs("p cnf 4 5\n1 2 3 0\n1 0\n-2 0\n-3 0\n4 0\n");
  auto g = build_gadget(phi);
  REQUIRE(g.k == 7);
  auto norm = normalize(g.structure, g.cost);
  auto cons = constants(g.structure, g.cost);
  SynthOverrides ov;
  ov.delta = 0.01;  // both mesh points 0.01 and 16k are multiples
  ov.kappa = 0.0;

  auto good = assignment_strategy(phi, {true, false, false, true}, g);
  double x = 17.0 * double(g.k) * double(g.k);
  CHECK(verify_certificate(norm, cons, g.obs, g.d_min, g.d_max, good, x, g.epsilon, ov));

  // every timeout at d_min never lets a positive literal finish its chain
  auto all_min = assignment_strategy(phi, {false, false, false, false}, g);
  CHECK(!verify_certificate(norm, cons, g.obs, g.d_min, g.d_max, all_min, x + 1.0, g.epsilon, ov));
}

TEST_CASE("threshold decision on a mesh-feasible unit gadget") {
  // k = 1 keeps the full per-class enumeration tiny: mesh {1..16}, 256
  // strategies over the two acting classes (the branching entry and the s0)
  auto phi = parse_dimacs("p cnf 1 1\n1 0\n");
  auto g = build_gadget(phi);
  auto norm = normalize(g.structure, g.cost);
  auto cons = constants(g.structure, g.cost);
  SynthOverrides ov;
  ov.delta = 1.0;
  ov.kappa = 0.0;
  auto r = synth_partial_obs(norm, cons, g.obs, 1.0, 16.0, 0.5, ov);
  REQUIRE(r.value.finite);
  CHECK(r.strategies_evaluated == 256);
  // a short branching timeout plus one patient chain window lands below the
  // separation threshold 17 k^2 + 1/2
  CHECK(r.value.value < g.threshold_x);
  CHECK(r.value.value > 10.0);
  CHECK(check_threshold(norm, cons, g.obs, 1.0, 16.0, 0.5, g.threshold_x, ov) ==
        ThresholdAnswer::below);
  CHECK(check_threshold(norm, cons, g.obs, 1.0, 16.0, 0.5, 1.0, ov) == ThresholdAnswer::above);
}
