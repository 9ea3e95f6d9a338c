#ifndef FDCTMC_SATGEN_HPP
#define FDCTMC_SATGEN_HPP

#include <string>
#include <vector>

#include "fdctmc/model.hpp"

namespace fdctmc {

struct CnfFormula {
  int num_vars = 0;
  std::vector<std::vector<int>> clauses;  // signed 1-based literals

  int total_literals() const;
};

CnfFormula parse_dimacs(const std::string& text);

/// The clause-cycle model family whose bounded partial-observation optimum
/// separates satisfiable from unsatisfiable formulas at threshold 17k^2 + 1/2
/// (k = total literal count, reliable for k >= 7).
struct SatGadget {
  FdCtmcStructure structure;
  CostStructure cost;
  ObservationRelation obs;  // one class per variable, over the s0 states
  double d_min = 0.01;
  double d_max = 0.0;  // 16 k
  double threshold_x = 0.0;
  double epsilon = 0.5;
  int k = 0;

  int init_state = -1;
  std::vector<std::vector<int>> s0_of_clause;   // per clause, per literal
  std::vector<std::vector<int>> var_of_clause;  // parallel: variable index
};

SatGadget build_gadget(const CnfFormula& phi);

/// Delay function induced by a truth assignment: d_max on s0 states of true
/// variables, d_min everywhere else.
DelayFunction assignment_strategy(const CnfFormula& phi, const std::vector<bool>& nu,
                                  const SatGadget& gadget);

}  // namespace fdctmc

#endif
