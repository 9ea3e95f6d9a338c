#ifndef FDCTMC_MODEL_HPP
#define FDCTMC_MODEL_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdctmc {

/// Thrown on malformed model files; carries the offending line number (1-based,
/// 0 when the error is not tied to a single line).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& message) : std::runtime_error(message) {}
};

/// A fixed-delay CTMC structure: a uniformized CTMC (common rate, stochastic
/// matrix P) extended with timeout transitions (matrix F) enabled in fd_states.
struct FdCtmcStructure {
  std::vector<std::string> states;        // ordered state identifiers
  double rate = 0.0;                      // common exponential rate, > 0
  std::vector<std::vector<double>> p;     // |S| x |S| row-stochastic
  std::vector<char> fd;                   // fd[s] != 0 iff s has a timeout
  std::vector<std::vector<double>> f;     // |S| x |S|; rows only for fd states
  int init = -1;

  std::size_t size() const { return states.size(); }
  bool is_fd(int s) const { return fd[static_cast<std::size_t>(s)] != 0; }
  int index_of(const std::string& name) const;
  std::vector<int> fd_state_list() const;
};

struct CostStructure {
  std::vector<char> goal;                    // goal[s] != 0 iff s in G
  std::vector<double> rate_cost;             // cost per unit time
  std::vector<std::vector<double>> imp_exp;  // impulse on exp transitions
  std::vector<std::vector<double>> imp_fd;   // impulse on timeout transitions

  bool is_goal(int s) const { return goal[static_cast<std::size_t>(s)] != 0; }
  std::vector<int> goal_list() const;
};

/// Timeout assignment; keys are state indices of the structure the function
/// was written against. States outside the map implicitly carry no timeout.
struct DelayFunction {
  std::map<int, double> delays;

  bool has(int s) const { return delays.count(s) != 0; }
  double at(int s) const { return delays.at(s); }
};

/// Partition of (a subset of) fd states into observation classes. States not
/// mentioned in any block observe alone; complete_partition() makes that
/// explicit.
struct ObservationRelation {
  std::vector<std::vector<int>> classes;

  std::vector<std::vector<int>> complete_partition(const FdCtmcStructure& s) const;
};

struct ParsedModel {
  FdCtmcStructure structure;
  CostStructure cost;
  std::optional<ObservationRelation> obs;
};

struct Diagnostic {
  std::string message;
  std::string location;
};

struct ModelConstants {
  double min_rate = 0.0;  // min over rate costs and positive impulse costs
  double max_rate = 0.0;  // max over the same set
  double min_prob = 0.0;  // min positive entry of P and F
};

/// Normalized form: every fd state is entered either always with a fresh
/// timeout (reset) or always with the running one (keep). States needing both
/// roles are duplicated, the keep copy named "<orig>#keep".
struct NormalizedModel {
  FdCtmcStructure base;
  CostStructure cost;
  std::vector<char> reset;      // over base states; meaningful for fd states
  std::vector<char> keep;
  std::vector<int> mdp_states;  // S' = reset + non-fd + goal, ascending
  std::vector<int> lift;        // base state -> original state index

  bool in_sprime(int s) const;
  bool is_reset(int s) const { return reset[static_cast<std::size_t>(s)] != 0; }
};

ParsedModel parse_model(const std::string& text);

std::string serialize_model(const FdCtmcStructure& structure, const CostStructure& cost,
                            const ObservationRelation* obs = nullptr);

/// Returns one diagnostic per violated invariant; empty means valid. With
/// for_synthesis set, zero rate costs are flagged as well (the synthesis
/// algorithms need a positive rate cost in every state).
std::vector<Diagnostic> validate(const FdCtmcStructure& structure, const CostStructure& cost,
                                 bool for_synthesis = false);

NormalizedModel normalize(const FdCtmcStructure& structure, const CostStructure& cost);

ModelConstants constants(const FdCtmcStructure& structure, const CostStructure& cost);

/// Parses a delays file (lines "<state> <decimal>", '#' comments). Every fd
/// state of the structure must be assigned.
DelayFunction parse_delay_file(const std::string& text, const FdCtmcStructure& structure);

/// Lifts a delay function on original states to the reset states of a
/// normalized model (keep copies inherit the running timeout and get none).
DelayFunction lift_delays(const DelayFunction& d, const NormalizedModel& model);

}  // namespace fdctmc

#endif
