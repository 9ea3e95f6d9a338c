#ifndef FDCTMC_LINALG_HPP
#define FDCTMC_LINALG_HPP

#include <stdexcept>
#include <vector>

namespace fdctmc {

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError() : std::runtime_error("singular matrix in linear solve") {}
};

/// Dense LU factorization with partial pivoting. One factorization serves any
/// number of right-hand sides; solve() runs one step of iterative refinement
/// against the retained copy of A so residuals stay near machine precision.
class LuSolver {
 public:
  LuSolver(std::vector<double> a, int n);

  /// Solves A x = b. Throws SingularMatrixError if A is numerically singular.
  std::vector<double> solve(const std::vector<double>& b) const;

  double last_residual() const { return last_residual_; }
  int size() const { return n_; }

 private:
  void substitute(std::vector<double>& x) const;

  int n_;
  std::vector<double> a_;   // original matrix, row-major
  std::vector<double> lu_;  // packed L\U factors
  std::vector<int> perm_;
  mutable double last_residual_ = 0.0;
};

}  // namespace fdctmc

#endif
