#include "fdctmc/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

namespace fdctmc {

LuSolver::LuSolver(std::vector<double> a, int n) : n_(n), a_(a), lu_(std::move(a)) {
  perm_.resize(static_cast<std::size_t>(n));
  std::iota(perm_.begin(), perm_.end(), 0);
  auto at = [&](int r, int c) -> double& {
    return lu_[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(c)];
  };
  for (int k = 0; k < n_; ++k) {
    int piv = k;
    double best = std::fabs(at(k, k));
    for (int r = k + 1; r < n_; ++r) {
      double v = std::fabs(at(r, k));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) throw SingularMatrixError();
    if (piv != k) {
      for (int c = 0; c < n_; ++c) std::swap(at(k, c), at(piv, c));
      std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(piv)]);
    }
    double d = at(k, k);
    for (int r = k + 1; r < n_; ++r) {
      double m = at(r, k) / d;
      at(r, k) = m;
      if (m != 0.0)
        for (int c = k + 1; c < n_; ++c) at(r, c) -= m * at(k, c);
    }
  }
}

void LuSolver::substitute(std::vector<double>& x) const {
  auto at = [&](int r, int c) {
    return lu_[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(c)];
  };
  std::vector<double> y(static_cast<std::size_t>(n_));
  for (int r = 0; r < n_; ++r) y[static_cast<std::size_t>(r)] = x[static_cast<std::size_t>(perm_[static_cast<std::size_t>(r)])];
  for (int r = 0; r < n_; ++r) {
    double s = y[static_cast<std::size_t>(r)];
    for (int c = 0; c < r; ++c) s -= at(r, c) * y[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = s;
  }
  for (int r = n_ - 1; r >= 0; --r) {
    double s = y[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < n_; ++c) s -= at(r, c) * y[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = s / at(r, r);
  }
  x = std::move(y);
}

std::vector<double> LuSolver::solve(const std::vector<double>& b) const {
  std::vector<double> x = b;
  substitute(x);
  // one refinement pass keeps the residual at the level the callers assert on
  double norm_b = 0.0;
  for (double v : b) norm_b = std::max(norm_b, std::fabs(v));
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> r(b);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* row = &a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_)];
      for (int j = 0; j < n_; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
      r[static_cast<std::size_t>(i)] -= s;
    }
    double norm_r = 0.0;
    for (double v : r) norm_r = std::max(norm_r, std::fabs(v));
    last_residual_ = norm_r;
    if (norm_r <= 1e-12 * (1.0 + norm_b)) break;
    substitute(r);
    for (int i = 0; i < n_; ++i) x[static_cast<std::size_t>(i)] += r[static_cast<std::size_t>(i)];
  }
  return x;
}

}  // namespace fdctmc
