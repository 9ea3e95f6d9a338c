#include "fdctmc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdctmc {

namespace {

// Kahan-compensated accumulator for long Poisson sums.
struct Accumulator {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::vector<double> sparse_apply(const std::vector<double>& v,
                                 const std::vector<std::vector<std::pair<int, double>>>& rows) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t u = 0; u < v.size(); ++u) {
    double w = v[u];
    if (w == 0.0) continue;
    for (const auto& [t, p] : rows[u]) out[static_cast<std::size_t>(t)] += w * p;
  }
  return out;
}

double dot(const std::vector<double>& v, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
  return s;
}

}  // namespace

double KernelRow::prob_of(int state) const {
  for (const auto& [t, p] : probs)
    if (t == state) return p;
  return 0.0;
}

double KernelRow::prob_sum() const {
  double s = 0.0;
  for (const auto& [t, p] : probs) s += p;
  return s;
}

SubordinatedChain build_subordinated(const NormalizedModel& model, int s) {
  if (!model.in_sprime(s)) throw ModelError("subordinated chain entry must lie in S'");
  if (!model.base.fd[static_cast<std::size_t>(s)])
    throw ModelError("subordinated chain entry must be a timeout state");
  const auto& st = model.base;
  const auto& cost = model.cost;
  std::size_t m = st.size();
  SubordinatedChain c;
  c.source = s;
  c.entry = static_cast<int>(m);
  c.dim = static_cast<int>(m) + 1;
  c.p_rows.resize(static_cast<std::size_t>(c.dim));
  c.f_rows.resize(static_cast<std::size_t>(c.dim));
  c.rate_cost.assign(static_cast<std::size_t>(c.dim), 0.0);
  c.jp.assign(static_cast<std::size_t>(c.dim), 0.0);
  c.jf.assign(static_cast<std::size_t>(c.dim), 0.0);
  c.absorbing.assign(static_cast<std::size_t>(c.dim), 0);

  auto fill_live = [&](std::size_t slot, std::size_t rows_of) {
    for (std::size_t t = 0; t < m; ++t) {
      if (st.p[rows_of][t] > 0.0) {
        c.p_rows[slot].push_back({static_cast<int>(t), st.p[rows_of][t]});
        c.jp[slot] += st.p[rows_of][t] * cost.imp_exp[rows_of][t];
      }
      if (st.fd[rows_of] && st.f[rows_of][t] > 0.0) {
        c.f_rows[slot].push_back({static_cast<int>(t), st.f[rows_of][t]});
        c.jf[slot] += st.f[rows_of][t] * cost.imp_fd[rows_of][t];
      }
    }
    c.rate_cost[slot] = cost.rate_cost[rows_of];
  };

  for (std::size_t v = 0; v < m; ++v) {
    if (model.in_sprime(static_cast<int>(v))) {
      c.absorbing[v] = 1;
      c.p_rows[v] = {{static_cast<int>(v), 1.0}};
      c.f_rows[v] = {{static_cast<int>(v), 1.0}};
    } else {
      fill_live(v, v);
    }
  }
  fill_live(static_cast<std::size_t>(c.entry), static_cast<std::size_t>(s));
  return c;
}

PoissonTruncation poisson_terms(double lambda_d, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
  if (lambda_d < 0.0) throw std::invalid_argument("lambda_d must be nonnegative");
  PoissonTruncation out;
  out.lambda_d = lambda_d;
  if (lambda_d == 0.0) {
    out.terms = {1.0};
    out.tail_bound = 0.0;
    return out;
  }
  int mode = static_cast<int>(std::floor(lambda_d));
  double log_mode = mode * std::log(lambda_d) - lambda_d - std::lgamma(double(mode) + 1.0);
  double psi_mode = std::exp(log_mode);

  out.terms.assign(static_cast<std::size_t>(mode) + 1, 0.0);
  out.terms[static_cast<std::size_t>(mode)] = psi_mode;
  for (int i = mode - 1; i >= 0; --i) {
    double next = out.terms[static_cast<std::size_t>(i) + 1] * (double(i) + 1.0) / lambda_d;
    out.terms[static_cast<std::size_t>(i)] = next;
    if (next == 0.0) {
      // everything below has underflown as well
      for (int j = i - 1; j >= 0; --j) out.terms[static_cast<std::size_t>(j)] = 0.0;
      break;
    }
  }

  Accumulator cum;
  for (double t : out.terms) cum.add(t);
  double target = theta / 2.0;
  double psi = psi_mode;
  int i = mode;
  long cap = mode + 1000 + static_cast<long>(30.0 * std::sqrt(lambda_d + 100.0));
  while (1.0 - cum.sum > target && i < cap) {
    ++i;
    psi *= lambda_d / double(i);
    out.terms.push_back(psi);
    cum.add(psi);
    if (psi == 0.0) break;
  }
  out.tail_bound = std::max(0.0, 1.0 - cum.sum);
  return out;
}

KernelRow kernel_row(const NormalizedModel& model, int s, double d, double theta) {
  SubordinatedChain chain = build_subordinated(model, s);
  return kernel_row(model, chain, d, theta);
}

KernelRow kernel_row(const NormalizedModel& model, const SubordinatedChain& chain, double d,
                     double theta) {
  if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("delay must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
  double lambda = model.base.rate;
  double lambda_d = lambda * d;
  auto dim = static_cast<std::size_t>(chain.dim);

  double r_max = 0.0, jp_max = 0.0, jf_max = 0.0;
  for (std::size_t v = 0; v < dim; ++v) {
    if (chain.absorbing[v]) continue;
    r_max = std::max(r_max, chain.rate_cost[v]);
    jp_max = std::max(jp_max, chain.jp[v]);
    jf_max = std::max(jf_max, chain.jf[v]);
  }
  // the cost tail grows linearly in the term index, so the truncation target
  // shrinks by the worst-case per-term cost coefficient
  double cost_coeff = d * r_max + jf_max + lambda_d * jp_max;
  double theta_eff = theta / std::max(1.0, 2.0 * cost_coeff);

  PoissonTruncation pois;
  double prob_err = 0.0, cost_err = 0.0;
  for (int attempt = 0;; ++attempt) {
    pois = poisson_terms(lambda_d, theta_eff);
    double tail = pois.tail_bound;
    double tail_prev = tail + (pois.terms.empty() ? 0.0 : pois.terms.back());
    prob_err = tail;
    cost_err = (d * r_max + jf_max) * tail + jp_max * lambda_d * tail_prev;
    if (std::max(prob_err, cost_err) <= theta / 2.0) break;
    if (attempt >= 6)
      throw ModelError("cannot certify the requested kernel truncation error");
    theta_eff /= 16.0;
  }

  std::vector<double> v(dim, 0.0);
  v[static_cast<std::size_t>(chain.entry)] = 1.0;
  std::vector<double> weighted(dim, 0.0);
  double running_rate = 0.0;   // sum_{j<=i} v_j . R
  double running_jp = 0.0;     // sum_{j<i} v_j . J_P
  Accumulator cost_acc;
  for (std::size_t i = 0; i < pois.terms.size(); ++i) {
    double psi = pois.terms[i];
    double a_i = dot(v, chain.rate_cost);
    double c_i = dot(v, chain.jf);
    running_rate += a_i;
    if (psi != 0.0) {
      cost_acc.add(psi * (d * running_rate / (double(i) + 1.0) + running_jp + c_i));
      for (std::size_t u = 0; u < dim; ++u) weighted[u] += psi * v[u];
    }
    running_jp += dot(v, chain.jp);
    if (i + 1 < pois.terms.size()) v = sparse_apply(v, chain.p_rows);
  }
  std::vector<double> dist = sparse_apply(weighted, chain.f_rows);

  KernelRow row;
  row.source = chain.source;
  row.delay = d;
  for (std::size_t t = 0; t + 1 < dim; ++t) {
    if (dist[t] <= 0.0) continue;
    if (!model.in_sprime(static_cast<int>(t)))
      throw ModelError("one-step mass escaped S'");
    row.probs.push_back({static_cast<int>(t), dist[t]});
  }
  row.cost = std::max(0.0, cost_acc.sum);
  row.abs_error = std::max(prob_err, cost_err);
  return row;
}

KernelRow kernel_row_exp(const NormalizedModel& model, int s) {
  const auto& st = model.base;
  auto us = static_cast<std::size_t>(s);
  if (st.fd[us]) throw ModelError("exp-only row requested for a timeout state");
  KernelRow row;
  row.source = s;
  row.delay = std::numeric_limits<double>::infinity();
  double cost = model.cost.rate_cost[us] / st.rate;
  for (std::size_t t = 0; t < st.size(); ++t) {
    if (st.p[us][t] <= 0.0) continue;
    if (!model.in_sprime(static_cast<int>(t)))
      throw ModelError("exp transition from a non-fd state must target S'");
    row.probs.push_back({static_cast<int>(t), st.p[us][t]});
    cost += st.p[us][t] * model.cost.imp_exp[us][t];
  }
  row.cost = cost;
  row.abs_error = 0.0;
  return row;
}

KernelRow round_row(const KernelRow& row, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (row.abs_error > kappa / 2.0)
    throw std::invalid_argument("row error certificate exceeds kappa/2");

  auto up_multiple = [&](double x) {
    return std::ceil(x / kappa - 1e-9) * kappa;
  };
  auto down_multiple = [&](double x) {
    return std::floor(x / kappa + 1e-9) * kappa;
  };

  KernelRow out;
  out.source = row.source;
  out.delay = row.delay;
  out.cost = std::max(0.0, up_multiple(row.cost));
  out.abs_error = row.abs_error + kappa;

  if (row.probs.empty()) return out;
  std::size_t imax = 0;
  for (std::size_t i = 1; i < row.probs.size(); ++i)
    if (row.probs[i].second > row.probs[imax].second) imax = i;

  double missing = std::max(0.0, 1.0 - row.prob_sum());
  double cap = std::max(0.0, kappa - missing);
  double absorbed = 0.0;
  double others_sum = 0.0;
  out.probs = row.probs;
  for (std::size_t i = 0; i < row.probs.size(); ++i) {
    if (i == imax) continue;
    double p = row.probs[i].second;
    double up = up_multiple(p);
    double down = down_multiple(p);
    double chosen = up;
    // everything is rounded up unless the largest entry would have to absorb
    // more than kappa; zero survivors are never created
    if (absorbed + (up - p) > cap && down > 0.0) chosen = down;
    absorbed += chosen - p;
    out.probs[i].second = chosen;
    others_sum += chosen;
  }
  double rmax = 1.0 - others_sum;
  if (rmax <= 0.0)
    throw ModelError("kappa too large: the largest probability would not stay positive");
  out.probs[imax].second = rmax;
  return out;
}

}  // namespace fdctmc
