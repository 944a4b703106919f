// Independent reference implementations used only by the test suites. None
// of these share solver or metric code paths with the library: the QP oracle
// is dense projected-gradient ascent, the rank-test oracle enumerates label
// assignments, and the AUC oracle counts concordant pairs directly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "speechmark/rng.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Dense QP oracle: maximize sum a - 1/2 a'Qa over {0 <= a <= c, y'a = 0}
// by projected gradient ascent run to stagnation. Q_ij = y_i y_j K_ij.

// Projection onto the box intersected with the hyperplane, via bisection on
// the shift t: x(t) = clip(v + t*y) has nondecreasing y'x(t).
inline std::vector<double> project_feasible(std::vector<double> v,
                                            const std::vector<int>& y, double c) {
  const std::size_t n = v.size();
  auto constraint = [&](double t) {
    double h = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double yk = static_cast<double>(y[k]);
      const double x = std::clamp(v[k] + t * yk, 0.0, c);
      h += yk * x;
    }
    return h;
  };
  double span = c + 1.0;
  for (double x : v) span = std::max(span, std::fabs(x) + c + 1.0);
  double lo = -span, hi = span;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (constraint(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = std::clamp(v[k] + t * static_cast<double>(y[k]), 0.0, c);
  return v;
}

inline double dual_objective_dense(const std::vector<double>& kernel,
                                   const std::vector<int>& y,
                                   const std::vector<double>& a) {
  const std::size_t n = a.size();
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double qa = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      qa += a[j] * static_cast<double>(y[j]) * kernel[i * n + j];
    obj += a[i] - 0.5 * a[i] * static_cast<double>(y[i]) * qa;
  }
  return obj;
}

struct QpOracleResult {
  std::vector<double> alpha;
  double objective = 0.0;
};

inline QpOracleResult qp_oracle(const std::vector<double>& kernel,
                                const std::vector<int>& y, double c,
                                std::size_t max_iterations = 400000) {
  const std::size_t n = y.size();
  double frob = 0.0;
  for (double v : kernel) frob += v * v;
  const double step = 1.0 / (std::sqrt(frob) + 1.0);

  std::vector<double> a(n, 0.0), grad(n), trial(n);
  double best = dual_objective_dense(kernel, y, a);
  std::size_t since_improvement = 0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double qa = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        qa += a[j] * static_cast<double>(y[j]) * kernel[i * n + j];
      grad[i] = 1.0 - static_cast<double>(y[i]) * qa;
    }
    for (std::size_t i = 0; i < n; ++i) trial[i] = a[i] + step * grad[i];
    a = project_feasible(std::move(trial), y, c);
    trial.assign(n, 0.0);
    const double obj = dual_objective_dense(kernel, y, a);
    if (obj > best + 1e-15 * (1.0 + std::fabs(best))) {
      best = obj;
      since_improvement = 0;
    } else {
      if (++since_improvement > 500) break;
    }
  }
  return {std::move(a), best};
}

// ---------------------------------------------------------------------------
// Exact two-sided Mann-Whitney p-value by brute-force enumeration of every
// C(n1+n2, n1) assignment of pooled values to the first sample. Tie-free
// inputs only. The observed U is counted directly from value comparisons.

inline double mw_enum_two_sided_p(const std::vector<double>& a,
                                  const std::vector<double>& b) {
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  long long u_obs2 = 0;  // 2*U to stay integral
  for (double x : a)
    for (double y : b) u_obs2 += (x > y) ? 2 : (x == y ? 1 : 0);

  std::vector<double> pool;
  pool.insert(pool.end(), a.begin(), a.end());
  pool.insert(pool.end(), b.begin(), b.end());
  std::sort(pool.begin(), pool.end());

  // Choose which sorted positions belong to the first sample; U is then the
  // number of (chosen, unchosen) inversions.
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(n1), true);
  std::sort(pick.begin(), pick.end());  // lexicographically first arrangement

  std::uint64_t le = 0, ge = 0, total = 0;
  do {
    long long u2 = 0;
    long long unchosen_before = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (pick[pos])
        u2 += 2 * unchosen_before;
      else
        ++unchosen_before;
    }
    ++total;
    if (u2 <= u_obs2) ++le;
    if (u2 >= u_obs2) ++ge;
  } while (std::next_permutation(pick.begin(), pick.end()));

  const double tail = static_cast<double>(std::min(le, ge));
  return std::min(1.0, 2.0 * tail / static_cast<double>(total));
}

// ---------------------------------------------------------------------------
// AUC by direct pairwise concordance counting.

inline double auc_concordance(const std::vector<double>& scores,
                              const std::vector<int>& truth) {
  double num = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 1) continue;
    ++n_pos;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (truth[j] == 1) continue;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  for (int t : truth)
    if (t != 1) ++n_neg;
  return num / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ---------------------------------------------------------------------------
// Smallest eigenvalue of a small symmetric matrix by cyclic Jacobi rotation.

inline double smallest_eigenvalue(std::vector<double> m, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += m[p * n + q] * m[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m[p * n + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = 0.5 * std::atan2(2.0 * apq, m[q * n + q] - m[p * n + p]);
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m[k * n + p], mkq = m[k * n + q];
          m[k * n + p] = c * mkp - s * mkq;
          m[k * n + q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m[p * n + k], mqk = m[q * n + k];
          m[p * n + k] = c * mpk - s * mqk;
          m[q * n + k] = s * mpk + c * mqk;
        }
      }
    }
  }
  double lo = m[0];
  for (std::size_t i = 1; i < n; ++i) lo = std::min(lo, m[i * n + i]);
  return lo;
}

// ---------------------------------------------------------------------------
// Random instance helpers.

struct SvmInstance {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};

inline SvmInstance random_instance(speechmark::CounterRng& rng, std::size_t n,
                                   std::size_t dim) {
  SvmInstance inst;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(dim);
    for (auto& x : p) x = 2.0 * rng.next_symmetric();
    inst.points.push_back(std::move(p));
    inst.labels.push_back(rng.next_unit() < 0.5 ? 1 : -1);
  }
  // both classes must appear
  inst.labels[0] = 1;
  inst.labels[n - 1] = -1;
  return inst;
}

}  // namespace oracles
