#include "resbm/metrics.hpp"

#include "resbm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace resbm {

namespace {

using Weights = std::vector<std::vector<std::int64_t>>;

// Minimum-cost assignment on the sub-matrix given by `rows` x `cols` (equal sizes).
// Shortest augmenting path with potentials; returns the optimal cost and fills col_of_row.
std::int64_t hungarian_min(const Weights& cost, const std::vector<int>& rows,
                           const std::vector<int>& cols, std::vector<int>* col_of_row) {
  const int n = static_cast<int>(rows.size());
  if (n == 0) return 0;
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  auto c = [&](int i, int j) {
    return cost[static_cast<size_t>(rows[static_cast<size_t>(i - 1)])]
               [static_cast<size_t>(cols[static_cast<size_t>(j - 1)])];
  };
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      std::int64_t delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = c(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::int64_t total = 0;
  if (col_of_row) col_of_row->assign(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    total += c(p[j], j);
    if (col_of_row) (*col_of_row)[static_cast<size_t>(p[j] - 1)] = j - 1;
  }
  return total;
}

}  // namespace

std::vector<int> solve_lsap_max(const Weights& weight) {
  const int k = static_cast<int>(weight.size());
  for (const auto& row : weight) {
    if (static_cast<int>(row.size()) != k) throw ValidationError("LSAP weight matrix is not square");
  }
  std::int64_t wmax = 0;
  for (const auto& row : weight) {
    for (auto w : row) wmax = std::max(wmax, w);
  }
  Weights cost(weight.size(), std::vector<std::int64_t>(weight.size()));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) cost[i][j] = wmax - weight[i][j];
  }

  std::vector<int> rows(static_cast<size_t>(k)), cols(static_cast<size_t>(k));
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  std::int64_t remaining = hungarian_min(cost, rows, cols, nullptr);

  // Fix rows one at a time to the smallest column that keeps the optimum reachable.
  std::vector<int> result(static_cast<size_t>(k), -1);
  for (int r = 0; r < k; ++r) {
    std::vector<int> sub_rows(rows.begin() + r + 1, rows.end());
    for (size_t ci = 0; ci < cols.size(); ++ci) {
      const int c = cols[ci];
      std::vector<int> sub_cols = cols;
      sub_cols.erase(sub_cols.begin() + static_cast<std::ptrdiff_t>(ci));
      const std::int64_t rest = hungarian_min(cost, sub_rows, sub_cols, nullptr);
      if (cost[r][c] + rest == remaining) {
        result[static_cast<size_t>(r)] = c;
        remaining = rest;
        cols = std::move(sub_cols);
        break;
      }
    }
  }
  return result;
}

Weights overlap_counts(const HardAssignment& a, const HardAssignment& b) {
  if (a.n() != b.n()) throw ValidationError("assignments have different node counts");
  Weights o(static_cast<size_t>(a.k()), std::vector<std::int64_t>(static_cast<size_t>(b.k()), 0));
  for (int i = 0; i < a.n(); ++i) ++o[static_cast<size_t>(a[i])][static_cast<size_t>(b[i])];
  return o;
}

std::vector<int> Alignment::candidate_map() const {
  std::vector<int> inv(sigma.size());
  for (size_t q = 0; q < sigma.size(); ++q) inv[static_cast<size_t>(sigma[q])] = static_cast<int>(q);
  return inv;
}

Alignment align_labels(const HardAssignment& reference, const HardAssignment& candidate) {
  if (reference.k() != candidate.k()) throw ValidationError("assignments have different k");
  Alignment out;
  out.sigma = solve_lsap_max(overlap_counts(reference, candidate));
  out.relabeled = candidate.relabeled(out.candidate_map());
  return out;
}

double nmi(const HardAssignment& a, const HardAssignment& b) {
  if (a.n() != b.n()) throw ValidationError("assignments have different node counts");
  const double n = static_cast<double>(a.n());
  if (a.n() == 0) return 1.0;
  const auto o = overlap_counts(a, b);
  const auto sa = a.sizes();
  const auto sb = b.sizes();

  // Terms are sorted before summation so the result does not depend on label order.
  auto entropy = [n](const std::vector<int>& sizes) {
    std::vector<double> terms;
    for (int s : sizes) {
      if (s > 0) {
        const double p = s / n;
        terms.push_back(-p * std::log(p));
      }
    }
    std::sort(terms.begin(), terms.end());
    return std::accumulate(terms.begin(), terms.end(), 0.0);
  };
  std::vector<double> mi_terms;
  for (size_t q = 0; q < o.size(); ++q) {
    for (size_t l = 0; l < o[q].size(); ++l) {
      if (o[q][l] == 0) continue;
      const double nql = static_cast<double>(o[q][l]);
      const double expected = static_cast<double>(sa[q]) * static_cast<double>(sb[l]);
      mi_terms.push_back(nql / n * std::log(n * nql / expected));
    }
  }
  std::sort(mi_terms.begin(), mi_terms.end());
  const double mi = std::accumulate(mi_terms.begin(), mi_terms.end(), 0.0);
  const double ha = entropy(sa);
  const double hb = entropy(sb);
  const double denom = ha + hb;
  if (denom <= 0.0) return 1.0;
  return std::clamp(2.0 * mi / denom, 0.0, 1.0);
}

double correct_classification_rate(const HardAssignment& a, const HardAssignment& b) {
  if (a.n() == 0) return 1.0;
  const Alignment al = align_labels(a, b);
  int agree = 0;
  for (int i = 0; i < a.n(); ++i) agree += (a[i] == al.relabeled[i]);
  return static_cast<double>(agree) / a.n();
}

double t_error(const Matrix& t_hat, const Matrix& t_true) {
  if (t_hat.rows() != t_true.rows() || t_hat.cols() != t_true.cols()) {
    throw ValidationError("transition matrices have different shapes");
  }
  return (t_hat - t_true).norm();
}

double t_median_abs(const Matrix& t_hat, const Matrix& t_true) {
  if (t_hat.rows() != t_true.rows() || t_hat.cols() != t_true.cols()) {
    throw ValidationError("transition matrices have different shapes");
  }
  std::vector<double> d;
  d.reserve(static_cast<size_t>(t_hat.size()));
  for (Eigen::Index i = 0; i < t_hat.size(); ++i) d.push_back(std::abs(t_hat(i) - t_true(i)));
  std::sort(d.begin(), d.end());
  const size_t m = d.size();
  return m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

Matrix module_consistency(const std::vector<HardAssignment>& z_members) {
  if (z_members.empty()) throw ValidationError("module consistency needs at least one member");
  const int n = z_members.front().n();
  Matrix c = Matrix::Zero(n, n);
  for (const auto& z : z_members) {
    if (z.n() != n) throw ValidationError("member assignments have different node counts");
    const Matrix zm = z.matrix();
    c.noalias() += zm * zm.transpose();
  }
  c /= static_cast<double>(z_members.size());
  c.diagonal().setOnes();
  return c;
}

RocCurve roc_auc(const Matrix& adjacency, const Matrix& p_hat) {
  validate_adjacency(adjacency);
  const Eigen::Index n = adjacency.rows();
  if (p_hat.rows() != n || p_hat.cols() != n) throw ValidationError("score matrix has wrong shape");
  struct Pair {
    double score;
    bool edge;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<size_t>(n * (n - 1) / 2));
  std::int64_t pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = p_hat(i, j);
      if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("edge probability outside [0,1]");
      const bool e = adjacency(i, j) == 1.0;
      pos += e;
      pairs.push_back({s, e});
    }
  }
  const std::int64_t neg = static_cast<std::int64_t>(pairs.size()) - pos;
  if (pos == 0 || neg == 0) {
    throw ValidationError("AUC is undefined when all pairs are edges or all are non-edges");
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.score > y.score; });

  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  // Walk tie groups from the highest score down; each group contributes a trapezoid, which is
  // exactly the midrank Mann-Whitney statistic.
  std::int64_t tp = 0, fp = 0;
  double area = 0.0;
  size_t i = 0;
  while (i < pairs.size()) {
    size_t j = i;
    std::int64_t gtp = 0, gfp = 0;
    while (j < pairs.size() && pairs[j].score == pairs[i].score) {
      (pairs[j].edge ? gtp : gfp) += 1;
      ++j;
    }
    area += static_cast<double>(gfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(gtp));
    tp += gtp;
    fp += gfp;
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    i = j;
  }
  roc.auc = area / (static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

Matrix edge_probabilities(const HardAssignment& z, const Matrix& pi) {
  const int n = z.n();
  Matrix p(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) p(i, j) = i == j ? 0.0 : pi(z[i], z[j]);
  }
  return p;
}

}  // namespace resbm
