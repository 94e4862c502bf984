#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ncsim {

// Minimal dense two-phase simplex for the small LPs this project needs
// (hypergraph flow feasibility). Bland's rule throughout, so no cycling.
//
//   minimize c.x  subject to  A x (<=|=|>=) b,  x >= 0
class SimplexSolver {
public:
  enum class Relation { LessEq, Equal, GreaterEq };
  enum class Status { Optimal, Infeasible, Unbounded };

  struct Result {
    Status status = Status::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
  };

  explicit SimplexSolver(std::size_t num_vars) : n_(num_vars), c_(num_vars, 0.0) {}

  void set_objective(std::size_t var, double coeff) { c_.at(var) = coeff; }

  void add_constraint(const std::vector<std::pair<std::size_t, double>>& terms,
                      Relation rel, double rhs) {
    Row r;
    r.a.assign(n_, 0.0);
    for (const auto& [j, v] : terms) r.a.at(j) += v;
    r.rel = rel;
    r.rhs = rhs;
    rows_.push_back(std::move(r));
  }

  Result solve() const {
    constexpr double eps = 1e-9;
    const std::size_t m = rows_.size();

    // Normalize to b >= 0 and count auxiliary columns.
    std::vector<Row> rows = rows_;
    for (auto& r : rows) {
      if (r.rhs < 0.0) {
        for (auto& v : r.a) v = -v;
        r.rhs = -r.rhs;
        if (r.rel == Relation::LessEq) r.rel = Relation::GreaterEq;
        else if (r.rel == Relation::GreaterEq) r.rel = Relation::LessEq;
      }
    }
    std::size_t n_slack = 0, n_art = 0;
    for (const auto& r : rows) {
      if (r.rel != Relation::Equal) ++n_slack;
      if (r.rel != Relation::LessEq) ++n_art;
    }
    const std::size_t total = n_ + n_slack + n_art;
    const std::size_t art_begin = n_ + n_slack;

    // tableau: m rows x (total + 1), last column is rhs
    std::vector<std::vector<double>> t(m, std::vector<double>(total + 1, 0.0));
    std::vector<std::size_t> basis(m);
    std::size_t slack_col = n_, art_col = art_begin;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n_; ++j) t[i][j] = rows[i].a[j];
      t[i][total] = rows[i].rhs;
      switch (rows[i].rel) {
      case Relation::LessEq:
        t[i][slack_col] = 1.0;
        basis[i] = slack_col++;
        break;
      case Relation::GreaterEq:
        t[i][slack_col++] = -1.0;
        t[i][art_col] = 1.0;
        basis[i] = art_col++;
        break;
      case Relation::Equal:
        t[i][art_col] = 1.0;
        basis[i] = art_col++;
        break;
      }
    }

    std::vector<bool> live_row(m, true);

    // Phase 1: minimize the sum of artificials.
    if (n_art > 0) {
      std::vector<double> obj(total, 0.0);
      for (std::size_t j = art_begin; j < total; ++j) obj[j] = 1.0;
      if (!optimize(t, basis, live_row, obj, eps))
        return {Status::Unbounded, {}, 0.0}; // cannot happen for phase 1
      double p1 = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        if (live_row[i] && basis[i] >= art_begin) p1 += t[i][total];
      if (p1 > 1e-7) return {Status::Infeasible, {}, 0.0};
      // Drive remaining (zero-valued) artificials out of the basis.
      for (std::size_t i = 0; i < m; ++i) {
        if (!live_row[i] || basis[i] < art_begin) continue;
        std::size_t enter = total;
        for (std::size_t j = 0; j < art_begin; ++j)
          if (std::abs(t[i][j]) > eps) { enter = j; break; }
        if (enter == total) {
          live_row[i] = false; // redundant constraint
        } else {
          pivot(t, basis, live_row, i, enter);
        }
      }
    }

    // Phase 2: original objective over structural + slack columns.
    std::vector<double> obj(total, 0.0);
    for (std::size_t j = 0; j < n_; ++j) obj[j] = c_[j];
    if (!optimize(t, basis, live_row, obj, eps, art_begin))
      return {Status::Unbounded, {}, 0.0};

    Result res;
    res.status = Status::Optimal;
    res.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (live_row[i] && basis[i] < n_) res.x[basis[i]] = t[i][total];
    for (std::size_t j = 0; j < n_; ++j) res.objective += c_[j] * res.x[j];
    return res;
  }

private:
  struct Row {
    std::vector<double> a;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
  };

  static void pivot(std::vector<std::vector<double>>& t,
                    std::vector<std::size_t>& basis,
                    const std::vector<bool>& live_row, std::size_t pr,
                    std::size_t pc) {
    const std::size_t width = t[pr].size();
    const double pv = t[pr][pc];
    for (std::size_t j = 0; j < width; ++j) t[pr][j] /= pv;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == pr || !live_row[i]) continue;
      const double f = t[i][pc];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) t[i][j] -= f * t[pr][j];
    }
    basis[pr] = pc;
  }

  // Bland's rule: entering = lowest-index column with negative reduced cost,
  // leaving = lowest-index basic variable among minimum-ratio rows.
  // Returns false on unboundedness. Columns >= col_limit are excluded.
  static bool optimize(std::vector<std::vector<double>>& t,
                       std::vector<std::size_t>& basis,
                       const std::vector<bool>& live_row,
                       const std::vector<double>& obj, double eps,
                       std::size_t col_limit = SIZE_MAX) {
    const std::size_t total = obj.size();
    const std::size_t limit = col_limit < total ? col_limit : total;
    for (;;) {
      // reduced costs: obj_j - sum_i obj_basis(i) * t[i][j]
      std::vector<double> y(t.size(), 0.0);
      for (std::size_t i = 0; i < t.size(); ++i)
        if (live_row[i]) y[i] = obj[basis[i]];
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j) {
        double red = obj[j];
        for (std::size_t i = 0; i < t.size(); ++i)
          if (live_row[i] && t[i][j] != 0.0) red -= y[i] * t[i][j];
        if (red < -eps) { enter = j; break; }
      }
      if (enter == limit) return true; // optimal
      std::size_t leave = t.size();
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!live_row[i] || t[i][enter] <= eps) continue;
        const double ratio = t[i].back() / t[i][enter];
        if (ratio < best_ratio - eps ||
            (ratio < best_ratio + eps &&
             (leave == t.size() || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave == t.size()) return false; // unbounded
      pivot(t, basis, live_row, leave, enter);
    }
  }

  std::size_t n_;
  std::vector<double> c_;
  std::vector<Row> rows_;
};

} // namespace ncsim
