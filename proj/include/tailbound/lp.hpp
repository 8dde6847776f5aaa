#pragma once

// Dense bounded-variable revised simplex.
//
// Two phases (artificial variables, then the real objective) over an
// explicit basis inverse with rank-one updates and periodic refactorization.
// Pricing is Dantzig's rule; after a run of degenerate pivots it falls back
// to Bland's smallest-index rule until the objective moves again, which
// rules out cycling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "tailbound/errors.hpp"

namespace tailbound::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { less_equal, equal };

struct Row {
  std::vector<double> coefficients;
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

// minimize objective . x  s.t.  rows,  lower <= x <= upper.
// Bounds default to [0, +inf); either side may be infinite.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<double> lower;
  std::vector<double> upper;

  explicit LinearProgram(std::size_t num_variables = 0)
      : objective(num_variables, 0.0), lower(num_variables, 0.0), upper(num_variables, kInf) {}

  std::size_t num_variables() const noexcept { return objective.size(); }

  void add_row(std::vector<double> coefficients, Relation relation, double rhs) {
    rows.push_back({std::move(coefficients), relation, rhs});
  }
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct LpSolution {
  Status status = Status::iteration_limit;
  std::vector<double> x;
  double objective_value = 0.0;
  // d(objective)/d(rhs_i) at the optimum, one per row.
  std::vector<double> duals;
  std::size_t iterations = 0;
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-11;
  // 0 means 50 * (rows + columns).
  std::size_t max_iterations = 0;
  std::size_t refactor_interval = 64;
  std::size_t degenerate_streak = 32;
};

namespace detail {

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverOptions& opt) : opt_(opt) {
    n_ = lp.num_variables();
    m_ = lp.rows.size();
    if (lp.lower.size() != n_ || lp.upper.size() != n_) {
      throw ParameterError("bound vectors must match the objective length");
    }
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::isnan(lp.lower[j]) || std::isnan(lp.upper[j]) || lp.lower[j] > lp.upper[j] ||
          !std::isfinite(lp.objective[j])) {
        throw ParameterError("malformed variable bounds or objective");
      }
    }

    // Row scaling by the largest coefficient magnitude.
    scale_.assign(m_, 1.0);
    cols_.assign(n_ * m_, 0.0);
    b_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp.rows[i];
      if (row.coefficients.size() != n_) {
        throw ParameterError("row " + std::to_string(i) + " width differs from the objective");
      }
      if (!std::isfinite(row.rhs)) throw ParameterError("row right-hand side must be finite");
      double big = 0.0;
      for (double a : row.coefficients) {
        if (!std::isfinite(a)) throw ParameterError("non-finite constraint coefficient");
        big = std::max(big, std::abs(a));
      }
      if (big > 0.0) scale_[i] = 1.0 / big;
      for (std::size_t j = 0; j < n_; ++j) cols_[j * m_ + i] = row.coefficients[j] * scale_[i];
      b_[i] = row.rhs * scale_[i];
    }

    // Variables: structural, then one slack per <= row, then artificials.
    for (std::size_t j = 0; j < n_; ++j) {
      vars_.push_back({lp.lower[j], lp.upper[j], lp.objective[j], true, 0, 1.0});
    }
    std::vector<std::size_t> slack_of(m_, npos);
    for (std::size_t i = 0; i < m_; ++i) {
      if (lp.rows[i].relation == Relation::less_equal) {
        slack_of[i] = vars_.size();
        vars_.push_back({0.0, kInf, 0.0, false, i, 1.0});
      }
    }
    num_real_ = vars_.size();

    x_.assign(vars_.size(), 0.0);
    for (std::size_t j = 0; j < num_real_; ++j) x_[j] = resting_value(j);

    std::vector<double> residual = b_;
    for (std::size_t j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      const double* col = &cols_[j * m_];
      for (std::size_t i = 0; i < m_; ++i) residual[i] -= col[i] * x_[j];
    }

    basis_.assign(m_, npos);
    is_basic_.assign(vars_.size(), false);
    for (std::size_t i = 0; i < m_; ++i) {
      if (slack_of[i] != npos && residual[i] >= 0.0) {
        basis_[i] = slack_of[i];
      } else {
        const double sign = residual[i] >= 0.0 ? 1.0 : -1.0;
        basis_[i] = vars_.size();
        vars_.push_back({0.0, kInf, 0.0, false, i, sign});
        x_.push_back(0.0);
        is_basic_.push_back(false);
      }
      is_basic_[basis_[i]] = true;
      x_[basis_[i]] = std::abs(residual[i]);
    }

    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0 / vars_[basis_[i]].sign;

    max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * (m_ + num_real_);
    if (max_iter_ == 0) max_iter_ = 1;
  }

  LpSolution run() {
    LpSolution sol;
    if (vars_.size() > num_real_) {
      std::vector<double> phase1(vars_.size(), 0.0);
      for (std::size_t j = num_real_; j < vars_.size(); ++j) phase1[j] = 1.0;
      const Status s = iterate(phase1);
      if (s == Status::iteration_limit) return finish(sol, s);
      double infeas = 0.0;
      for (std::size_t j = num_real_; j < vars_.size(); ++j) infeas += x_[j];
      if (s == Status::unbounded || infeas > opt_.feasibility_tol * static_cast<double>(m_ + 1)) {
        return finish(sol, Status::infeasible);
      }
      // Artificials are pinned at zero from here on; basic ones leave when
      // they block.
      for (std::size_t j = num_real_; j < vars_.size(); ++j) {
        vars_[j].upper = 0.0;
        if (!is_basic_[j]) x_[j] = 0.0;
      }
    }
    std::vector<double> phase2(vars_.size(), 0.0);
    for (std::size_t j = 0; j < n_; ++j) phase2[j] = vars_[j].cost;
    return finish(sol, iterate(phase2));
  }

 private:
  struct Var {
    double lower;
    double upper;
    double cost;
    bool structural;
    std::size_t row;  // unit column row for slacks/artificials
    double sign;      // unit column sign
  };

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double resting_value(std::size_t j) const {
    if (std::isfinite(vars_[j].lower)) return vars_[j].lower;
    if (std::isfinite(vars_[j].upper)) return vars_[j].upper;
    return 0.0;
  }

  double dot_column(std::size_t j, const std::vector<double>& y) const {
    const auto& v = vars_[j];
    if (!v.structural) return v.sign * y[v.row];
    const double* col = &cols_[j * m_];
    double s = 0.0;
    for (std::size_t i = 0; i < m_; ++i) s += col[i] * y[i];
    return s;
  }

  // out = B^{-1} a_j
  void ftran(std::size_t j, std::vector<double>& out) const {
    out.assign(m_, 0.0);
    const auto& v = vars_[j];
    if (!v.structural) {
      for (std::size_t i = 0; i < m_; ++i) out[i] = binv_[i * m_ + v.row] * v.sign;
      return;
    }
    const double* col = &cols_[j * m_];
    for (std::size_t k = 0; k < m_; ++k) {
      const double a = col[k];
      if (a == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) out[i] += binv_[i * m_ + k] * a;
    }
  }

  // Rebuilds B^{-1} by Gauss-Jordan elimination and recomputes x_B.
  bool refactor() {
    std::vector<double> mat(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& v = vars_[basis_[i]];
      if (v.structural) {
        const double* col = &cols_[basis_[i] * m_];
        for (std::size_t r = 0; r < m_; ++r) mat[r * m_ + i] = col[r];
      } else {
        mat[v.row * m_ + i] = v.sign;
      }
    }
    std::vector<double> inv(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < m_; ++r) {
        if (std::abs(mat[r * m_ + c]) > std::abs(mat[piv * m_ + c])) piv = r;
      }
      if (std::abs(mat[piv * m_ + c]) < 1e-13) return false;
      if (piv != c) {
        for (std::size_t k = 0; k < m_; ++k) {
          std::swap(mat[piv * m_ + k], mat[c * m_ + k]);
          std::swap(inv[piv * m_ + k], inv[c * m_ + k]);
        }
      }
      const double d = 1.0 / mat[c * m_ + c];
      for (std::size_t k = 0; k < m_; ++k) {
        mat[c * m_ + k] *= d;
        inv[c * m_ + k] *= d;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = mat[r * m_ + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m_; ++k) {
          mat[r * m_ + k] -= f * mat[c * m_ + k];
          inv[r * m_ + k] -= f * inv[c * m_ + k];
        }
      }
    }
    // Rows of inv are indexed by basis position because column i of mat
    // holds basic variable i.
    binv_ = std::move(inv);

    std::vector<double> rhs = b_;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (is_basic_[j] || x_[j] == 0.0) continue;
      const auto& v = vars_[j];
      if (v.structural) {
        const double* col = &cols_[j * m_];
        for (std::size_t i = 0; i < m_; ++i) rhs[i] -= col[i] * x_[j];
      } else {
        rhs[v.row] -= v.sign * x_[j];
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < m_; ++k) s += binv_[i * m_ + k] * rhs[k];
      x_[basis_[i]] = s;
    }
    return true;
  }

  Status iterate(const std::vector<double>& cost) {
    std::vector<double> y(m_);
    std::vector<double> alpha(m_);
    std::size_t degenerate_run = 0;
    std::size_t since_refactor = 0;

    while (true) {
      if (iterations_ >= max_iter_) return Status::iteration_limit;
      if (since_refactor >= opt_.refactor_interval) {
        if (!refactor()) return Status::iteration_limit;
        since_refactor = 0;
      }
      const bool bland = degenerate_run >= opt_.degenerate_streak;

      // y = c_B^T B^{-1}
      std::fill(y.begin(), y.end(), 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        const double c = cost[basis_[i]];
        if (c == 0.0) continue;
        const double* row = &binv_[i * m_];
        for (std::size_t k = 0; k < m_; ++k) y[k] += c * row[k];
      }

      std::size_t entering = npos;
      double best = 0.0;
      int direction = 0;
      for (std::size_t j = 0; j < vars_.size(); ++j) {
        if (is_basic_[j]) continue;
        const auto& v = vars_[j];
        if (v.lower == v.upper) continue;
        const double d = cost[j] - dot_column(j, y);
        int dir = 0;
        if (d < -opt_.optimality_tol && x_[j] < v.upper) dir = 1;
        else if (d > opt_.optimality_tol && x_[j] > v.lower) dir = -1;
        if (dir == 0) continue;
        if (bland) {
          entering = j;
          direction = dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          direction = dir;
        }
      }
      if (entering == npos) {
        last_duals_ = y;
        return Status::optimal;
      }

      ftran(entering, alpha);

      // Ratio test. Basic i moves at rate -direction * alpha_i. Outside Bland
      // mode this is a Harris two-pass test: bounds are relaxed by the
      // feasibility tolerance to find the admissible step, then the largest
      // pivot within that step is chosen. Tiny pivots on near-collinear
      // columns otherwise inflate B^{-1} without bound.
      const auto distance = [&](std::size_t i, double rate, double relax, bool& to_upper) {
        const auto& v = vars_[basis_[i]];
        const double xi = x_[basis_[i]];
        to_upper = rate > 0.0;
        if (rate < 0.0) return std::isfinite(v.lower) ? (xi - v.lower + relax) / -rate : kInf;
        return std::isfinite(v.upper) ? (v.upper - xi + relax) / rate : kInf;
      };
      double theta = kInf;
      std::size_t leave = npos;
      bool leave_to_upper = false;
      if (bland) {
        for (std::size_t i = 0; i < m_; ++i) {
          const double rate = -direction * alpha[i];
          if (std::abs(rate) <= opt_.pivot_tol) continue;
          bool to_upper;
          const double ratio = std::max(distance(i, rate, 0.0, to_upper), 0.0);
          if (!std::isfinite(ratio)) continue;
          if (leave == npos || ratio < theta - 1e-12 ||
              (ratio <= theta + 1e-12 && basis_[i] < basis_[leave])) {
            theta = std::min(theta, ratio);
            leave = i;
            leave_to_upper = to_upper;
          }
        }
      } else {
        double bound = kInf;
        for (std::size_t i = 0; i < m_; ++i) {
          const double rate = -direction * alpha[i];
          if (std::abs(rate) <= opt_.pivot_tol) continue;
          bool to_upper;
          bound = std::min(bound, distance(i, rate, opt_.feasibility_tol, to_upper));
        }
        double leave_pivot = 0.0;
        if (std::isfinite(bound)) {
          for (std::size_t i = 0; i < m_; ++i) {
            const double rate = -direction * alpha[i];
            if (std::abs(rate) <= opt_.pivot_tol) continue;
            bool to_upper;
            const double ratio = std::max(distance(i, rate, 0.0, to_upper), 0.0);
            if (ratio <= bound && std::abs(alpha[i]) > leave_pivot) {
              theta = ratio;
              leave = i;
              leave_to_upper = to_upper;
              leave_pivot = std::abs(alpha[i]);
            }
          }
        }
      }
      const auto& ev = vars_[entering];
      const double span = ev.upper - ev.lower;
      const bool flip = std::isfinite(span) && span <= theta;
      if (flip) theta = span;
      if (!std::isfinite(theta)) return Status::unbounded;

      ++iterations_;
      ++since_refactor;
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= direction * theta * alpha[i];
      x_[entering] += direction * theta;

      if (flip) {
        x_[entering] = direction > 0 ? ev.upper : ev.lower;
        continue;
      }

      const std::size_t out = basis_[leave];
      x_[out] = leave_to_upper ? vars_[out].upper : vars_[out].lower;
      is_basic_[out] = false;
      is_basic_[entering] = true;
      basis_[leave] = entering;

      const double piv = alpha[leave];
      double* prow = &binv_[leave * m_];
      for (std::size_t k = 0; k < m_; ++k) prow[k] /= piv;
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == leave || alpha[i] == 0.0) continue;
        const double f = alpha[i];
        double* row = &binv_[i * m_];
        for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
      }
    }
  }

  double basis_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& v = vars_[basis_[i]];
      const double xi = x_[basis_[i]];
      worst = std::max({worst, v.lower - xi, xi - v.upper});
    }
    return worst;
  }

  LpSolution& finish(LpSolution& sol, Status status) {
    sol.iterations = iterations_;
    // A basis that is infeasible after a fresh factorization means the
    // iterates drifted; report it rather than a wrong optimum.
    if (status == Status::optimal && (!refactor() || basis_violation() > 1e-7)) {
      status = Status::iteration_limit;
    }
    sol.status = status;
    if (status == Status::optimal) {
      sol.x.assign(n_, 0.0);
      double value = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        sol.x[j] = std::clamp(x_[j], vars_[j].lower, vars_[j].upper);
        value += vars_[j].cost * sol.x[j];
      }
      sol.objective_value = value;
      sol.duals.assign(m_, 0.0);
      for (std::size_t i = 0; i < m_; ++i) sol.duals[i] = last_duals_[i] * scale_[i];
    }
    return sol;
  }

  SolverOptions opt_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t num_real_ = 0;
  std::vector<double> scale_;
  std::vector<double> cols_;  // structural columns, column-major, scaled
  std::vector<double> b_;
  std::vector<Var> vars_;
  std::vector<double> x_;
  std::vector<std::size_t> basis_;
  std::vector<bool> is_basic_;
  std::vector<double> binv_;  // row-major, row i = basis position i
  std::vector<double> last_duals_;
  std::size_t max_iter_ = 0;
  std::size_t iterations_ = 0;
};

}  // namespace detail

// Deterministic for identical input: pivot choices depend only on the data.
inline LpSolution solve(const LinearProgram& lp, const SolverOptions& options = {}) {
  if (lp.num_variables() == 0) throw ParameterError("linear program has no variables");
  detail::Simplex simplex(lp, options);
  return simplex.run();
}

}  // namespace tailbound::lp
