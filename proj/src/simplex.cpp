#include "psps/simplex.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "psps/common.hpp"

namespace psps::lp {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kLazyTol = 1e-9;
constexpr int kRefactorEvery = 150;
constexpr int kMaxLazyRounds = 40;

struct PresolvedProblem {
  // Compressed problem over the free (unfixed) variables.
  int n = 0;
  std::vector<double> cost, lo, hi;
  double cost_constant = 0.0;
  std::vector<Row> active;  // rows the simplex starts with
  std::vector<Row> pool;    // lazy rows, checked after each candidate optimum

  // Mapping back to the original variable space.
  std::vector<int> compact_of;     // original var -> compact index or -1
  std::vector<int> original_of;    // compact index -> original var
  std::vector<double> fixed_value;  // original var -> value if fixed
  bool infeasible = false;
};

double activity_upper_bound(const Row& row, const std::vector<double>& lo,
                            const std::vector<double>& hi) {
  double a = 0.0;
  for (auto [j, c] : row.terms) {
    const double b = c > 0 ? hi[j] : lo[j];
    if (!std::isfinite(b)) return kInf;
    a += c * b;
  }
  return a;
}

double activity_lower_bound(const Row& row, const std::vector<double>& lo,
                            const std::vector<double>& hi) {
  double a = 0.0;
  for (auto [j, c] : row.terms) {
    const double b = c > 0 ? lo[j] : hi[j];
    if (!std::isfinite(b)) return -kInf;
    a += c * b;
  }
  return a;
}

PresolvedProblem presolve(const Problem& p) {
  PresolvedProblem out;
  std::vector<double> lo = p.lo, hi = p.hi;
  std::vector<Row> rows;
  rows.reserve(p.rows.size());

  // Fold single-variable rows into bounds; they never need simplex rows.
  for (const Row& r : p.rows) {
    if (r.terms.size() == 1) {
      const auto [j, c] = r.terms[0];
      if (c == 0.0) {
        if ((r.sense == Sense::kLe && r.rhs < -kFeasTol) ||
            (r.sense == Sense::kEq && std::abs(r.rhs) > kFeasTol))
          out.infeasible = true;
        continue;
      }
      const double v = r.rhs / c;
      if (r.sense == Sense::kEq) {
        lo[j] = std::max(lo[j], v);
        hi[j] = std::min(hi[j], v);
      } else if (c > 0) {
        hi[j] = std::min(hi[j], v);
      } else {
        lo[j] = std::max(lo[j], v);
      }
      continue;
    }
    rows.push_back(r);
  }

  for (int j = 0; j < p.n_vars; ++j)
    if (lo[j] > hi[j] + 1e-9) out.infeasible = true;
  if (out.infeasible) return out;

  // Fix variables whose bounds have collapsed and substitute them out.
  out.fixed_value.assign(p.n_vars, 0.0);
  std::vector<bool> fixed(p.n_vars, false);
  out.cost_constant = p.cost_constant;
  for (int j = 0; j < p.n_vars; ++j) {
    if (hi[j] - lo[j] <= 1e-12) {
      fixed[j] = true;
      out.fixed_value[j] = 0.5 * (lo[j] + hi[j]);
      out.cost_constant += p.cost[j] * out.fixed_value[j];
    }
  }

  out.compact_of.assign(p.n_vars, -1);
  for (int j = 0; j < p.n_vars; ++j) {
    if (fixed[j]) continue;
    out.compact_of[j] = out.n++;
    out.original_of.push_back(j);
    out.cost.push_back(p.cost[j]);
    out.lo.push_back(lo[j]);
    out.hi.push_back(hi[j]);
  }

  for (Row& r : rows) {
    Row nr;
    nr.sense = r.sense;
    nr.rhs = r.rhs;
    nr.lazy = r.lazy;
    for (auto [j, c] : r.terms) {
      if (fixed[j])
        nr.rhs -= c * out.fixed_value[j];
      else
        nr.terms.emplace_back(out.compact_of[j], c);
    }
    if (nr.terms.empty()) {
      if ((nr.sense == Sense::kLe && nr.rhs < -kFeasTol) ||
          (nr.sense == Sense::kEq && std::abs(nr.rhs) > kFeasTol)) {
        out.infeasible = true;
        return out;
      }
      continue;
    }
    // Interval arithmetic: a row no point in the box can violate is dropped.
    if (nr.sense == Sense::kLe && activity_upper_bound(nr, out.lo, out.hi) <= nr.rhs + kFeasTol)
      continue;
    if (nr.sense == Sense::kEq) {
      const double up = activity_upper_bound(nr, out.lo, out.hi);
      const double dn = activity_lower_bound(nr, out.lo, out.hi);
      if (up < nr.rhs - kFeasTol || dn > nr.rhs + kFeasTol) {
        out.infeasible = true;
        return out;
      }
    }
    if (nr.lazy && nr.sense == Sense::kLe)
      out.pool.push_back(std::move(nr));
    else
      out.active.push_back(std::move(nr));
  }
  return out;
}

/// Bounded-variable primal simplex over an explicit working set of rows.
/// Columns: structural variables, then one slack per kLe row, then artificials
/// installed for rows whose initial residual a slack cannot absorb.
class SimplexEngine {
 public:
  SimplexEngine(const PresolvedProblem& p, std::vector<Row> working)
      : p_(p), rows_(std::move(working)) {}

  Status run(std::vector<double>* x_out, int* iters_out) {
    build();
    if (!phase1()) return Status::kInfeasible;
    const Status st = optimize(/*phase1=*/false);
    if (st != Status::kOptimal) return st;
    recompute_basics();
    x_out->assign(p_.n, 0.0);
    for (int j = 0; j < p_.n; ++j) (*x_out)[j] = x_[j];
    *iters_out = total_iters_;
    return Status::kOptimal;
  }

 private:
  enum class VarStatus : char { kBasic, kAtLo, kAtHi, kFreeNb };

  void build() {
    m_ = static_cast<int>(rows_.size());
    n_struct_ = p_.n;
    // Column layout: structural | slacks | artificials (added below as needed).
    cols_.assign(n_struct_, {});
    lo_ = p_.lo;
    hi_ = p_.hi;
    cost_ = p_.cost;
    slack_of_row_.assign(m_, -1);
    rhs_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      rhs_[i] = rows_[i].rhs;
      for (auto [j, c] : rows_[i].terms) cols_[j].emplace_back(i, c);
      if (rows_[i].sense == Sense::kLe) {
        slack_of_row_[i] = add_column(0.0, kInf, 0.0);
        cols_.back().emplace_back(i, 1.0);
      }
    }
    n_real_ = static_cast<int>(cols_.size());

    // Nonbasic start: every variable at a finite bound (value 0 if free).
    status_.assign(cols_.size(), VarStatus::kAtLo);
    x_.assign(cols_.size(), 0.0);
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      if (std::isfinite(lo_[j])) {
        status_[j] = VarStatus::kAtLo;
        x_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        status_[j] = VarStatus::kAtHi;
        x_[j] = hi_[j];
      } else {
        status_[j] = VarStatus::kFreeNb;
        x_[j] = 0.0;
      }
    }

    // Residuals decide which rows get their slack basic and which need an
    // artificial column to open phase 1 feasible.
    std::vector<double> resid = rhs_;
    for (int j = 0; j < n_real_; ++j) {
      if (x_[j] == 0.0) continue;
      for (auto [i, c] : cols_[j]) resid[i] -= c * x_[j];
    }
    basis_.assign(m_, -1);
    artificial_.clear();
    for (int i = 0; i < m_; ++i) {
      const int s = slack_of_row_[i];
      if (s >= 0 && resid[i] >= 0.0) {
        basis_[i] = s;
        status_[s] = VarStatus::kBasic;
        x_[s] = resid[i];
        continue;
      }
      if (s >= 0) {
        // Slack stays nonbasic at 0; the artificial absorbs the deficit.
        status_[s] = VarStatus::kAtLo;
        x_[s] = 0.0;
      }
      const double sigma = resid[i] >= 0.0 ? 1.0 : -1.0;
      const int a = add_column(0.0, kInf, 0.0);
      cols_.back().emplace_back(i, sigma);
      artificial_.push_back(a);
      basis_[i] = a;
      status_.push_back(VarStatus::kBasic);
      x_.push_back(std::abs(resid[i]));
    }

    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    // The initial basis is not the identity when slacks took nonzero values,
    // but every initial basic column is a unit column, so B = I in the
    // permuted sense; with one basic per row and unit coefficients, B^-1 = I
    // after accounting for artificial signs.
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[i];
      double coef = 1.0;
      for (auto [row, c] : cols_[b])
        if (row == i) coef = c;
      binv_(i, i) = 1.0 / coef;
    }
    pivots_since_refactor_ = 0;
    total_iters_ = 0;
  }

  int add_column(double lo, double hi, double cost) {
    cols_.push_back({});
    lo_.push_back(lo);
    hi_.push_back(hi);
    cost_.push_back(cost);
    return static_cast<int>(cols_.size()) - 1;
  }

  bool phase1() {
    if (artificial_.empty()) return true;
    std::vector<double> saved_cost = cost_;
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (int a : artificial_) cost_[a] = 1.0;
    const Status st = optimize(/*phase1=*/true);
    double infeas = 0.0;
    for (int a : artificial_) infeas += x_[a];
    cost_ = std::move(saved_cost);
    if (st != Status::kOptimal || infeas > 1e-7) return false;
    // Lock artificials at zero for phase 2.
    for (int a : artificial_) {
      lo_[a] = hi_[a] = 0.0;
      if (status_[a] != VarStatus::kBasic) {
        status_[a] = VarStatus::kAtLo;
        x_[a] = 0.0;
      }
    }
    return true;
  }

  Status optimize(bool phase1) {
    const int n_total = static_cast<int>(cols_.size());
    const int iter_limit = 2000 + 60 * (m_ + n_total);
    int degenerate_streak = 0;
    bool bland = false;

    for (int iter = 0; iter < iter_limit; ++iter, ++total_iters_) {
      // Reduced costs: d_j = c_j - y . A_j with y = B^-T c_B.
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
      Eigen::VectorXd y = binv_.transpose() * cb;

      int entering = -1;
      double entering_dir = 0.0;
      double best_score = kOptTol;
      for (int j = 0; j < n_total; ++j) {
        const VarStatus st = status_[j];
        if (st == VarStatus::kBasic) continue;
        if (lo_[j] == hi_[j]) continue;  // locked (fixed or retired artificial)
        double d = cost_[j];
        for (auto [i, c] : cols_[j]) d -= y[i] * c;
        double score = 0.0, dir = 0.0;
        if ((st == VarStatus::kAtLo || st == VarStatus::kFreeNb) && d < -kOptTol) {
          score = -d;
          dir = 1.0;
        } else if ((st == VarStatus::kAtHi || st == VarStatus::kFreeNb) && d > kOptTol) {
          score = d;
          dir = -1.0;
        } else {
          continue;
        }
        if (bland) {
          entering = j;
          entering_dir = dir;
          break;
        }
        if (score > best_score) {
          best_score = score;
          entering = j;
          entering_dir = dir;
        }
      }
      if (entering < 0) return Status::kOptimal;

      // Basic response to the entering variable: x_B changes by -dir * delta * t.
      Eigen::VectorXd aq = Eigen::VectorXd::Zero(m_);
      for (auto [i, c] : cols_[entering]) aq[i] = c;
      Eigen::VectorXd delta = binv_ * aq;

      double t_max = kInf;
      int leaving_row = -1;
      bool leaving_at_hi = false;
      // Bound flip: the entering variable may hit its own opposite bound.
      const double span = hi_[entering] - lo_[entering];
      if (std::isfinite(span)) t_max = span;

      for (int i = 0; i < m_; ++i) {
        const double g = -entering_dir * delta[i];
        const int b = basis_[i];
        double t_i = kInf;
        bool at_hi = false;
        if (g > 1e-11) {
          if (std::isfinite(hi_[b])) t_i = (hi_[b] - x_[b]) / g;
          at_hi = true;
        } else if (g < -1e-11) {
          if (std::isfinite(lo_[b])) t_i = (x_[b] - lo_[b]) / (-g);
        } else {
          continue;
        }
        if (t_i < -1e-12) t_i = 0.0;
        if (t_i < t_max - 1e-12 ||
            (t_i < t_max + 1e-12 && leaving_row >= 0 &&
             std::abs(delta[i]) > std::abs(delta[leaving_row]))) {
          t_max = t_i;
          leaving_row = i;
          leaving_at_hi = at_hi;
        }
      }

      if (!std::isfinite(t_max)) return phase1 ? Status::kIterLimit : Status::kUnbounded;

      const double t = std::max(t_max, 0.0);
      degenerate_streak = t <= 1e-12 ? degenerate_streak + 1 : 0;
      if (degenerate_streak > 2 * (m_ + 8)) bland = true;

      // Apply the move.
      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= entering_dir * delta[i] * t;
      x_[entering] += entering_dir * t;

      if (leaving_row < 0) {
        // Pure bound flip.
        status_[entering] = entering_dir > 0 ? VarStatus::kAtHi : VarStatus::kAtLo;
        x_[entering] = entering_dir > 0 ? hi_[entering] : lo_[entering];
        continue;
      }

      const int leaving = basis_[leaving_row];
      status_[leaving] = leaving_at_hi ? VarStatus::kAtHi : VarStatus::kAtLo;
      x_[leaving] = leaving_at_hi ? hi_[leaving] : lo_[leaving];
      basis_[leaving_row] = entering;
      status_[entering] = VarStatus::kBasic;

      // Product-form update of B^-1, refactorized periodically.
      const double piv = delta[leaving_row];
      binv_.row(leaving_row) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leaving_row) continue;
        const double f = delta[i];
        if (f != 0.0) binv_.row(i) -= f * binv_.row(leaving_row);
      }
      if (++pivots_since_refactor_ >= kRefactorEvery) {
        refactorize();
        recompute_basics();
      }
    }
    return Status::kIterLimit;
  }

  void refactorize() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (auto [row, c] : cols_[basis_[i]]) b(row, i) = c;
    binv_ = b.partialPivLu().inverse();
    pivots_since_refactor_ = 0;
  }

  void recompute_basics() {
    Eigen::VectorXd r(m_);
    for (int i = 0; i < m_; ++i) r[i] = rhs_[i];
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      if (status_[j] == VarStatus::kBasic || x_[j] == 0.0) continue;
      for (auto [i, c] : cols_[j]) r[i] -= c * x_[j];
    }
    Eigen::VectorXd xb = binv_ * r;
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  const PresolvedProblem& p_;
  std::vector<Row> rows_;
  int m_ = 0, n_struct_ = 0, n_real_ = 0;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> lo_, hi_, cost_, rhs_, x_;
  std::vector<int> basis_, slack_of_row_, artificial_;
  std::vector<VarStatus> status_;
  Eigen::MatrixXd binv_;
  int pivots_since_refactor_ = 0;
  int total_iters_ = 0;
};

double row_activity(const Row& row, const std::vector<double>& x) {
  double a = 0.0;
  for (auto [j, c] : row.terms) a += c * x[j];
  return a;
}

}  // namespace

Solution solve(const Problem& problem) {
  Solution sol;
  PresolvedProblem pre = presolve(problem);
  if (pre.infeasible) {
    sol.status = Status::kInfeasible;
    return sol;
  }

  std::vector<Row> working = pre.active;
  std::vector<Row> pool = pre.pool;
  std::vector<double> xc;
  for (int round = 0; round < kMaxLazyRounds; ++round) {
    sol.lazy_rounds = round + 1;
    SimplexEngine engine(pre, working);
    int iters = 0;
    const Status st = engine.run(&xc, &iters);
    sol.iterations += iters;
    if (st != Status::kOptimal) {
      sol.status = st;
      return sol;
    }
    // Activate every violated lazy row and re-solve; done when none are.
    std::vector<Row> still;
    bool any = false;
    for (Row& r : pool) {
      if (row_activity(r, xc) > r.rhs + kLazyTol) {
        working.push_back(std::move(r));
        any = true;
      } else {
        still.push_back(std::move(r));
      }
    }
    pool = std::move(still);
    if (!any) break;
    if (round + 1 == kMaxLazyRounds) {
      sol.status = Status::kIterLimit;
      return sol;
    }
  }

  sol.status = Status::kOptimal;
  sol.x.assign(problem.n_vars, 0.0);
  for (int j = 0; j < problem.n_vars; ++j) {
    const int cj = pre.compact_of[j];
    sol.x[j] = cj >= 0 ? xc[cj] : pre.fixed_value[j];
  }
  sol.objective = problem.cost_constant;
  for (int j = 0; j < problem.n_vars; ++j) sol.objective += problem.cost[j] * sol.x[j];
  return sol;
}

}  // namespace psps::lp
