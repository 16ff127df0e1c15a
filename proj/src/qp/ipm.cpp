// Mehrotra predictor-corrector interior point method on the quasi-definite
// augmented system
//
//   [ -(H + dp I)   E^T   ] [dz]   [-rhs_dual]
//   [      E        dd I  ] [dl] = [ rhs_pri ]
//
// with H = Q + Yl/Tl + Yu/Tu diagonal. Inequality rows get an explicit slack
// column so that every row is an equality; fixed variables are eliminated.

#include "mies/qp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mies::qp {
namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

constexpr double kPrimalReg = 1e-9;
constexpr double kDualReg = 1e-9;
constexpr double kStepFraction = 0.995;
constexpr double kDivergence = 1e12;
constexpr double kFallbackCentering = 0.5;
// Iterates within this tolerance are kept as the answer if the run later
// stalls (thin feasible sets can pin slacks at zero before the primal
// residual reaches the main tolerance).
constexpr double kAcceptable = 1e-7;

struct StandardForm {
  int n = 0;
  int m = 0;
  Vec q, c, lo, hi;
  SpMat E;
  Vec b;
  Vec col_scale;
  Vec row_scale;
  double cost_scale = 1.0;
  double sign = 1.0;
  std::vector<int> var_col;    // original variable -> column, -1 when fixed
  std::vector<double> fixed;   // value of fixed variables
  std::vector<int> row_index;  // original row -> internal row, -1 when dropped
  bool infeasible = false;
};

bool nearly_equal(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return a == b;
  return std::abs(a - b) <= 1e-12 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

StandardForm to_standard_form(const Problem& p) {
  StandardForm sf;
  sf.sign = p.sense() == Sense::minimize ? 1.0 : -1.0;
  const int nv = p.num_variables();
  sf.var_col.assign(nv, -1);
  sf.fixed.assign(nv, 0.0);

  std::vector<double> q, c, lo, hi;
  for (int i = 0; i < nv; ++i) {
    const VarId v{i};
    const double l = p.lower(v);
    const double u = p.upper(v);
    if (l > u && !nearly_equal(l, u)) sf.infeasible = true;
    if (l == kInfinity || u == -kInfinity) sf.infeasible = true;
    if (nearly_equal(l, u)) {
      sf.fixed[i] = l;
      continue;
    }
    sf.var_col[i] = static_cast<int>(q.size());
    q.push_back(2.0 * sf.sign * p.quadratic_cost(v));
    c.push_back(sf.sign * p.linear_cost(v));
    lo.push_back(l);
    hi.push_back(u);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> rhs;
  sf.row_index.assign(p.num_rows(), -1);
  std::vector<std::pair<int, double>> entries;
  for (int r = 0; r < p.num_rows(); ++r) {
    const RowId row{r};
    double shift = 0.0;
    entries.clear();
    for (const auto& t : p.row_terms(row)) {
      const int col = sf.var_col[t.var.index];
      if (col < 0) {
        shift += t.coef * sf.fixed[t.var.index];
      } else if (t.coef != 0.0) {
        entries.emplace_back(col, t.coef);
      }
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t w = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (w > 0 && entries[w - 1].first == entries[k].first) {
        entries[w - 1].second += entries[k].second;
      } else {
        entries[w++] = entries[k];
      }
    }
    entries.resize(w);
    std::erase_if(entries, [](const auto& e) { return e.second == 0.0; });

    const double l = p.row_lower(row) - shift;
    const double u = p.row_upper(row) - shift;
    if (entries.empty()) {
      const double tol = 1e-9 * (1.0 + std::abs(shift));
      if (l > tol || u < -tol) sf.infeasible = true;
      continue;
    }
    if (l == -kInfinity && u == kInfinity) continue;
    if (l > u && !nearly_equal(l, u)) sf.infeasible = true;

    const int ir = static_cast<int>(rhs.size());
    sf.row_index[r] = ir;
    for (const auto& [col, coef] : entries) triplets.emplace_back(ir, col, coef);
    if (nearly_equal(l, u)) {
      rhs.push_back(l);
    } else {
      const int slack = static_cast<int>(q.size());
      q.push_back(0.0);
      c.push_back(0.0);
      lo.push_back(l);
      hi.push_back(u);
      triplets.emplace_back(ir, slack, -1.0);
      rhs.push_back(0.0);
    }
  }

  sf.n = static_cast<int>(q.size());
  sf.m = static_cast<int>(rhs.size());
  sf.q = Eigen::Map<Vec>(q.data(), sf.n);
  sf.c = Eigen::Map<Vec>(c.data(), sf.n);
  sf.lo = Eigen::Map<Vec>(lo.data(), sf.n);
  sf.hi = Eigen::Map<Vec>(hi.data(), sf.n);
  sf.b = Eigen::Map<Vec>(rhs.data(), sf.m);
  sf.E.resize(sf.m, sf.n);
  sf.E.setFromTriplets(triplets.begin(), triplets.end());
  sf.E.makeCompressed();
  sf.col_scale = Vec::Ones(sf.n);
  sf.row_scale = Vec::Ones(sf.m);
  return sf;
}

// Ruiz equilibration of E followed by objective scaling.
void equilibrate(StandardForm& sf) {
  sf.col_scale = Vec::Ones(sf.n);
  sf.row_scale = Vec::Ones(sf.m);
  Vec col_norm(sf.n), row_norm(sf.m);
  for (int pass = 0; pass < 8; ++pass) {
    col_norm.setZero();
    row_norm.setZero();
    for (int j = 0; j < sf.n; ++j) {
      for (SpMat::InnerIterator it(sf.E, j); it; ++it) {
        const double a = std::abs(it.value());
        col_norm[j] = std::max(col_norm[j], a);
        row_norm[it.row()] = std::max(row_norm[it.row()], a);
      }
    }
    double worst = 0.0;
    for (int j = 0; j < sf.n; ++j) {
      col_norm[j] = col_norm[j] > 0 ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
      worst = std::max(worst, std::abs(1.0 - col_norm[j]));
    }
    for (int i = 0; i < sf.m; ++i) {
      row_norm[i] = row_norm[i] > 0 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
      worst = std::max(worst, std::abs(1.0 - row_norm[i]));
    }
    if (worst < 1e-3) break;
    for (int j = 0; j < sf.n; ++j) {
      for (SpMat::InnerIterator it(sf.E, j); it; ++it) {
        it.valueRef() *= row_norm[it.row()] * col_norm[j];
      }
    }
    sf.col_scale.array() *= col_norm.array();
    sf.row_scale.array() *= row_norm.array();
  }
  sf.b.array() *= sf.row_scale.array();
  sf.lo.array() /= sf.col_scale.array();
  sf.hi.array() /= sf.col_scale.array();
  sf.c.array() *= sf.col_scale.array();
  sf.q.array() *= sf.col_scale.array().square();
  double cmax = 0.0;
  if (sf.n > 0) cmax = std::max(sf.c.cwiseAbs().maxCoeff(), sf.q.cwiseAbs().maxCoeff());
  sf.cost_scale = cmax > 1.0 ? 1.0 / cmax : 1.0;
  sf.c *= sf.cost_scale;
  sf.q *= sf.cost_scale;
}

class KktSystem {
public:
  KktSystem(const SpMat& E, int n, int m) : E_(E), n_(n), m_(m), h_(Vec::Zero(n)) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(n + m + E.nonZeros());
    for (int j = 0; j < n; ++j) {
      t.emplace_back(j, j, -1.0);
      for (SpMat::InnerIterator it(E, j); it; ++it) t.emplace_back(n + it.row(), j, it.value());
    }
    for (int i = 0; i < m; ++i) t.emplace_back(n + i, n + i, 1.0);
    K_.resize(n + m, n + m);
    K_.setFromTriplets(t.begin(), t.end());
    K_.makeCompressed();
    ldlt_.analyzePattern(K_);
  }

  // Retries with stronger regularization when a pivot vanishes; iterative
  // refinement in solve() removes the perturbation.
  bool factor(const Vec& h) {
    h_ = h;
    double* values = K_.valuePtr();
    const int* outer = K_.outerIndexPtr();
    for (double boost = 1.0; boost <= 1e6; boost *= 100.0) {
      for (int j = 0; j < n_; ++j) values[outer[j]] = -(h[j] + boost * kPrimalReg);
      for (int i = 0; i < m_; ++i) values[outer[n_ + i]] = boost * kDualReg;
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solves [-H E^T; E 0] [dz; dl] = [top; bottom] with iterative refinement
  // against the unregularized matrix.
  bool solve(const Vec& top, const Vec& bottom, Vec& dz, Vec& dl) const {
    Vec rhs(n_ + m_);
    rhs << top, bottom;
    Vec sol = ldlt_.solve(rhs);
    if (!sol.allFinite()) return false;
    for (int pass = 0; pass < 10; ++pass) {
      Vec residual = rhs - apply(sol);
      if (residual.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
        break;
      }
      Vec corr = ldlt_.solve(residual);
      if (!corr.allFinite()) break;
      sol += corr;
    }
    dz = sol.head(n_);
    dl = sol.tail(m_);
    return true;
  }

private:
  Vec apply(const Vec& v) const {
    Vec out(n_ + m_);
    const auto z = v.head(n_);
    const auto l = v.tail(m_);
    out.head(n_) = -h_.cwiseProduct(z) + E_.transpose() * l;
    out.tail(m_) = E_ * z;
    return out;
  }

  const SpMat& E_;
  int n_;
  int m_;
  Vec h_;
  SpMat K_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

double max_step(const Vec& value, const Vec& delta, const std::vector<char>& mask) {
  double step = 1e300;
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (mask[i] && delta[i] < 0.0) step = std::min(step, -value[i] / delta[i]);
  }
  return step;
}

// A dual ray v with sup_{box} (E^T v)^T z < v^T b proves {Ez = b, lo <= z <= hi} empty.
bool certifies_infeasibility(const StandardForm& sf, const Vec& lam) {
  const double scale = lam.lpNorm<Eigen::Infinity>();
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  for (double direction : {1.0, -1.0}) {
    const Vec v = direction * lam / scale;
    const Vec g = sf.E.transpose() * v;
    double sup = 0.0;
    bool bounded = true;
    for (int j = 0; j < sf.n && bounded; ++j) {
      if (g[j] > 1e-9) {
        if (!std::isfinite(sf.hi[j])) bounded = false;
        else sup += g[j] * sf.hi[j];
      } else if (g[j] < -1e-9) {
        if (!std::isfinite(sf.lo[j])) bounded = false;
        else sup += g[j] * sf.lo[j];
      }
    }
    const double vb = v.dot(sf.b);
    if (bounded && sup < vb - 1e-7 * (1.0 + std::abs(vb))) return true;
  }
  return false;
}

bool certifies_unboundedness(const StandardForm& sf, const Vec& z) {
  const double scale = z.lpNorm<Eigen::Infinity>();
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  const Vec d = z / scale;
  if ((sf.E * d).lpNorm<Eigen::Infinity>() > 1e-6) return false;
  if (sf.q.cwiseProduct(d).lpNorm<Eigen::Infinity>() > 1e-6) return false;
  for (int j = 0; j < sf.n; ++j) {
    if (std::isfinite(sf.lo[j]) && d[j] < -1e-6) return false;
    if (std::isfinite(sf.hi[j]) && d[j] > 1e-6) return false;
  }
  return sf.c.dot(d) < -1e-9;
}

Solution finish(const Problem& p, const StandardForm& sf, Status status, const Vec& z,
                const Vec& lam, int iterations) {
  Solution sol;
  sol.status = status;
  sol.iterations = iterations;
  sol.primal.assign(p.num_variables(), 0.0);
  sol.row_duals.assign(p.num_rows(), 0.0);
  for (int i = 0; i < p.num_variables(); ++i) {
    const int col = sf.var_col[i];
    sol.primal[i] = col < 0 ? sf.fixed[i] : z[col] * sf.col_scale[col];
  }
  if (status == Status::optimal) {
    for (int r = 0; r < p.num_rows(); ++r) {
      const int ir = sf.row_index[r];
      if (ir >= 0) sol.row_duals[r] = sf.sign * lam[ir] * sf.row_scale[ir] / sf.cost_scale;
    }
  }
  sol.objective = p.evaluate(sol.primal);
  return sol;
}

}  // namespace

Solution solve(const Problem& problem, const Settings& settings) {
  problem.validate();
  StandardForm sf = to_standard_form(problem);
  const int n = sf.n;
  const int m = sf.m;
  if (sf.infeasible) return finish(problem, sf, Status::infeasible, Vec::Zero(n), Vec::Zero(m), 0);
  equilibrate(sf);

  std::vector<char> has_lo(n), has_hi(n);
  int bound_count = 0;
  for (int j = 0; j < n; ++j) {
    has_lo[j] = std::isfinite(sf.lo[j]);
    has_hi[j] = std::isfinite(sf.hi[j]);
    bound_count += has_lo[j] + has_hi[j];
  }

  // Starting point: near zero, strictly inside the bounds.
  Vec z(n), yl = Vec::Zero(n), yu = Vec::Zero(n), lam = Vec::Zero(m);
  for (int j = 0; j < n; ++j) {
    double lo = sf.lo[j], hi = sf.hi[j];
    double theta = 1.0;
    if (has_lo[j] && has_hi[j]) theta = std::min(1.0, 0.25 * (hi - lo));
    double v = 0.0;
    if (has_lo[j]) v = std::max(v, lo + theta);
    if (has_hi[j]) v = std::min(v, hi - theta);
    if (has_lo[j] && has_hi[j] && (v <= lo || v >= hi)) v = 0.5 * (lo + hi);
    z[j] = v;
    if (has_lo[j]) yl[j] = 1.0;
    if (has_hi[j]) yu[j] = 1.0;
  }

  KktSystem kkt(sf.E, n, m);
  const double b_norm = m > 0 ? sf.b.lpNorm<Eigen::Infinity>() : 0.0;
  const double c_norm = n > 0 ? sf.c.lpNorm<Eigen::Infinity>() : 0.0;

  Vec tl(n), tu(n), rd(n), rp(m), h(n), dz(n), dl(m), dyl(n), dyu(n);
  Vec dz_aff(n), dyl_aff(n), dyu_aff(n);
  Vec top(n), rcl(n), rcu(n);
  int iter = 0;
  Status status = Status::numerical_failure;
  bool have_acceptable = false;
  Vec z_acceptable, lam_acceptable;

  for (; iter <= settings.max_iterations; ++iter) {
    for (int j = 0; j < n; ++j) {
      tl[j] = has_lo[j] ? z[j] - sf.lo[j] : 1.0;
      tu[j] = has_hi[j] ? sf.hi[j] - z[j] : 1.0;
    }
    rd = sf.q.cwiseProduct(z) + sf.c - sf.E.transpose() * lam - yl + yu;
    rp = sf.b - sf.E * z;
    double comp = 0.0;
    for (int j = 0; j < n; ++j) {
      if (has_lo[j]) comp += tl[j] * yl[j];
      if (has_hi[j]) comp += tu[j] * yu[j];
    }
    const double mu = bound_count > 0 ? comp / bound_count : 0.0;
    const double pres = m > 0 ? rp.lpNorm<Eigen::Infinity>() : 0.0;
    const double dres = n > 0 ? rd.lpNorm<Eigen::Infinity>() : 0.0;
    const double tol = settings.tolerance;
    if (pres <= tol * (1.0 + b_norm) && dres <= tol * (1.0 + c_norm) &&
        comp <= tol) {
      status = Status::optimal;
      break;
    }
    if (pres <= kAcceptable * (1.0 + b_norm) && dres <= kAcceptable * (1.0 + c_norm) && comp <= kAcceptable) {
      have_acceptable = true;
      z_acceptable = z;
      lam_acceptable = lam;
    }
    const double dual_size = std::max({m > 0 ? lam.lpNorm<Eigen::Infinity>() : 0.0,
                                       n > 0 ? yl.lpNorm<Eigen::Infinity>() : 0.0,
                                       n > 0 ? yu.lpNorm<Eigen::Infinity>() : 0.0});
    if (dual_size > kDivergence || iter == settings.max_iterations) {
      if (certifies_infeasibility(sf, lam)) status = Status::infeasible;
      break;
    }
    if (n > 0 && z.lpNorm<Eigen::Infinity>() > kDivergence) {
      if (certifies_unboundedness(sf, z)) status = Status::unbounded;
      break;
    }

    for (int j = 0; j < n; ++j) {
      h[j] = sf.q[j] + (has_lo[j] ? yl[j] / tl[j] : 0.0) + (has_hi[j] ? yu[j] / tu[j] : 0.0);
    }
    if (!h.allFinite() || !kkt.factor(h)) break;

    // Predictor.
    for (int j = 0; j < n; ++j) {
      rcl[j] = has_lo[j] ? -tl[j] * yl[j] : 0.0;
      rcu[j] = has_hi[j] ? -tu[j] * yu[j] : 0.0;
      top[j] = rd[j] - rcl[j] / tl[j] + rcu[j] / tu[j];
    }
    if (!kkt.solve(top, rp, dz, dl)) break;
    for (int j = 0; j < n; ++j) {
      dyl[j] = has_lo[j] ? (rcl[j] - yl[j] * dz[j]) / tl[j] : 0.0;
      dyu[j] = has_hi[j] ? (rcu[j] + yu[j] * dz[j]) / tu[j] : 0.0;
    }
    double sigma = 0.0;
    if (bound_count > 0) {
      const double ap = std::min(max_step(tl, dz, has_lo), max_step(tu, -dz, has_hi));
      const double ad = std::min(max_step(yl, dyl, has_lo), max_step(yu, dyu, has_hi));
      const double a = std::min({1.0, ap, ad});
      double comp_aff = 0.0;
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) comp_aff += (tl[j] + a * dz[j]) * (yl[j] + a * dyl[j]);
        if (has_hi[j]) comp_aff += (tu[j] - a * dz[j]) * (yu[j] + a * dyu[j]);
      }
      sigma = std::clamp(std::pow(comp_aff / comp, 3.0), 0.0, 1.0);

      // Corrector.
      dz_aff = dz;
      dyl_aff = dyl;
      dyu_aff = dyu;
      for (int j = 0; j < n; ++j) {
        rcl[j] = has_lo[j] ? sigma * mu - tl[j] * yl[j] - dz_aff[j] * dyl_aff[j] : 0.0;
        rcu[j] = has_hi[j] ? sigma * mu - tu[j] * yu[j] + dz_aff[j] * dyu_aff[j] : 0.0;
        top[j] = rd[j] - rcl[j] / tl[j] + rcu[j] / tu[j];
      }
      if (!kkt.solve(top, rp, dz, dl)) break;
      for (int j = 0; j < n; ++j) {
        dyl[j] = has_lo[j] ? (rcl[j] - yl[j] * dz[j]) / tl[j] : 0.0;
        dyu[j] = has_hi[j] ? (rcu[j] + yu[j] * dz[j]) / tu[j] : 0.0;
      }
    }

    auto step_length = [&] {
      if (bound_count == 0) return 1.0;
      const double ap = std::min(max_step(tl, dz, has_lo), max_step(tu, -dz, has_hi));
      const double ad = std::min(max_step(yl, dyl, has_lo), max_step(yu, dyu, has_hi));
      return std::min(1.0, kStepFraction * std::min(ap, ad));
    };
    auto comp_after = [&](double a) {
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        if (has_lo[j]) total += (tl[j] + a * dz[j]) * (yl[j] + a * dyl[j]);
        if (has_hi[j]) total += (tu[j] - a * dz[j]) * (yu[j] + a * dyu[j]);
      }
      return total;
    };
    double alpha = step_length();

    // Near feasibility Mehrotra steps can cycle; fall back to a plain
    // centered direction when complementarity does not drop.
    const bool feasible = pres <= 1e-6 * (1.0 + b_norm) && dres <= 1e-6 * (1.0 + c_norm);
    if (bound_count > 0 && feasible && comp_after(alpha) >= comp) {
      for (int j = 0; j < n; ++j) {
        rcl[j] = has_lo[j] ? kFallbackCentering * mu - tl[j] * yl[j] : 0.0;
        rcu[j] = has_hi[j] ? kFallbackCentering * mu - tu[j] * yu[j] : 0.0;
        top[j] = rd[j] - rcl[j] / tl[j] + rcu[j] / tu[j];
      }
      if (!kkt.solve(top, rp, dz, dl)) break;
      for (int j = 0; j < n; ++j) {
        dyl[j] = has_lo[j] ? (rcl[j] - yl[j] * dz[j]) / tl[j] : 0.0;
        dyu[j] = has_hi[j] ? (rcu[j] + yu[j] * dz[j]) / tu[j] : 0.0;
      }
      alpha = step_length();
      while (alpha > 1e-8 && comp_after(alpha) > (1.0 - 0.01 * alpha) * comp) alpha *= 0.5;
    }
    z += alpha * dz;
    lam += alpha * dl;
    yl += alpha * dyl;
    yu += alpha * dyu;
    if (!z.allFinite() || !lam.allFinite()) break;
  }

  if (status == Status::numerical_failure && have_acceptable) {
    return finish(problem, sf, Status::optimal, z_acceptable, lam_acceptable, iter);
  }
  return finish(problem, sf, status, z, lam, iter);
}

}  // namespace mies::qp
