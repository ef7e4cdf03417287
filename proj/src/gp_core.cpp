#include "fdcell/gp_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>

namespace fdcell::gp {

Monomial::Monomial(double coeff, Exponents exponents) : coeff_(coeff) {
  if (!(coeff > 0.0) || !std::isfinite(coeff))
    throw std::invalid_argument("monomial coefficient must be positive and finite");
  std::map<int, double> merged;
  for (const auto& [var, e] : exponents) {
    if (var < 0) throw std::invalid_argument("negative variable id");
    merged[var] += e;
  }
  for (const auto& [var, e] : merged)
    if (e != 0.0) exponents_.emplace_back(var, e);
}

double Monomial::exponent(int var) const {
  for (const auto& [v, e] : exponents_)
    if (v == var) return e;
  return 0.0;
}

double Monomial::evaluate(std::span<const double> x) const {
  double v = coeff_;
  for (const auto& [var, e] : exponents_) v *= std::pow(x[var], e);
  return v;
}

double Monomial::log_evaluate(std::span<const double> y) const {
  double v = std::log(coeff_);
  for (const auto& [var, e] : exponents_) v += e * y[var];
  return v;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Exponents all = exponents_;
  all.insert(all.end(), o.exponents_.begin(), o.exponents_.end());
  return Monomial(coeff_ * o.coeff_, std::move(all));
}

Monomial Monomial::pow(double e) const {
  Exponents scaled;
  for (const auto& [var, a] : exponents_) scaled.emplace_back(var, a * e);
  return Monomial(std::pow(coeff_, e), std::move(scaled));
}

Posynomial::Posynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) {}

void Posynomial::add(Monomial m) { terms_.push_back(std::move(m)); }

double Posynomial::evaluate(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.evaluate(x);
  return s;
}

int Posynomial::max_var() const {
  int m = -1;
  for (const auto& t : terms_)
    for (const auto& [var, e] : t.exponents()) m = std::max(m, var);
  return m;
}

Monomial condense(const Posynomial& p, std::span<const double> x0) {
  if (p.empty()) throw std::invalid_argument("cannot condense an empty posynomial");
  const double total = p.evaluate(x0);
  // prod_j (u_j/a_j)^a_j = prod_j (c_j/a_j)^a_j * x^(sum_j a_j e_j)
  double log_coeff = 0.0;
  Monomial::Exponents exps;
  for (const auto& t : p.terms()) {
    const double a = t.evaluate(x0) / total;
    if (a <= 0.0) continue;
    log_coeff += a * (std::log(t.coeff()) - std::log(a));
    for (const auto& [var, e] : t.exponents()) exps.emplace_back(var, a * e);
  }
  return Monomial(std::exp(log_coeff), std::move(exps));
}

Problem Problem::minimize(int num_vars, Posynomial objective, double lower, double upper) {
  Problem p;
  p.num_vars = num_vars;
  p.objective.push_back({1.0, std::move(objective)});
  p.lower.assign(num_vars, lower);
  p.upper.assign(num_vars, upper);
  return p;
}

void Problem::validate() const {
  if (num_vars < 1) throw std::invalid_argument("GP needs at least one variable");
  if (static_cast<int>(lower.size()) != num_vars || static_cast<int>(upper.size()) != num_vars)
    throw std::invalid_argument("GP bounds must cover every variable");
  for (int i = 0; i < num_vars; ++i)
    if (!(lower[i] > 0.0) || !(lower[i] <= upper[i]) || !std::isfinite(upper[i]))
      throw std::invalid_argument("GP bounds must satisfy 0 < lo <= hi < inf");
  if (objective.empty()) throw std::invalid_argument("GP objective is empty");
  for (const auto& f : objective) {
    if (f.posy.empty()) throw std::invalid_argument("empty objective factor");
    if (f.posy.terms().size() > 1 && !(f.exponent > 0.0))
      throw std::invalid_argument("multi-term objective factors need a positive exponent");
    if (f.posy.max_var() >= num_vars) throw std::invalid_argument("objective references unknown variable");
  }
  for (const auto& q : inequalities)
    if (q.empty() || q.max_var() >= num_vars) throw std::invalid_argument("bad inequality posynomial");
  for (const auto& m : equalities)
    if (!m.exponents().empty() && m.exponents().back().first >= num_vars)
      throw std::invalid_argument("equality references unknown variable");
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max_iterations";
    case Status::LineSearchFailure: return "line_search_failure";
    case Status::Infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// log-sum-exp form of a posynomial in y = log x.
class LogPosy {
 public:
  LogPosy(const Posynomial& p, int n) : n_(n) {
    for (const auto& t : p.terms()) {
      logc_.push_back(std::log(t.coeff()));
      exps_.push_back(t.exponents());
      for (const auto& [v, e] : t.exponents()) touched_.push_back(v);
    }
    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
    z_.resize(logc_.size());
  }

  // Adds scale * (gradient, Hessian) into the outputs when given.
  double eval(const VectorXd& y, double scale, VectorXd* grad, MatrixXd* hess) const {
    double zmax = -kInf;
    for (size_t j = 0; j < logc_.size(); ++j) {
      double z = logc_[j];
      for (const auto& [v, e] : exps_[j]) z += e * y[v];
      z_[j] = z;
      zmax = std::max(zmax, z);
    }
    double s = 0.0;
    for (double& z : z_) {
      z = std::exp(z - zmax);
      s += z;
    }
    const double value = zmax + std::log(s);
    if (!grad && !hess) return value;

    VectorXd g = VectorXd::Zero(n_);
    for (size_t j = 0; j < logc_.size(); ++j) {
      const double w = z_[j] / s;
      for (const auto& [v, e] : exps_[j]) g[v] += w * e;
      if (hess)
        for (const auto& [v1, e1] : exps_[j])
          for (const auto& [v2, e2] : exps_[j]) (*hess)(v1, v2) += scale * w * e1 * e2;
    }
    if (hess)
      for (int v1 : touched_)
        for (int v2 : touched_) (*hess)(v1, v2) -= scale * g[v1] * g[v2];
    if (grad) *grad += scale * g;
    return value;
  }

 private:
  int n_;
  std::vector<double> logc_;
  std::vector<Monomial::Exponents> exps_;
  std::vector<int> touched_;
  mutable std::vector<double> z_;
};

struct LogObjective {
  std::vector<double> exponents;
  std::vector<LogPosy> factors;

  LogObjective(const Problem& p) {
    for (const auto& f : p.objective) {
      exponents.push_back(f.exponent);
      factors.emplace_back(f.posy, p.num_vars);
    }
  }

  double eval(const VectorXd& y, VectorXd* grad, MatrixXd* hess) const {
    double v = 0.0;
    for (size_t i = 0; i < factors.size(); ++i) v += exponents[i] * factors[i].eval(y, exponents[i], grad, hess);
    return v;
  }
};

VectorXd clamp(const VectorXd& y, const VectorXd& lo, const VectorXd& hi) {
  return y.cwiseMax(lo).cwiseMin(hi);
}

// Solves H d = -g for symmetric positive semidefinite H, adding a small ridge
// until the factorization is positive definite.
VectorXd newton_direction(const MatrixXd& h, const VectorXd& g) {
  const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
  double ridge = 1e-12 * scale;
  const int n = static_cast<int>(g.size());
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::LLT<MatrixXd> llt(h + ridge * MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      VectorXd d = llt.solve(-g);
      if (d.allFinite()) return d;
    }
    ridge *= 100.0;
  }
  return -g;
}

Result finish(const Problem& prob, const VectorXd& y, Status status, int iters, double residual) {
  Result r;
  r.x.resize(prob.num_vars);
  for (int i = 0; i < prob.num_vars; ++i) r.x[i] = std::exp(y[i]);
  r.status = status;
  r.iterations = iters;
  r.kkt_residual = residual;
  r.objective = objective_value(prob, r.x);
  return r;
}

// Two-metric projected Newton for box-constrained smooth convex problems.
Result solve_box(const Problem& prob, const Options& opts, VectorXd y) {
  const int n = prob.num_vars;
  const LogObjective obj(prob);
  VectorXd lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = std::log(prob.lower[i]);
    hi[i] = std::log(prob.upper[i]);
  }
  y = clamp(y, lo, hi);

  double residual = kInf;
  for (int it = 0; it < opts.max_iter; ++it) {
    VectorXd g = VectorXd::Zero(n);
    MatrixXd h = MatrixXd::Zero(n, n);
    const double f = obj.eval(y, &g, &h);
    residual = (y - clamp(y - g, lo, hi)).cwiseAbs().maxCoeff();
    if (residual <= opts.tol) return finish(prob, y, Status::Converged, it, residual);

    const double eps = std::min(1e-3, residual);
    std::vector<int> free_vars;
    std::vector<bool> active(n, false);
    for (int i = 0; i < n; ++i) {
      active[i] = (y[i] <= lo[i] + eps && g[i] > 0.0) || (y[i] >= hi[i] - eps && g[i] < 0.0);
      if (!active[i]) free_vars.push_back(i);
    }
    VectorXd d = VectorXd::Zero(n);
    if (!free_vars.empty()) {
      const int m = static_cast<int>(free_vars.size());
      MatrixXd hf(m, m);
      VectorXd gf(m);
      for (int a = 0; a < m; ++a) {
        gf[a] = g[free_vars[a]];
        for (int b = 0; b < m; ++b) hf(a, b) = h(free_vars[a], free_vars[b]);
      }
      const VectorXd df = newton_direction(hf, gf);
      for (int a = 0; a < m; ++a) d[free_vars[a]] = df[a];
    }
    for (int i = 0; i < n; ++i)
      if (active[i]) d[i] = -g[i] / std::max(h(i, i), 1e-8);

    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-14; alpha *= 0.5) {
      const VectorXd trial = clamp(y + alpha * d, lo, hi);
      const double decrease = g.dot(trial - y);
      if (decrease >= 0.0) continue;
      const double ft = obj.eval(trial, nullptr, nullptr);
      if (ft <= f + 1e-4 * decrease) {
        y = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(prob, y, Status::LineSearchFailure, it + 1, residual);
  }
  return finish(prob, y, Status::MaxIterations, opts.max_iter, residual);
}

using SmoothFn = std::function<double(const VectorXd&, VectorXd*, MatrixXd*)>;

struct BarrierProblem {
  int n = 0;
  SmoothFn objective;
  std::vector<SmoothFn> inequalities;  // f_i(y) <= 0
  VectorXd lo, hi;                     // may be infinite
  MatrixXd a_eq;                       // A y = b
  VectorXd b_eq;
};

struct BarrierOutcome {
  VectorXd y;
  Status status;
  double gap;
};

BarrierOutcome barrier(const BarrierProblem& bp, VectorXd y, const Options& opts, int& iters,
                       const std::function<bool(const VectorXd&)>& stop_early) {
  const int n = bp.n;
  int m = static_cast<int>(bp.inequalities.size());
  for (int i = 0; i < n; ++i) m += std::isfinite(bp.lo[i]) + std::isfinite(bp.hi[i]);
  const int p = static_cast<int>(bp.a_eq.rows());

  const auto strictly_feasible = [&](const VectorXd& z) {
    for (int i = 0; i < n; ++i)
      if (!(z[i] > bp.lo[i] && z[i] < bp.hi[i])) return false;
    for (const auto& f : bp.inequalities)
      if (!(f(z, nullptr, nullptr) < 0.0)) return false;
    return true;
  };
  const auto phi = [&](const VectorXd& z, double t, VectorXd* g, MatrixXd* h) {
    double v = t * bp.objective(z, nullptr, nullptr);
    if (g) {
      VectorXd g0 = VectorXd::Zero(n);
      MatrixXd h0 = MatrixXd::Zero(n, n);
      bp.objective(z, &g0, &h0);
      *g = t * g0;
      *h = t * h0;
    }
    for (const auto& f : bp.inequalities) {
      VectorXd gi = VectorXd::Zero(n);
      MatrixXd hi = MatrixXd::Zero(n, n);
      const double fi = f(z, g ? &gi : nullptr, g ? &hi : nullptr);
      v -= std::log(-fi);
      if (g) {
        *g += gi / -fi;
        *h += hi / -fi + gi * gi.transpose() / (fi * fi);
      }
    }
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(bp.lo[i])) {
        const double s = z[i] - bp.lo[i];
        v -= std::log(s);
        if (g) {
          (*g)[i] -= 1.0 / s;
          (*h)(i, i) += 1.0 / (s * s);
        }
      }
      if (std::isfinite(bp.hi[i])) {
        const double s = bp.hi[i] - z[i];
        v -= std::log(s);
        if (g) {
          (*g)[i] += 1.0 / s;
          (*h)(i, i) += 1.0 / (s * s);
        }
      }
    }
    return v;
  };

  double t = 1.0;
  constexpr double mu = 10.0;
  while (true) {
    for (int inner = 0; inner < 100; ++inner) {
      if (iters >= opts.max_iter) return {y, Status::MaxIterations, m / t};
      VectorXd g;
      MatrixXd h;
      const double v = phi(y, t, &g, &h);
      VectorXd d;
      if (p == 0) {
        d = newton_direction(h, g);
      } else {
        MatrixXd kkt = MatrixXd::Zero(n + p, n + p);
        kkt.topLeftCorner(n, n) = h;
        kkt.topRightCorner(n, p) = bp.a_eq.transpose();
        kkt.bottomLeftCorner(p, n) = bp.a_eq;
        VectorXd rhs = VectorXd::Zero(n + p);
        rhs.head(n) = -g;
        d = kkt.fullPivLu().solve(rhs).head(n);
      }
      ++iters;
      const double lambda2 = -g.dot(d);
      if (lambda2 / 2.0 <= 1e-12) break;
      double alpha = 1.0;
      while (alpha > 1e-14 && !strictly_feasible(y + alpha * d)) alpha *= 0.5;
      while (alpha > 1e-14 && phi(y + alpha * d, t, nullptr, nullptr) > v - 0.25 * alpha * lambda2)
        alpha *= 0.5;
      if (alpha <= 1e-14) return {y, Status::LineSearchFailure, m / t};
      y += alpha * d;
      if (stop_early && stop_early(y)) return {y, Status::Converged, m / t};
    }
    if (m / t < opts.tol) return {y, Status::Converged, m / t};
    t *= mu;
  }
}

Result solve_constrained(const Problem& prob, const Options& opts, VectorXd y) {
  const int n = prob.num_vars;
  const LogObjective obj(prob);
  std::vector<LogPosy> ineqs;
  for (const auto& q : prob.inequalities) ineqs.emplace_back(q, n);

  VectorXd lo(n), hi(n);
  std::vector<int> fixed;
  for (int i = 0; i < n; ++i) {
    lo[i] = std::log(prob.lower[i]);
    hi[i] = std::log(prob.upper[i]);
    if (prob.lower[i] == prob.upper[i]) fixed.push_back(i);
  }
  // Equalities are linear in y; fixed variables become equality rows too.
  const int p = static_cast<int>(prob.equalities.size() + fixed.size());
  MatrixXd a = MatrixXd::Zero(p, n);
  VectorXd b = VectorXd::Zero(p);
  for (size_t k = 0; k < prob.equalities.size(); ++k) {
    for (const auto& [v, e] : prob.equalities[k].exponents()) a(k, v) = e;
    b[k] = -std::log(prob.equalities[k].coeff());
  }
  for (size_t k = 0; k < fixed.size(); ++k) {
    const int row = static_cast<int>(prob.equalities.size() + k);
    a(row, fixed[k]) = 1.0;
    b[row] = lo[fixed[k]];
    lo[fixed[k]] = -kInf;
    hi[fixed[k]] = kInf;
  }

  // Strictly interior start, then projected onto the equality set.
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(lo[i])) continue;
    const double margin = 1e-3 * (hi[i] - lo[i]);
    y[i] = std::clamp(y[i], lo[i] + margin, hi[i] - margin);
  }
  if (p > 0) {
    const VectorXd r = a * y - b;
    y -= a.transpose() * (a * a.transpose()).ldlt().solve(r);
    for (int i = 0; i < n; ++i)
      if (!(y[i] > lo[i] && y[i] < hi[i])) return finish(prob, y, Status::Infeasible, 0, kInf);
  }

  int iters = 0;
  double worst = -kInf;
  for (const auto& q : ineqs) worst = std::max(worst, q.eval(y, 1.0, nullptr, nullptr));
  if (!ineqs.empty() && worst >= 0.0) {
    // Phase I over (y, s): minimize s subject to log q_j(y) <= s.
    BarrierProblem ph;
    ph.n = n + 1;
    ph.objective = [n](const VectorXd& z, VectorXd* g, MatrixXd*) {
      if (g) (*g)[n] += 1.0;
      return z[n];
    };
    for (const auto& q : ineqs) {
      ph.inequalities.push_back([&q, n](const VectorXd& z, VectorXd* g, MatrixXd* h) {
        VectorXd gy = VectorXd::Zero(n);
        MatrixXd hy = MatrixXd::Zero(n, n);
        const double v = q.eval(z.head(n), 1.0, g ? &gy : nullptr, h ? &hy : nullptr);
        if (g) {
          g->head(n) += gy;
          (*g)[n] -= 1.0;
        }
        if (h) h->topLeftCorner(n, n) += hy;
        return v - z[n];
      });
    }
    ph.lo = VectorXd::Constant(n + 1, -kInf);
    ph.hi = VectorXd::Constant(n + 1, kInf);
    ph.lo.head(n) = lo;
    ph.hi.head(n) = hi;
    ph.a_eq = MatrixXd::Zero(p, n + 1);
    ph.a_eq.leftCols(n) = a;
    ph.b_eq = b;
    VectorXd z(n + 1);
    z.head(n) = y;
    z[n] = worst + 1.0;
    const auto out = barrier(ph, z, opts, iters, [n](const VectorXd& zz) { return zz[n] < 0.0; });
    if (!(out.y[n] < 0.0)) {
      const Status s = out.status == Status::Converged ? Status::Infeasible : out.status;
      return finish(prob, out.y.head(n), s, iters, out.gap);
    }
    y = out.y.head(n);
  }

  BarrierProblem bp;
  bp.n = n;
  bp.objective = [&obj, n](const VectorXd& z, VectorXd* g, MatrixXd* h) {
    VectorXd gz = VectorXd::Zero(n);
    MatrixXd hz = MatrixXd::Zero(n, n);
    const double v = obj.eval(z, g ? &gz : nullptr, h ? &hz : nullptr);
    if (g) *g += gz;
    if (h) *h += hz;
    return v;
  };
  for (const auto& q : ineqs)
    bp.inequalities.push_back([&q](const VectorXd& z, VectorXd* g, MatrixXd* h) {
      return q.eval(z, 1.0, g, h);
    });
  bp.lo = lo;
  bp.hi = hi;
  bp.a_eq = a;
  bp.b_eq = b;
  const auto out = barrier(bp, y, opts, iters, {});
  return finish(prob, out.y, out.status, iters, out.gap);
}

}  // namespace

double objective_value(const Problem& prob, std::span<const double> x) {
  double v = 1.0;
  for (const auto& f : prob.objective) v *= std::pow(f.posy.evaluate(x), f.exponent);
  return v;
}

double log_objective(const Problem& prob, std::span<const double> y) {
  std::vector<double> x(y.size());
  std::transform(y.begin(), y.end(), x.begin(), [](double v) { return std::exp(v); });
  double v = 0.0;
  for (const auto& f : prob.objective) v += f.exponent * std::log(f.posy.evaluate(x));
  return v;
}

Result solve(const Problem& prob, const Options& opts, std::span<const double> x0) {
  prob.validate();
  const int n = prob.num_vars;
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    if (!x0.empty() && x0[i] > 0.0)
      y[i] = std::log(x0[i]);
    else
      y[i] = 0.5 * (std::log(prob.lower[i]) + std::log(prob.upper[i]));
  }
  if (prob.inequalities.empty() && prob.equalities.empty()) return solve_box(prob, opts, y);
  return solve_constrained(prob, opts, y);
}

namespace {

void write_monomial(std::ostream& os, const Monomial& m) {
  os << "term " << m.coeff();
  for (const auto& [v, e] : m.exponents()) os << ' ' << v << ':' << e;
  os << '\n';
}

}  // namespace

void write_text(std::ostream& os, const Problem& prob) {
  const auto old = os.precision(17);
  os << "gp " << prob.num_vars << '\n';
  for (int i = 0; i < prob.num_vars; ++i) os << "bound " << i << ' ' << prob.lower[i] << ' ' << prob.upper[i] << '\n';
  for (const auto& f : prob.objective) {
    os << "objective " << f.exponent << '\n';
    for (const auto& t : f.posy.terms()) write_monomial(os, t);
  }
  for (const auto& q : prob.inequalities) {
    os << "inequality\n";
    for (const auto& t : q.terms()) write_monomial(os, t);
  }
  for (const auto& m : prob.equalities) {
    os << "equality\n";
    write_monomial(os, m);
  }
  os.precision(old);
}

}  // namespace fdcell::gp
