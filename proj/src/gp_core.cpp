#include "scdn/gp_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "scdn/errors.hpp"

namespace scdn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Posynomial& Posynomial::add(const Monomial& m) {
  if (m.coef == 0.0) return *this;
  if (!(m.coef > 0.0) || !std::isfinite(m.coef))
    throw Error(ErrorCode::DomainError, "monomial coefficient must be positive and finite");
  for (auto& t : terms) {
    if (t.exps == m.exps) {
      t.coef += m.coef;
      return *this;
    }
  }
  terms.push_back(m);
  return *this;
}

Posynomial& Posynomial::add(const Posynomial& p) {
  for (const auto& t : p.terms) add(t);
  return *this;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  r.coef *= b.coef;
  for (const auto& [v, e] : b.exps) {
    r.exps[v] += e;
    if (r.exps[v] == 0.0) r.exps.erase(v);
  }
  return r;
}

Monomial operator*(double c, const Monomial& a) {
  Monomial r = a;
  r.coef *= c;
  return r;
}

Monomial pow(const Monomial& a, double p) {
  Monomial r;
  r.coef = std::pow(a.coef, p);
  for (const auto& [v, e] : a.exps)
    if (e * p != 0.0) r.exps[v] = e * p;
  return r;
}

Monomial operator/(const Monomial& a, const Monomial& b) { return a * pow(b, -1.0); }

Posynomial operator+(const Posynomial& a, const Posynomial& b) {
  Posynomial r = a;
  r.add(b);
  return r;
}

Posynomial operator*(const Posynomial& a, const Posynomial& b) {
  Posynomial r;
  for (const auto& x : a.terms)
    for (const auto& y : b.terms) r.add(x * y);
  return r;
}

Posynomial operator*(const Posynomial& a, const Monomial& b) {
  Posynomial r;
  for (const auto& x : a.terms) r.add(x * b);
  return r;
}

Posynomial operator*(double c, const Posynomial& a) {
  Posynomial r;
  for (const auto& x : a.terms) r.add(c * x);
  return r;
}

Posynomial operator/(const Posynomial& a, const Monomial& b) { return a * pow(b, -1.0); }

double eval(const Monomial& m, const Point& x) {
  double v = m.coef;
  for (const auto& [id, e] : m.exps) {
    if (id < 0 || id >= static_cast<int>(x.size())) throw Error(ErrorCode::DomainError, "unknown variable id");
    if (!(x[id] > 0.0)) throw Error(ErrorCode::NonPositivePoint, "variable " + std::to_string(id));
    v *= std::pow(x[id], e);
  }
  return v;
}

double eval(const Posynomial& p, const Point& x) {
  double s = 0.0;
  for (const auto& t : p.terms) s += eval(t, x);
  return s;
}

Monomial condense(const Posynomial& p, const Point& anchor) {
  if (p.terms.empty()) throw Error(ErrorCode::DomainError, "condensing an empty posynomial");
  std::vector<double> u(p.terms.size());
  double h = 0.0;
  for (size_t m = 0; m < p.terms.size(); ++m) {
    u[m] = eval(p.terms[m], anchor);
    h += u[m];
  }
  Monomial r;
  double log_coef = 0.0;
  for (size_t m = 0; m < p.terms.size(); ++m) {
    const double g = u[m] / h;
    if (g <= 0.0) continue;  // g log g -> 0
    log_coef += g * (std::log(p.terms[m].coef) - std::log(g));
    for (const auto& [v, e] : p.terms[m].exps) r.exps[v] += g * e;
  }
  for (auto it = r.exps.begin(); it != r.exps.end();) {
    if (it->second == 0.0)
      it = r.exps.erase(it);
    else
      ++it;
  }
  r.coef = std::exp(log_coef);
  return r;
}

int GpProblem::add_var(const std::string& name, double lo, double hi) {
  vars.push_back(Variable{name, lo, hi});
  return static_cast<int>(vars.size()) - 1;
}

void GpProblem::add_ineq(const Posynomial& p, const std::string& name) {
  if (p.empty()) return;
  ineq.push_back(p);
  ineq_names.push_back(name);
}

void GpProblem::validate() const {
  const int n = num_vars();
  for (const auto& v : vars)
    if (!(v.lo > 0.0) || !(v.hi >= v.lo) || !std::isfinite(v.hi))
      throw Error(ErrorCode::DomainError, "bad bounds on " + v.name);
  auto check = [n](const Monomial& m) {
    if (!(m.coef > 0.0)) throw Error(ErrorCode::DomainError, "non-positive coefficient");
    for (const auto& [id, e] : m.exps)
      if (id < 0 || id >= n || !std::isfinite(e)) throw Error(ErrorCode::DomainError, "bad exponent reference");
  };
  for (const auto& t : objective.terms) check(t);
  for (const auto& e : objective_exp)
    if (e.var < 0 || e.var >= n || !(e.coef > 0.0) || !(e.scale > 0.0))
      throw Error(ErrorCode::DomainError, "bad exponential term");
  for (const auto& p : ineq)
    for (const auto& t : p.terms) check(t);
  for (const auto& m : eq) check(m);
  if (objective.terms.empty() && objective_exp.empty()) throw Error(ErrorCode::DomainError, "empty objective");
}

double GpProblem::objective_value(const Point& x) const {
  double v = objective.terms.empty() ? 0.0 : eval(objective, x);
  for (const auto& e : objective_exp) v += e.coef * std::exp(e.scale * x[e.var]);
  return v;
}

double GpProblem::max_violation(const Point& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : ineq) worst = std::max(worst, eval(p, x) - 1.0);
  for (const auto& m : eq) worst = std::max(worst, std::abs(eval(m, x) - 1.0));
  for (int i = 0; i < num_vars(); ++i) {
    worst = std::max(worst, (vars[i].lo - x[i]) / vars[i].lo);
    worst = std::max(worst, (x[i] - vars[i].hi) / vars[i].hi);
  }
  return worst;
}

std::string GpProblem::dump() const {
  std::ostringstream os;
  os.precision(17);
  auto term = [&](const Monomial& m) {
    os << m.coef;
    for (const auto& [v, e] : m.exps) os << ' ' << vars[v].name << '^' << e;
    os << '\n';
  };
  os << "variables " << vars.size() << '\n';
  for (const auto& v : vars) os << v.name << ' ' << v.lo << ' ' << v.hi << '\n';
  os << "objective\n";
  for (const auto& t : objective.terms) term(t);
  for (const auto& e : objective_exp) os << e.coef << " exp(" << e.scale << '*' << vars[e.var].name << ")\n";
  for (size_t i = 0; i < ineq.size(); ++i) {
    os << "ineq " << (ineq_names[i].empty() ? std::to_string(i) : ineq_names[i]) << '\n';
    for (const auto& t : ineq[i].terms) term(t);
  }
  for (size_t i = 0; i < eq.size(); ++i) {
    os << "eq " << i << '\n';
    term(eq[i]);
  }
  return os.str();
}

namespace {

ConvexTerm convex_term(const Monomial& m) {
  ConvexTerm t;
  t.b = std::log(m.coef);
  for (const auto& [v, e] : m.exps) t.a.emplace_back(v, e);
  return t;
}

LseFunction lse_of(const Posynomial& p) {
  LseFunction f;
  for (const auto& m : p.terms) f.terms.push_back(convex_term(m));
  return f;
}

}  // namespace

double LseFunction::value(const VectorXd& z) const {
  std::vector<double> t(terms.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < terms.size(); ++k) {
    const auto& c = terms[k];
    double v = c.b;
    if (c.is_exp) {
      v += c.scale * std::exp(z(c.var));
    } else {
      for (const auto& [i, a] : c.a) v += a * z(i);
    }
    t[k] = v;
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : t) s += std::exp(v - mx);
  return mx + std::log(s);
}

double LseFunction::eval(const VectorXd& z, VectorXd& grad, MatrixXd* hess) const {
  const Eigen::Index n = z.size();
  grad = VectorXd::Zero(n);
  std::vector<double> t(terms.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < terms.size(); ++k) {
    const auto& c = terms[k];
    double v = c.b;
    if (c.is_exp) {
      v += c.scale * std::exp(z(c.var));
    } else {
      for (const auto& [i, a] : c.a) v += a * z(i);
    }
    t[k] = v;
    mx = std::max(mx, v);
  }
  double s = 0.0;
  for (double& v : t) {
    v = std::exp(v - mx);
    s += v;
  }
  const double val = mx + std::log(s);
  for (size_t k = 0; k < terms.size(); ++k) {
    const double p = t[k] / s;
    if (p == 0.0) continue;
    const auto& c = terms[k];
    if (c.is_exp) {
      const double d = c.scale * std::exp(z(c.var));
      grad(c.var) += p * d;
      if (hess) (*hess)(c.var, c.var) += p * (d * d + d);
    } else {
      for (const auto& [i, a] : c.a) {
        grad(i) += p * a;
        if (hess)
          for (const auto& [j, b] : c.a) (*hess)(i, j) += p * a * b;
      }
    }
  }
  if (hess) hess->noalias() -= grad * grad.transpose();
  return val;
}

ConvexProgram to_convex_form(const GpProblem& problem) {
  problem.validate();
  ConvexProgram cp;
  cp.n = problem.num_vars();
  cp.objective = lse_of(problem.objective);
  for (const auto& e : problem.objective_exp) {
    ConvexTerm t;
    t.is_exp = true;
    t.b = std::log(e.coef);
    t.var = e.var;
    t.scale = e.scale;
    cp.objective.terms.push_back(t);
  }
  for (const auto& p : problem.ineq) cp.ineq.push_back(lse_of(p));
  cp.a_eq = MatrixXd::Zero(static_cast<Eigen::Index>(problem.eq.size()), cp.n);
  cp.b_eq = VectorXd::Zero(static_cast<Eigen::Index>(problem.eq.size()));
  for (size_t r = 0; r < problem.eq.size(); ++r) {
    for (const auto& [v, e] : problem.eq[r].exps) cp.a_eq(static_cast<Eigen::Index>(r), v) = e;
    cp.b_eq(static_cast<Eigen::Index>(r)) = -std::log(problem.eq[r].coef);
  }
  cp.lo.resize(cp.n);
  cp.hi.resize(cp.n);
  for (int i = 0; i < cp.n; ++i) {
    cp.lo(i) = std::log(problem.vars[i].lo);
    cp.hi(i) = std::log(problem.vars[i].hi);
  }
  return cp;
}

namespace {

// Each function restricted to its own variables so Hessian updates stay local.
struct CompiledFn {
  struct Term {
    double b = 0.0;
    std::vector<std::pair<int, double>> a;  // local index, exponent
    bool is_exp = false;
    int var = 0;  // local index
    double scale = 0.0;
  };
  std::vector<int> sup;
  std::vector<Term> terms;

  explicit CompiledFn(const LseFunction& f) {
    for (const auto& t : f.terms) {
      if (t.is_exp) sup.push_back(t.var);
      for (const auto& [i, a] : t.a) sup.push_back(i);
    }
    std::sort(sup.begin(), sup.end());
    sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
    auto local = [this](int g) { return static_cast<int>(std::lower_bound(sup.begin(), sup.end(), g) - sup.begin()); };
    for (const auto& t : f.terms) {
      Term c;
      c.b = t.b;
      c.is_exp = t.is_exp;
      c.scale = t.scale;
      if (t.is_exp) c.var = local(t.var);
      for (const auto& [i, a] : t.a) c.a.emplace_back(local(i), a);
      terms.push_back(std::move(c));
    }
  }

  // Value; local gradient and Hessian when requested.
  double eval(const VectorXd& z, VectorXd* g, MatrixXd* h) const {
    const int k = static_cast<int>(sup.size());
    thread_local std::vector<double> zl, t;
    zl.resize(k);
    for (int i = 0; i < k; ++i) zl[i] = z(sup[i]);
    t.resize(terms.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t q = 0; q < terms.size(); ++q) {
      const auto& c = terms[q];
      double v = c.b;
      if (c.is_exp)
        v += c.scale * std::exp(zl[c.var]);
      else
        for (const auto& [i, a] : c.a) v += a * zl[i];
      t[q] = v;
      mx = std::max(mx, v);
    }
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double& v : t) {
      v = std::exp(v - mx);
      s += v;
    }
    const double val = mx + std::log(s);
    if (!g) return val;
    g->setZero(k);
    if (h) h->setZero(k, k);
    for (size_t q = 0; q < terms.size(); ++q) {
      const double p = t[q] / s;
      if (p == 0.0) continue;
      const auto& c = terms[q];
      if (c.is_exp) {
        const double d = c.scale * std::exp(zl[c.var]);
        (*g)(c.var) += p * d;
        if (h) (*h)(c.var, c.var) += p * (d * d + d);
      } else {
        for (const auto& [i, a] : c.a) {
          (*g)(i) += p * a;
          if (h)
            for (const auto& [j, b] : c.a) (*h)(i, j) += p * a * b;
        }
      }
    }
    if (h) h->noalias() -= (*g) * g->transpose();
    return val;
  }
};

struct Workspace {
  const ConvexProgram& cp;
  std::vector<CompiledFn> ineq;
  CompiledFn obj;
  VectorXd z0;
  MatrixXd N;  // null-space basis when there are equalities
  bool reduced = false;

  explicit Workspace(const ConvexProgram& c) : cp(c), obj(c.objective) {
    for (const auto& f : cp.ineq) ineq.emplace_back(f);
  }

  VectorXd z_of(const VectorXd& w) const { return reduced ? VectorXd(z0 + N * w) : w; }
  int dim() const { return reduced ? static_cast<int>(N.cols()) : cp.n; }
};

// Barrier value/grad/Hessian in z coordinates. `phase1_s` (when non-null)
// replaces -F_i by s - F_i and the objective by s.
bool barrier_eval(const Workspace& ws, const VectorXd& z, double t, const double* phase1_s, bool need_hess, double& f,
                  VectorXd& gz, MatrixXd& hz, double& gs, double& hss, VectorXd& hzs) {
  const ConvexProgram& cp = ws.cp;
  const int n = cp.n;
  f = 0.0;
  gz = VectorXd::Zero(n);
  if (need_hess) hz = MatrixXd::Zero(n, n);
  gs = 0.0;
  hss = 0.0;
  if (phase1_s) hzs = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double a = z(i) - cp.lo(i), b = cp.hi(i) - z(i);
    if (!(a > 0.0) || !(b > 0.0)) return false;
    f -= std::log(a) + std::log(b);
    gz(i) += -1.0 / a + 1.0 / b;
    if (need_hess) hz(i, i) += 1.0 / (a * a) + 1.0 / (b * b);
  }
  VectorXd g;
  MatrixXd h;
  for (const auto& fn : ws.ineq) {
    const double F = fn.eval(z, &g, need_hess ? &h : nullptr);
    const double slack = phase1_s ? (*phase1_s - F) : -F;
    if (!(slack > 0.0) || !std::isfinite(F)) return false;
    f -= std::log(slack);
    const auto& sp = fn.sup;
    const int k = static_cast<int>(sp.size());
    for (int a = 0; a < k; ++a) gz(sp[a]) += g(a) / slack;
    if (need_hess) {
      const double s2 = slack * slack;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) hz(sp[a], sp[b]) += h(a, b) / slack + g(a) * g(b) / s2;
    }
    if (phase1_s) {
      gs -= 1.0 / slack;
      if (need_hess) {
        const double s2 = slack * slack;
        hss += 1.0 / s2;
        for (int a = 0; a < k; ++a) hzs(sp[a]) -= g(a) / s2;
      }
    }
  }
  if (phase1_s) {
    f += t * (*phase1_s);
    gs += t;
  } else {
    const double F0 = ws.obj.eval(z, &g, need_hess ? &h : nullptr);
    if (!std::isfinite(F0)) return false;
    f += t * F0;
    const auto& sp = ws.obj.sup;
    const int k = static_cast<int>(sp.size());
    for (int a = 0; a < k; ++a) gz(sp[a]) += t * g(a);
    if (need_hess)
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) hz(sp[a], sp[b]) += t * h(a, b);
  }
  return std::isfinite(f);
}

struct Problem1D {
  // y = w (phase 2) or (w, s) (phase 1)
  const Workspace& ws;
  bool phase1;
  double t = 1.0;

  bool eval(const VectorXd& y, bool need_hess, double& f, VectorXd& g, MatrixXd& H) const {
    const int k = ws.dim();
    VectorXd w = y.head(k);
    const VectorXd z = ws.z_of(w);
    VectorXd gz, hzs;
    MatrixXd hz;
    double gs = 0.0, hss = 0.0;
    double s = phase1 ? y(k) : 0.0;
    if (!barrier_eval(ws, z, t, phase1 ? &s : nullptr, need_hess, f, gz, hz, gs, hss, hzs)) return false;
    const int m = phase1 ? k + 1 : k;
    g.resize(m);
    if (ws.reduced)
      g.head(k) = ws.N.transpose() * gz;
    else
      g.head(k) = gz;
    if (phase1) g(k) = gs;
    if (need_hess) {
      H.resize(m, m);
      if (ws.reduced)
        H.topLeftCorner(k, k) = ws.N.transpose() * hz * ws.N;
      else
        H.topLeftCorner(k, k) = hz;
      if (phase1) {
        const VectorXd c = ws.reduced ? VectorXd(ws.N.transpose() * hzs) : hzs;
        H.block(0, k, k, 1) = c;
        H.block(k, 0, 1, k) = c.transpose();
        H(k, k) = hss;
      }
    }
    return true;
  }
};

// Damped Newton centering. Returns Newton steps taken; sets `centered`.
int center(const Problem1D& p, VectorXd& y, const SolveOptions& o, bool& centered,
           const std::function<bool(const VectorXd&)>& stop = nullptr) {
  centered = false;
  int steps = 0;
  double f;
  VectorXd g;
  MatrixXd H;
  for (int it = 0; it < o.max_inner; ++it) {
    if (!p.eval(y, true, f, g, H)) throw Error(ErrorCode::NumericalBreakdown, "iterate left the barrier domain");
    if (!g.allFinite() || !H.allFinite()) throw Error(ErrorCode::NumericalBreakdown, "non-finite Newton system");
    Eigen::LDLT<MatrixXd> ldlt(H);
    VectorXd d = ldlt.solve(-g);
    double reg = 1e-14 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    while ((ldlt.info() != Eigen::Success || !d.allFinite() || g.dot(d) >= 0.0) && reg < 1e6) {
      MatrixXd Hr = H;
      Hr.diagonal().array() += reg;
      ldlt.compute(Hr);
      d = ldlt.solve(-g);
      reg *= 100.0;
    }
    if (!d.allFinite()) throw Error(ErrorCode::NumericalBreakdown, "Newton direction not finite");
    const double dec = -g.dot(d);
    if (dec / 2.0 <= o.tol_newton) {
      centered = true;
      break;
    }
    double step = 1.0, fn;
    VectorXd gn;
    MatrixXd Hn;
    bool moved = false;
    while (step > 1e-20) {
      VectorXd yn = y + step * d;
      if (p.eval(yn, false, fn, gn, Hn) && fn <= f - 0.01 * step * dec) {
        y = yn;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    ++steps;
    if (!moved || (step * d).lpNorm<Eigen::Infinity>() < o.tol_step * 1e-6) {
      // no representable progress left: treat as centered
      centered = true;
      break;
    }
    if (stop && stop(y)) break;
  }
  return steps;
}

}  // namespace

SolveReport solve(const GpProblem& problem, const Point& init, const SolveOptions& opts) {
  const ConvexProgram cp = to_convex_form(problem);
  const int n = cp.n;
  if (static_cast<int>(init.size()) != n) throw Error(ErrorCode::DomainError, "init size mismatch");
  VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    if (!(init[i] > 0.0)) throw Error(ErrorCode::NonPositivePoint, "init must be positive");
    const double width = cp.hi(i) - cp.lo(i);
    const double pad = std::min(1e-6, 0.25 * width);
    z(i) = std::clamp(std::log(init[i]), cp.lo(i) + pad, cp.hi(i) - pad);
  }

  Workspace ws(cp);
  VectorXd y;
  if (cp.a_eq.rows() > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(cp.a_eq, Eigen::ComputeFullV | Eigen::ComputeThinU);
    const VectorXd sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol;
    ws.reduced = true;
    ws.N = svd.matrixV().rightCols(n - rank);
    ws.z0 = z + svd.solve(cp.b_eq - cp.a_eq * z);
    y = VectorXd::Zero(n - rank);
    if ((cp.a_eq * ws.z0 - cp.b_eq).cwiseAbs().maxCoeff() > 1e-9) {
      SolveReport r;
      r.status = SolveStatus::Infeasible;
      r.x = init;
      r.max_violation = problem.max_violation(init);
      return r;
    }
    for (int i = 0; i < n; ++i)
      if (!(ws.z0(i) > cp.lo(i) && ws.z0(i) < cp.hi(i)))
        throw Error(ErrorCode::DomainError, "equality projection leaves the bound box");
  } else {
    y = z;
  }

  SolveReport rep;
  const int m = static_cast<int>(cp.ineq.size()) + 2 * n;

  // Phase 1 when some constraint is not strictly satisfied.
  double worst = -std::numeric_limits<double>::infinity();
  {
    const VectorXd zz = ws.z_of(y);
    for (const auto& f : ws.ineq) worst = std::max(worst, f.eval(zz, nullptr, nullptr));
  }
  if (worst >= 0.0) {
    Problem1D p{ws, true, 1.0 / opts.mu0};
    VectorXd ys(y.size() + 1);
    ys.head(y.size()) = y;
    ys(y.size()) = worst + 1.0;
    const int k = static_cast<int>(y.size());
    auto done = [k](const VectorXd& v) { return v(k) < -1e-4; };
    bool feasible = false;
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      bool centered;
      rep.iterations += center(p, ys, opts, centered, done);
      if (ys(k) < 0.0 && (done(ys) || static_cast<double>(m) / p.t < opts.tol_outer)) {
        feasible = true;
        break;
      }
      if (static_cast<double>(m + 1) / p.t < opts.tol_outer) break;
      p.t /= opts.mu_factor;
    }
    if (!feasible) {
      const VectorXd zz = ws.z_of(ys.head(k));
      rep.x.resize(n);
      for (int i = 0; i < n; ++i) rep.x[i] = std::exp(zz(i));
      rep.status = SolveStatus::Infeasible;
      rep.converged = false;
      rep.objective = problem.objective_value(rep.x);
      rep.max_violation = problem.max_violation(rep.x);
      return rep;
    }
    y = ys.head(k);
  }

  Problem1D p{ws, false, 1.0 / opts.mu0};
  bool ok = false;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    bool centered;
    rep.iterations += center(p, y, opts, centered);
    rep.outer_iterations = outer + 1;
    if (static_cast<double>(m) / p.t < opts.tol_outer) {
      ok = true;
      break;
    }
    p.t /= opts.mu_factor;
  }
  if (!ok) throw Error(ErrorCode::MaxIterations, "barrier outer loop exhausted");
  const VectorXd zz = ws.z_of(y);
  rep.x.resize(n);
  for (int i = 0; i < n; ++i) rep.x[i] = std::exp(zz(i));
  rep.objective = problem.objective_value(rep.x);
  rep.max_violation = problem.max_violation(rep.x);
  rep.converged = true;
  rep.status = SolveStatus::Converged;
  if (!std::isfinite(rep.objective)) throw Error(ErrorCode::NumericalBreakdown, "non-finite objective");
  return rep;
}

}  // namespace scdn
