#pragma once

// Geometric programming: monomial/posynomial algebra, AM-GM condensation and
// a log-barrier interior-point solver over the log-transformed problem.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace scdn {

using Point = std::vector<double>;

struct Monomial {
  double coef = 1.0;
  std::map<int, double> exps;  // variable id -> exponent

  static Monomial constant(double c) { return Monomial{c, {}}; }
  static Monomial var(int id, double power = 1.0) { return Monomial{1.0, {{id, power}}}; }
};

struct Posynomial {
  std::vector<Monomial> terms;

  Posynomial() = default;
  Posynomial(const Monomial& m) { add(m); }  // NOLINT(google-explicit-constructor)
  // Terms with a zero coefficient are dropped; equal exponent maps merge.
  Posynomial& add(const Monomial& m);
  Posynomial& add(const Posynomial& p);
  bool empty() const { return terms.empty(); }
};

Monomial operator*(const Monomial& a, const Monomial& b);
Monomial operator*(double c, const Monomial& a);
Monomial operator/(const Monomial& a, const Monomial& b);
Monomial pow(const Monomial& a, double p);
Posynomial operator+(const Posynomial& a, const Posynomial& b);
Posynomial operator*(const Posynomial& a, const Posynomial& b);
Posynomial operator*(const Posynomial& a, const Monomial& b);
Posynomial operator*(double c, const Posynomial& a);
Posynomial operator/(const Posynomial& a, const Monomial& b);

double eval(const Monomial& m, const Point& x);
double eval(const Posynomial& p, const Point& x);

// Weighted geometric-mean underestimator touching p at `anchor`.
Monomial condense(const Posynomial& p, const Point& anchor);

// coef * exp(scale * x_var); admitted only in the objective.
struct ExpTerm {
  double coef = 1.0;
  int var = 0;
  double scale = 1.0;
};

struct Variable {
  std::string name;
  double lo = 1e-9;
  double hi = 1e9;
};

struct GpProblem {
  std::vector<Variable> vars;
  Posynomial objective;
  std::vector<ExpTerm> objective_exp;
  std::vector<Posynomial> ineq;  // each <= 1
  std::vector<std::string> ineq_names;
  std::vector<Monomial> eq;  // each == 1

  int add_var(const std::string& name, double lo, double hi);
  // Empty posynomials are trivially satisfied and skipped.
  void add_ineq(const Posynomial& p, const std::string& name = "");
  int num_vars() const { return static_cast<int>(vars.size()); }
  void validate() const;
  double objective_value(const Point& x) const;
  // Largest constraint value minus one, and bound excess, at x.
  double max_violation(const Point& x) const;
  std::string dump() const;
};

// Log-sum-exp form in z = log x.
struct ConvexTerm {
  double b = 0.0;
  std::vector<std::pair<int, double>> a;
  bool is_exp = false;  // value b + scale * exp(z_var)
  int var = 0;
  double scale = 0.0;
};

struct LseFunction {
  std::vector<ConvexTerm> terms;
  double value(const Eigen::VectorXd& z) const;
  // value, gradient and (optionally) Hessian accumulated with weight w
  double eval(const Eigen::VectorXd& z, Eigen::VectorXd& grad, Eigen::MatrixXd* hess) const;
};

struct ConvexProgram {
  int n = 0;
  LseFunction objective;
  std::vector<LseFunction> ineq;  // each <= 0
  Eigen::MatrixXd a_eq;           // a_eq z = b_eq
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lo, hi;
};

ConvexProgram to_convex_form(const GpProblem& problem);

struct SolveOptions {
  double mu0 = 1.0;
  double mu_factor = 0.2;
  double tol_outer = 1e-8;
  double tol_newton = 1e-10;
  double tol_step = 1e-6;
  int max_outer = 200;
  int max_inner = 100;
};

enum class SolveStatus { Converged, Infeasible, MaxIterations };

struct SolveReport {
  Point x;
  double objective = 0.0;
  int iterations = 0;  // Newton steps, both phases
  int outer_iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::MaxIterations;
  double max_violation = 0.0;
};

// Minimizes the problem from `init` (positive, clipped into the bound box).
// Infeasible problems return status Infeasible; exhausted budgets throw
// MaxIterations and non-finite arithmetic throws NumericalBreakdown.
SolveReport solve(const GpProblem& problem, const Point& init, const SolveOptions& opts = {});

}  // namespace scdn
