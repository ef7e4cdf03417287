#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fdcell::gp {

/// coeff * prod_k x_k^exponent_k. Exponents are kept sorted by variable id
/// with no duplicates and no zero entries.
class Monomial {
 public:
  using Exponents = std::vector<std::pair<int, double>>;

  Monomial() = default;
  explicit Monomial(double coeff, Exponents exponents = {});

  double coeff() const { return coeff_; }
  const Exponents& exponents() const { return exponents_; }
  double exponent(int var) const;

  double evaluate(std::span<const double> x) const;
  /// log(value) at x = exp(y).
  double log_evaluate(std::span<const double> y) const;

  Monomial operator*(const Monomial& o) const;
  Monomial pow(double e) const;

 private:
  double coeff_ = 1.0;
  Exponents exponents_;
};

/// Sum of monomials with positive coefficients.
class Posynomial {
 public:
  Posynomial() = default;
  explicit Posynomial(std::vector<Monomial> terms);

  void add(Monomial m);
  const std::vector<Monomial>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double evaluate(std::span<const double> x) const;
  /// Highest variable id referenced, or -1.
  int max_var() const;

 private:
  std::vector<Monomial> terms_;
};

/// Best local monomial approximation through the arithmetic-geometric mean
/// inequality: prod_j (u_j / a_j)^a_j with a_j = u_j(x0)/p(x0). Never exceeds
/// p for positive x and touches it at x0.
Monomial condense(const Posynomial& p, std::span<const double> x0);

/// One factor p(x)^exponent of a product objective. A multi-term posynomial
/// needs a positive exponent; a single monomial may carry any sign.
struct Factor {
  double exponent = 1.0;
  Posynomial posy;
};

/// minimize prod_i p_i(x)^e_i  s.t.  q_j(x) <= 1, m_k(x) = 1, lower <= x <= upper.
/// A plain posynomial objective is a single factor with exponent 1.
struct Problem {
  int num_vars = 0;
  std::vector<Factor> objective;
  std::vector<Posynomial> inequalities;
  std::vector<Monomial> equalities;
  std::vector<double> lower;
  std::vector<double> upper;

  static Problem minimize(int num_vars, Posynomial objective, double lower, double upper);
  void validate() const;
};

enum class Status {
  Converged,
  MaxIterations,
  LineSearchFailure,
  Infeasible,
};

std::string to_string(Status s);

struct Options {
  double tol = 1e-6;  // KKT residual in log-variable space
  int max_iter = 200; // Newton iterations, all phases together
};

struct Result {
  std::vector<double> x;
  Status status = Status::MaxIterations;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;  // prod_i p_i(x)^e_i

  bool converged() const { return status == Status::Converged; }
};

double objective_value(const Problem& prob, std::span<const double> x);
/// log of the objective at x = exp(y); convex in y.
double log_objective(const Problem& prob, std::span<const double> y);

/// Solves in y = log x. Box-only problems use projected Newton and report the
/// projected-gradient infinity norm; constrained problems use a log-barrier
/// method (with a phase-I search when x0 is infeasible) and report the
/// duality-gap bound. `x0` defaults to the geometric midpoint of the box.
Result solve(const Problem& prob, const Options& opts = {}, std::span<const double> x0 = {});

/// Plain-text dump, one monomial per line:
///   term <coeff> <var>:<exp> <var>:<exp> ...
/// grouped under "objective <exponent>", "inequality" and "equality" headers.
void write_text(std::ostream& os, const Problem& prob);

}  // namespace fdcell::gp
