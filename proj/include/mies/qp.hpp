#pragma once

// Convex quadratic programs with a diagonal Hessian, named variables and
// named linear constraints, solved by a primal-dual interior point method.

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mies::qp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct VarId {
  int index = -1;
  friend bool operator==(VarId, VarId) = default;
};

struct RowId {
  int index = -1;
  friend bool operator==(RowId, RowId) = default;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

enum class Sense { minimize, maximize };

enum class Status { optimal, infeasible, unbounded, numerical_failure };

std::string_view to_string(Status status);

/// A QP of the form
///
///   min|max  sum_i (linear_i * x_i + quadratic_i * x_i^2) + constant
///   s.t.     lower_r <= sum_i a_ri x_i <= upper_r   for every row r
///            lower_i <= x_i <= upper_i
///
/// Under minimization every quadratic coefficient must be >= 0; under
/// maximization every one must be <= 0.
class Problem {
public:
  VarId add_variable(std::string name, double lower, double upper);

  /// Adds to the objective coefficients of `v`.
  void add_cost(VarId v, double linear, double quadratic = 0.0);
  /// Replaces the objective coefficients of `v`.
  void set_cost(VarId v, double linear, double quadratic = 0.0);
  void add_constant(double value) { constant_ += value; }

  RowId add_row(std::string name, std::vector<Term> terms, double lower, double upper);
  RowId add_equality(std::string name, std::vector<Term> terms, double rhs) {
    return add_row(std::move(name), std::move(terms), rhs, rhs);
  }

  void set_sense(Sense sense) { sense_ = sense; }
  Sense sense() const { return sense_; }

  void set_variable_bounds(VarId v, double lower, double upper);
  void set_row_bounds(RowId r, double lower, double upper);

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  const std::string& variable_name(VarId v) const { return vars_.at(v.index).name; }
  const std::string& row_name(RowId r) const { return rows_.at(r.index).name; }
  double lower(VarId v) const { return vars_.at(v.index).lower; }
  double upper(VarId v) const { return vars_.at(v.index).upper; }
  double linear_cost(VarId v) const { return vars_.at(v.index).linear; }
  double quadratic_cost(VarId v) const { return vars_.at(v.index).quadratic; }
  double constant() const { return constant_; }
  const std::vector<Term>& row_terms(RowId r) const { return rows_.at(r.index).terms; }
  double row_lower(RowId r) const { return rows_.at(r.index).lower; }
  double row_upper(RowId r) const { return rows_.at(r.index).upper; }

  std::optional<VarId> find_variable(std::string_view name) const;
  std::optional<RowId> find_row(std::string_view name) const;

  /// Objective value at `x` (in the problem's own sense).
  double evaluate(const std::vector<double>& x) const;

  /// Throws std::invalid_argument if the problem is not a well-formed convex QP.
  void validate() const;

  /// Writes the problem in CPLEX LP text format, for inspection only.
  void write_lp(std::ostream& os) const;

private:
  struct Variable {
    std::string name;
    double lower;
    double upper;
    double linear = 0.0;
    double quadratic = 0.0;
  };
  struct Row {
    std::string name;
    std::vector<Term> terms;
    double lower;
    double upper;
  };

  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  double constant_ = 0.0;
  Sense sense_ = Sense::minimize;
};

struct Solution {
  Status status = Status::numerical_failure;
  std::vector<double> primal;
  /// Sensitivity of the reported objective to the row's active bound (for an
  /// equality row, its right-hand side).
  std::vector<double> row_duals;
  double objective = 0.0;
  int iterations = 0;

  bool optimal() const { return status == Status::optimal; }
  double value(VarId v) const { return primal.at(v.index); }
  double dual(RowId r) const { return row_duals.at(r.index); }
};

struct Settings {
  double tolerance = 1e-9;
  int max_iterations = 150;
};

/// Deterministic and reentrant; never throws for infeasible or unbounded
/// input, those are reported through Solution::status.
Solution solve(const Problem& problem, const Settings& settings = {});

}  // namespace mies::qp
