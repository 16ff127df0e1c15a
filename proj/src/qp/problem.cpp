#include "mies/qp.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mies::qp {

std::string_view to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

VarId Problem::add_variable(std::string name, double lower, double upper) {
  vars_.push_back(Variable{std::move(name), lower, upper});
  return VarId{static_cast<int>(vars_.size()) - 1};
}

void Problem::add_cost(VarId v, double linear, double quadratic) {
  auto& var = vars_.at(v.index);
  var.linear += linear;
  var.quadratic += quadratic;
}

void Problem::set_cost(VarId v, double linear, double quadratic) {
  auto& var = vars_.at(v.index);
  var.linear = linear;
  var.quadratic = quadratic;
}

RowId Problem::add_row(std::string name, std::vector<Term> terms, double lower, double upper) {
  rows_.push_back(Row{std::move(name), std::move(terms), lower, upper});
  return RowId{static_cast<int>(rows_.size()) - 1};
}

void Problem::set_variable_bounds(VarId v, double lower, double upper) {
  auto& var = vars_.at(v.index);
  var.lower = lower;
  var.upper = upper;
}

void Problem::set_row_bounds(RowId r, double lower, double upper) {
  auto& row = rows_.at(r.index);
  row.lower = lower;
  row.upper = upper;
}

std::optional<VarId> Problem::find_variable(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return VarId{static_cast<int>(i)};
  }
  return std::nullopt;
}

std::optional<RowId> Problem::find_row(std::string_view name) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].name == name) return RowId{static_cast<int>(i)};
  }
  return std::nullopt;
}

double Problem::evaluate(const std::vector<double>& x) const {
  double total = constant_;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    total += vars_[i].linear * x[i] + vars_[i].quadratic * x[i] * x[i];
  }
  return total;
}

void Problem::validate() const {
  const double sign = sense_ == Sense::minimize ? 1.0 : -1.0;
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.linear) ||
        !std::isfinite(v.quadratic)) {
      throw std::invalid_argument("variable '" + v.name + "' has non-finite data");
    }
    if (sign * v.quadratic < 0.0) {
      throw std::invalid_argument("variable '" + v.name + "' makes the objective non-convex");
    }
  }
  for (const auto& r : rows_) {
    if (std::isnan(r.lower) || std::isnan(r.upper)) {
      throw std::invalid_argument("row '" + r.name + "' has NaN bounds");
    }
    for (const auto& t : r.terms) {
      if (t.var.index < 0 || t.var.index >= num_variables()) {
        throw std::invalid_argument("row '" + r.name + "' references an undeclared variable");
      }
      if (!std::isfinite(t.coef)) {
        throw std::invalid_argument("row '" + r.name + "' has a non-finite coefficient");
      }
    }
  }
}

namespace {

void write_number(std::ostream& os, double value) {
  if (value == kInfinity) {
    os << "+inf";
  } else if (value == -kInfinity) {
    os << "-inf";
  } else {
    os << value;
  }
}

void write_term(std::ostream& os, double coef, const std::string& name, bool first) {
  if (coef < 0) {
    os << " - " << -coef << ' ' << name;
  } else {
    os << (first ? " " : " + ") << coef << ' ' << name;
  }
}

}  // namespace

void Problem::write_lp(std::ostream& os) const {
  os << (sense_ == Sense::minimize ? "Minimize\n" : "Maximize\n") << " obj:";
  bool first = true;
  for (const auto& v : vars_) {
    if (v.linear != 0.0) {
      write_term(os, v.linear, v.name, first);
      first = false;
    }
  }
  bool any_quadratic = false;
  for (const auto& v : vars_) {
    if (v.quadratic != 0.0) {
      if (!any_quadratic) os << " + [";
      write_term(os, 2.0 * v.quadratic, v.name + " ^ 2", !any_quadratic);
      any_quadratic = true;
    }
  }
  if (any_quadratic) os << " ] / 2";
  if (constant_ != 0.0) os << " + " << constant_;
  os << "\nSubject To\n";
  for (const auto& r : rows_) {
    os << ' ' << r.name << ':';
    bool head = true;
    for (const auto& t : r.terms) {
      write_term(os, t.coef, vars_[t.var.index].name, head);
      head = false;
    }
    if (r.lower == r.upper) {
      os << " = " << r.lower << '\n';
    } else {
      if (r.lower > -kInfinity) {
        os << " >= ";
        write_number(os, r.lower);
      }
      if (r.upper < kInfinity) {
        os << (r.lower > -kInfinity ? "\n  (and) <= " : " <= ");
        write_number(os, r.upper);
      }
      os << '\n';
    }
  }
  os << "Bounds\n";
  for (const auto& v : vars_) {
    os << ' ';
    write_number(os, v.lower);
    os << " <= " << v.name << " <= ";
    write_number(os, v.upper);
    os << '\n';
  }
  os << "End\n";
}

}  // namespace mies::qp
