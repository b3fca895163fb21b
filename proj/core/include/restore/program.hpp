#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace restore {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary, integer };

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lb = -kInf;
  double ub = kInf;
  int time = -1;  // horizon step, -1 for time-invariant

  bool is_discrete() const { return kind != VarKind::continuous; }
};

struct Term {
  std::size_t var;
  double coef;
};

struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  AffineExpr() = default;
  AffineExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)

  AffineExpr& add(std::size_t var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator*=(double s);
  double eval(const std::vector<double>& x) const;
};

enum class Sense { le, ge, eq };

/// sum(terms) <sense> rhs
struct LinearRow {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;

  double activity(const std::vector<double>& x) const;
  /// Signed violation (positive means violated).
  double violation(const std::vector<double>& x) const;
};

/// ||(e_1 .. e_k)||_2 <= e_0
struct ConeRow {
  std::string name;
  std::vector<AffineExpr> exprs;

  /// Positive when violated: ||e_1..k|| - e_0.
  double violation(const std::vector<double>& x) const;
};

struct Sos1Group {
  std::string name;
  std::vector<std::size_t> vars;
  std::vector<double> weights;  // ordering weights (tap index)
};

/// Objective stage: 1 = reliability, 2 = switching, 3 = operation, 4 = relaxation tightening.
struct ObjectiveTerm {
  std::string name;
  AffineExpr expr;
  double normalizer = 1.0;
  int stage = 1;
  double weight = 1.0;
};

struct ProgramStats {
  std::size_t variables = 0;
  std::size_t binaries = 0;
  std::size_t integers = 0;
  std::size_t rows = 0;
  std::size_t equalities = 0;
  std::size_t cones = 0;
  std::size_t sos1 = 0;
};

/// Solver-agnostic mixed-integer SOCP.
class ConicProgram {
 public:
  std::size_t add_variable(std::string name, VarKind kind, double lb, double ub, int time = -1);
  void add_row(std::string name, std::vector<Term> terms, Sense sense, double rhs);
  void add_row(LinearRow row) { rows_.push_back(std::move(row)); }
  void add_cone(std::string name, std::vector<AffineExpr> exprs);
  void add_sos1(std::string name, std::vector<std::size_t> vars, std::vector<double> weights);
  void add_objective(ObjectiveTerm term) { objective_.push_back(std::move(term)); }

  const std::vector<Variable>& variables() const { return vars_; }
  std::vector<Variable>& mutable_variables() { return vars_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  std::vector<LinearRow>& mutable_rows() { return rows_; }
  const std::vector<ConeRow>& cones() const { return cones_; }
  const std::vector<Sos1Group>& sos1() const { return sos1_; }
  const std::vector<ObjectiveTerm>& objective() const { return objective_; }

  std::size_t size() const { return vars_.size(); }
  int max_stage() const;

  /// Combined, normalized objective of one stage.
  AffineExpr stage_objective(int stage) const;
  double stage_value(int stage, const std::vector<double>& x) const;

  /// Discrete variable indices in program order.
  std::vector<std::size_t> discrete_variables() const;

  ProgramStats stats() const;

  /// Largest row violation and largest cone violation at `x`.
  double max_row_violation(const std::vector<double>& x) const;
  double max_cone_violation(const std::vector<double>& x) const;
  double max_bound_violation(const std::vector<double>& x) const;

  void validate() const;

  /// Stable, round-trippable text listing.
  void dump(std::ostream& os) const;
  static ConicProgram parse_dump(std::istream& is);

 private:
  std::vector<Variable> vars_;
  std::vector<LinearRow> rows_;
  std::vector<ConeRow> cones_;
  std::vector<Sos1Group> sos1_;
  std::vector<ObjectiveTerm> objective_;
};

}  // namespace restore
