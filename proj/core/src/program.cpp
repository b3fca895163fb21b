#include "restore/program.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace restore {

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  for (auto& t : terms) t.coef *= s;
  constant *= s;
  return *this;
}

double AffineExpr::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

double LinearRow::activity(const std::vector<double>& x) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

double LinearRow::violation(const std::vector<double>& x) const {
  const double a = activity(x);
  switch (sense) {
    case Sense::le: return a - rhs;
    case Sense::ge: return rhs - a;
    case Sense::eq: return std::abs(a - rhs);
  }
  return 0.0;
}

double ConeRow::violation(const std::vector<double>& x) const {
  double s = 0.0;
  for (std::size_t k = 1; k < exprs.size(); ++k) {
    const double e = exprs[k].eval(x);
    s += e * e;
  }
  return std::sqrt(s) - exprs[0].eval(x);
}

std::size_t ConicProgram::add_variable(std::string name, VarKind kind, double lb, double ub, int time) {
  if (kind == VarKind::binary) {
    lb = std::max(lb, 0.0);
    ub = std::min(ub, 1.0);
  }
  vars_.push_back({std::move(name), kind, lb, ub, time});
  return vars_.size() - 1;
}

void ConicProgram::add_row(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
  std::erase_if(terms, [](const Term& t) { return t.coef == 0.0; });
  rows_.push_back({std::move(name), std::move(terms), sense, rhs});
}

void ConicProgram::add_cone(std::string name, std::vector<AffineExpr> exprs) {
  cones_.push_back({std::move(name), std::move(exprs)});
}

void ConicProgram::add_sos1(std::string name, std::vector<std::size_t> vars, std::vector<double> weights) {
  sos1_.push_back({std::move(name), std::move(vars), std::move(weights)});
}

int ConicProgram::max_stage() const {
  int s = 0;
  for (const auto& t : objective_) s = std::max(s, t.stage);
  return s;
}

AffineExpr ConicProgram::stage_objective(int stage) const {
  AffineExpr out;
  for (const auto& t : objective_) {
    if (t.stage != stage) continue;
    AffineExpr e = t.expr;
    e *= t.weight / t.normalizer;
    out += e;
  }
  return out;
}

double ConicProgram::stage_value(int stage, const std::vector<double>& x) const {
  return stage_objective(stage).eval(x);
}

std::vector<std::size_t> ConicProgram::discrete_variables() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].is_discrete()) out.push_back(i);
  return out;
}

ProgramStats ConicProgram::stats() const {
  ProgramStats s;
  s.variables = vars_.size();
  for (const auto& v : vars_) {
    if (v.kind == VarKind::binary) ++s.binaries;
    if (v.kind == VarKind::integer) ++s.integers;
  }
  s.rows = rows_.size();
  s.equalities = static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [](const LinearRow& r) { return r.sense == Sense::eq; }));
  s.cones = cones_.size();
  s.sos1 = sos1_.size();
  return s;
}

double ConicProgram::max_row_violation(const std::vector<double>& x) const {
  double m = 0.0;
  for (const auto& r : rows_) m = std::max(m, r.violation(x));
  return m;
}

double ConicProgram::max_cone_violation(const std::vector<double>& x) const {
  double m = 0.0;
  for (const auto& c : cones_) m = std::max(m, c.violation(x));
  return m;
}

double ConicProgram::max_bound_violation(const std::vector<double>& x) const {
  double m = 0.0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    m = std::max(m, vars_[i].lb - x[i]);
    m = std::max(m, x[i] - vars_[i].ub);
  }
  return m;
}

void ConicProgram::validate() const {
  const auto n = vars_.size();
  auto check_terms = [n](const std::vector<Term>& terms, const std::string& where) {
    for (const auto& t : terms)
      if (t.var >= n) throw std::logic_error(where + ": references unknown variable");
  };
  for (const auto& r : rows_) check_terms(r.terms, r.name);
  for (const auto& c : cones_) {
    if (c.exprs.size() < 2) throw std::logic_error(c.name + ": cone needs at least two entries");
    for (const auto& e : c.exprs) check_terms(e.terms, c.name);
  }
  for (const auto& s : sos1_) {
    for (auto v : s.vars) {
      if (v >= n) throw std::logic_error(s.name + ": references unknown variable");
      if (vars_[v].kind != VarKind::binary) throw std::logic_error(s.name + ": SOS1 members must be binary");
    }
  }
  for (const auto& o : objective_) check_terms(o.expr.terms, o.name);
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  return std::stod(s);
}

void write_terms(std::ostream& os, const std::vector<Term>& terms) {
  os << ' ' << terms.size();
  for (const auto& t : terms) os << ' ' << t.var << ':' << num(t.coef);
}

std::vector<Term> read_terms(std::istream& is) {
  std::size_t n = 0;
  is >> n;
  std::vector<Term> terms;
  terms.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::string tok;
    is >> tok;
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw std::runtime_error("program dump: malformed term '" + tok + "'");
    terms.push_back({std::stoul(tok.substr(0, colon)), parse_num(tok.substr(colon + 1))});
  }
  return terms;
}

char kind_code(VarKind k) {
  switch (k) {
    case VarKind::continuous: return 'C';
    case VarKind::binary: return 'B';
    case VarKind::integer: return 'I';
  }
  return 'C';
}

const char* sense_code(Sense s) {
  switch (s) {
    case Sense::le: return "LE";
    case Sense::ge: return "GE";
    case Sense::eq: return "EQ";
  }
  return "LE";
}

}  // namespace

void ConicProgram::dump(std::ostream& os) const {
  os << "PROGRAM " << vars_.size() << ' ' << rows_.size() << ' ' << cones_.size() << ' ' << sos1_.size() << ' '
     << objective_.size() << '\n';
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& v = vars_[i];
    os << "VAR " << i << ' ' << v.name << ' ' << kind_code(v.kind) << ' ' << num(v.lb) << ' ' << num(v.ub) << ' '
       << v.time << '\n';
  }
  for (const auto& r : rows_) {
    os << "ROW " << r.name << ' ' << sense_code(r.sense) << ' ' << num(r.rhs);
    write_terms(os, r.terms);
    os << '\n';
  }
  for (const auto& c : cones_) {
    os << "CONE " << c.name << ' ' << c.exprs.size();
    for (const auto& e : c.exprs) {
      os << " [ " << num(e.constant);
      write_terms(os, e.terms);
      os << " ]";
    }
    os << '\n';
  }
  for (const auto& s : sos1_) {
    os << "SOS1 " << s.name << ' ' << s.vars.size();
    for (std::size_t k = 0; k < s.vars.size(); ++k) os << ' ' << s.vars[k] << ':' << num(s.weights[k]);
    os << '\n';
  }
  for (const auto& o : objective_) {
    os << "OBJ " << o.name << ' ' << o.stage << ' ' << num(o.weight) << ' ' << num(o.normalizer) << ' '
       << num(o.expr.constant);
    write_terms(os, o.expr.terms);
    os << '\n';
  }
}

ConicProgram ConicProgram::parse_dump(std::istream& is) {
  ConicProgram p;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "PROGRAM") continue;
    if (tag == "VAR") {
      std::size_t idx;
      std::string name, kind, lb, ub;
      int time;
      ls >> idx >> name >> kind >> lb >> ub >> time;
      if (idx != p.vars_.size()) throw std::runtime_error("program dump: variables out of order");
      const VarKind k = kind == "B" ? VarKind::binary : kind == "I" ? VarKind::integer : VarKind::continuous;
      p.vars_.push_back({name, k, parse_num(lb), parse_num(ub), time});
    } else if (tag == "ROW") {
      LinearRow r;
      std::string sense, rhs;
      ls >> r.name >> sense >> rhs;
      r.sense = sense == "EQ" ? Sense::eq : sense == "GE" ? Sense::ge : Sense::le;
      r.rhs = parse_num(rhs);
      r.terms = read_terms(ls);
      p.rows_.push_back(std::move(r));
    } else if (tag == "CONE") {
      ConeRow c;
      std::size_t n;
      ls >> c.name >> n;
      for (std::size_t k = 0; k < n; ++k) {
        std::string open, cst, close;
        ls >> open >> cst;
        AffineExpr e;
        e.constant = parse_num(cst);
        e.terms = read_terms(ls);
        ls >> close;
        c.exprs.push_back(std::move(e));
      }
      p.cones_.push_back(std::move(c));
    } else if (tag == "SOS1") {
      Sos1Group s;
      std::size_t n;
      ls >> s.name >> n;
      for (std::size_t k = 0; k < n; ++k) {
        std::string tok;
        ls >> tok;
        const auto colon = tok.find(':');
        s.vars.push_back(std::stoul(tok.substr(0, colon)));
        s.weights.push_back(parse_num(tok.substr(colon + 1)));
      }
      p.sos1_.push_back(std::move(s));
    } else if (tag == "OBJ") {
      ObjectiveTerm o;
      std::string w, nz, cst;
      ls >> o.name >> o.stage >> w >> nz >> cst;
      o.weight = parse_num(w);
      o.normalizer = parse_num(nz);
      o.expr.constant = parse_num(cst);
      o.expr.terms = read_terms(ls);
      p.objective_.push_back(std::move(o));
    } else {
      throw std::runtime_error("program dump: unknown record '" + tag + "'");
    }
    if (ls.fail()) throw std::runtime_error("program dump: malformed line: " + line);
  }
  return p;
}

}  // namespace restore
