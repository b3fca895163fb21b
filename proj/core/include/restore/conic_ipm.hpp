#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace restore {

using SpMat = Eigen::SparseMatrix<double>;

/// Standard conic form
///   minimize c'x  subject to  A x = b,  G x + s = h,  s in K,
/// where K is the nonnegative orthant of dimension `l` followed by the
/// second-order cones of the listed dimensions (head first).
struct ConeProblem {
  SpMat A;
  SpMat G;
  Eigen::VectorXd c;
  Eigen::VectorXd b;
  Eigen::VectorXd h;
  int l = 0;
  std::vector<int> soc;

  int n() const { return static_cast<int>(c.size()); }
  int p() const { return static_cast<int>(b.size()); }
  int m() const { return static_cast<int>(h.size()); }
};

struct IpmSettings {
  int max_iterations = 100;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double inaccurate_factor = 1e3;  // tolerance multiplier accepted when stalled
  double static_reg = 1e-9;
  int refinement_steps = 6;
  int equilibration_passes = 10;
  bool verbose = false;
};

enum class IpmStatus { optimal, optimal_inaccurate, primal_infeasible, dual_infeasible, max_iterations, numerical_error };

std::string to_string(IpmStatus s);

struct IpmResult {
  IpmStatus status = IpmStatus::numerical_error;
  Eigen::VectorXd x, y, z, s;
  int iterations = 0;
  double pcost = 0.0;
  double dcost = 0.0;
  double pres = 0.0;
  double dres = 0.0;
  double gap = 0.0;
};

/// Pluggable continuous solver used by the relaxation layer.
class ConicEngine {
 public:
  virtual ~ConicEngine() = default;
  virtual IpmResult solve(const ConeProblem& problem) = 0;
  virtual std::string name() const = 0;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps.
class EmbeddedIpm final : public ConicEngine {
 public:
  explicit EmbeddedIpm(IpmSettings settings = {}) : settings_(settings) {}
  IpmResult solve(const ConeProblem& problem) override;
  std::string name() const override { return "embedded-ipm"; }
  const IpmSettings& settings() const { return settings_; }

 private:
  IpmSettings settings_;
};

std::unique_ptr<ConicEngine> make_default_engine(IpmSettings settings = {});

}  // namespace restore
