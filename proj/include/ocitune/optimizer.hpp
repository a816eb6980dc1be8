#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocitune/predictor.hpp"

namespace ocitune {

/// Residuals and (optionally) their Jacobian at one parameter vector.
struct Residuals {
  Eigen::VectorXd r;
  Eigen::MatrixXd jacobian;  ///< empty unless requested
};

/// Nonlinear least-squares problem V(x) = ||r(x)||^2.
class LeastSquaresProblem {
 public:
  virtual ~LeastSquaresProblem() = default;
  virtual std::size_t num_params() const = 0;
  /// Throws ocitune::Error when x is outside the domain of the model.
  virtual Residuals evaluate(const Eigen::VectorXd& x, bool with_jacobian) const = 0;
};

/// Filtered prediction error over one data batch, residuals scaled by
/// 1/sqrt(N - skip) so that ||r||^2 equals the per-sample cost.
class OciLeastSquares : public LeastSquaresProblem {
 public:
  OciLeastSquares(OciModel model, Signal u, Signal y, std::size_t transient_skip = 0);

  std::size_t num_params() const override { return model_.num_params(); }
  Residuals evaluate(const Eigen::VectorXd& x, bool with_jacobian) const override;

  const OciModel& model() const { return model_; }
  Theta split(const Eigen::VectorXd& x) const { return Theta::split(x, model_.controller.num_params()); }

 private:
  OciModel model_;
  Signal u_;
  Signal y_;
  std::size_t skip_;
};

struct OptimOptions {
  int sd_iters = 20;
  int lm_max_iters = 500;
  double lm_lambda0 = 1e-2;
  double lm_up = 10.0;
  double lm_down = 0.1;
  double sd_step0 = 0.0;   ///< first trial step of each line search; 0 selects V / ||grad V||^2
  double grad_tol = 1e-8;
  double cost_rel_tol = 1e-10;
  int multistart = 1;
  double multistart_std = 0.05;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument unless every tolerance is positive and
  /// lm_up > 1 > lm_down > 0.
  void validate() const;
};

enum class Termination { Gradient, CostDecrease, IterationCap, DampingOverflow };

const char* to_string(Termination t) noexcept;

struct OptimReport {
  Eigen::VectorXd theta;
  double cost = 0.0;
  int sd_iterations = 0;
  int lm_iterations = 0;
  int evaluations = 0;
  Termination termination = Termination::IterationCap;
  std::vector<double> cost_trace;  ///< initial cost, then one entry per accepted step
  double gradient_norm = 0.0;      ///< ||J^T r||_inf at the returned point
  int start_index = 0;             ///< which multistart produced theta
  int failed_starts = 0;
};

/// Steepest-descent warm-up with Armijo backtracking, then Levenberg-Marquardt
/// on (J^T J + lambda I) dx = -J^T r. A trial point that throws or yields a
/// non-finite cost counts as a rejected step. Throws NonFiniteCost when x0
/// cannot be evaluated.
OptimReport minimize(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                     const OptimOptions& opts = {});

/// Runs minimize from x0 and from opts.multistart - 1 Gaussian perturbations
/// of it; returns the lowest final cost. Throws AllStartsFailed when no start
/// can be evaluated.
OptimReport minimize_multistart(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                const OptimOptions& opts = {});

/// Largest column-wise deviation between the analytic Jacobian and central
/// differences with step `step * (1 + |x_k|)`, relative to the column
/// magnitude floored at 1e-3 of the largest Jacobian entry.
double audit_gradient(const LeastSquaresProblem& problem, const Eigen::VectorXd& x,
                      double step = 1e-6);

/// P: diagonal controller entries start at 0.1, -0.05, 0, ... in descending
/// powers, off-diagonal entries at zero. eta: zero, which leaves every
/// gain-constrained entry minimum phase.
Theta default_init(const OciModel& model);

}  // namespace ocitune
