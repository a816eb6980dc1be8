#pragma once

#include <optional>

#include <Eigen/Dense>

#include "ocitune/controller.hpp"
#include "ocitune/rational.hpp"
#include "ocitune/reference_model.hpp"

namespace ocitune {

/// The identified model G(q,theta) = L_d(q,eta) C^{-1}(q,P): controller
/// structure plus reference-model parametrization.
struct OciModel {
  ControllerStructure controller;
  RefModelSpec reference;

  std::size_t num_params() const { return controller.num_params() + reference.num_params(); }
};

/// theta = [P; eta].
struct Theta {
  ParamP P;
  ParamEta eta;

  Eigen::VectorXd stacked() const;
  static Theta split(const Eigen::VectorXd& theta, std::size_t num_p);
};

struct PredictionResult {
  Signal eps_f;                       ///< n x N filtered residuals
  double cost = 0.0;                  ///< mean of ||eps_f(t)||^2 over the scored samples
  std::optional<Eigen::MatrixXd> jacobian;  ///< (N n) x n_theta, row t*n + i; skipped samples are zero rows
  int unstable_roots = 0;             ///< roots of D(q,P) outside the unit circle
};

/// y_hat = L_d N / D u with zero initial conditions (unfiltered; diverges when
/// D has unstable roots).
Signal predict(const Theta& theta, const OciModel& model, const Signal& u);

/// y - predict(theta, u).
Signal prediction_error(const Theta& theta, const OciModel& model, const Signal& u, const Signal& y);

/// All-pass filtered prediction error
///   eps_F = (D_U / D_U*) y - L_d N / (D_S D_U*) u,
/// every recursion stable. The first `transient_skip` samples are excluded from
/// the cost. With `with_jacobian` the analytic d eps_F / d theta is attached.
PredictionResult filtered_error(const Theta& theta, const OciModel& model, const Signal& u,
                                const Signal& y, bool with_jacobian = false,
                                std::size_t transient_skip = 0);

double cost_VNF(const Theta& theta, const OciModel& model, const Signal& u, const Signal& y,
                std::size_t transient_skip = 0);

Eigen::MatrixXd jacobian_eps_F(const Theta& theta, const OciModel& model, const Signal& u,
                               const Signal& y, std::size_t transient_skip = 0);

/// |F(e^{jw})| for the all-pass prefilter at the given P, sampled on `points`
/// frequencies in [0, pi].
std::vector<double> allpass_magnitude(const Polynomial& d_u, const Polynomial& d_u_star,
                                      std::size_t points);

}  // namespace ocitune
