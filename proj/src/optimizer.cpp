#include "ocitune/optimizer.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "ocitune/error.hpp"

namespace ocitune {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 30;
constexpr double kMaxLambda = 1e16;

/// Cost at x, or nullopt when the model cannot be evaluated there.
std::optional<Residuals> try_evaluate(const LeastSquaresProblem& p, const Eigen::VectorXd& x,
                                      bool with_jacobian, int& evaluations) {
  ++evaluations;
  try {
    Residuals res = p.evaluate(x, with_jacobian);
    if (!res.r.allFinite() || (with_jacobian && !res.jacobian.allFinite())) return std::nullopt;
    return res;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

OciLeastSquares::OciLeastSquares(OciModel model, Signal u, Signal y, std::size_t transient_skip)
    : model_(std::move(model)), u_(std::move(u)), y_(std::move(y)), skip_(transient_skip) {
  if (u_.rows() != static_cast<Eigen::Index>(model_.controller.dim()) || y_.rows() != u_.rows() ||
      y_.cols() != u_.cols())
    fail(ErrorCode::DimensionMismatch, "data batch does not match the model dimension");
  if (static_cast<Eigen::Index>(skip_) >= u_.cols())
    fail(ErrorCode::InvalidArgument, "transient skip covers the whole record");
}

Residuals OciLeastSquares::evaluate(const Eigen::VectorXd& x, bool with_jacobian) const {
  const PredictionResult pr = filtered_error(split(x), model_, u_, y_, with_jacobian, skip_);
  const Eigen::Index n = u_.rows();
  const auto skip = static_cast<Eigen::Index>(skip_);
  const Eigen::Index kept = u_.cols() - skip;
  const double scale = 1.0 / std::sqrt(static_cast<double>(kept));
  Residuals out;
  out.r.resize(kept * n);
  for (Eigen::Index t = 0; t < kept; ++t)
    for (Eigen::Index i = 0; i < n; ++i) out.r(t * n + i) = scale * pr.eps_f(i, skip + t);
  if (with_jacobian) out.jacobian = scale * pr.jacobian->bottomRows(kept * n);
  return out;
}

void OptimOptions::validate() const {
  if (sd_iters < 0 || lm_max_iters < 0) fail(ErrorCode::InvalidArgument, "iteration counts must be nonnegative");
  if (!(lm_lambda0 > 0.0) || !(grad_tol > 0.0) || !(cost_rel_tol > 0.0))
    fail(ErrorCode::InvalidArgument, "optimizer tolerances must be positive");
  if (!(lm_up > 1.0) || !(lm_down > 0.0 && lm_down < 1.0))
    fail(ErrorCode::InvalidArgument, "damping factors must satisfy lm_up > 1 > lm_down > 0");
  if (multistart < 1) fail(ErrorCode::InvalidArgument, "multistart count must be at least 1");
  if (!(multistart_std >= 0.0)) fail(ErrorCode::InvalidArgument, "multistart spread must be nonnegative");
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Gradient: return "gradient";
    case Termination::CostDecrease: return "cost_decrease";
    case Termination::IterationCap: return "iteration_cap";
    case Termination::DampingOverflow: return "damping_overflow";
  }
  return "unknown";
}

OptimReport minimize(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                     const OptimOptions& opts) {
  opts.validate();
  if (x0.size() != static_cast<Eigen::Index>(problem.num_params()))
    fail(ErrorCode::DimensionMismatch, "initial point has the wrong length");

  OptimReport rep;
  auto cur = try_evaluate(problem, x0, true, rep.evaluations);
  if (!cur) fail(ErrorCode::NonFiniteCost, "cost cannot be evaluated at the initial point");
  Eigen::VectorXd x = x0;
  double v = cur->r.squaredNorm();
  Eigen::VectorXd g = cur->jacobian.transpose() * cur->r;  // half the gradient of V
  rep.cost_trace.push_back(v);

  auto finish = [&](Termination why) {
    rep.theta = x;
    rep.cost = v;
    rep.gradient_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    rep.termination = why;
    return rep;
  };
  auto converged_gradient = [&] { return g.size() == 0 || g.cwiseAbs().maxCoeff() < opts.grad_tol; };

  // Steepest descent on V with gradient 2 J^T r.
  for (int it = 0; it < opts.sd_iters; ++it) {
    if (converged_gradient()) return finish(Termination::Gradient);
    const double gg = 4.0 * g.squaredNorm();
    double alpha = opts.sd_step0 > 0.0 ? opts.sd_step0 : v / gg;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings && !accepted; ++h, alpha *= 0.5) {
      const Eigen::VectorXd trial = x - alpha * 2.0 * g;
      auto res = try_evaluate(problem, trial, false, rep.evaluations);
      if (!res) continue;
      const double vt = res->r.squaredNorm();
      if (vt <= v - kArmijo * alpha * gg) {
        accepted = true;
        auto full = try_evaluate(problem, trial, true, rep.evaluations);
        if (!full) break;
        x = trial;
        v = vt;
        cur = std::move(full);
        g = cur->jacobian.transpose() * cur->r;
        rep.cost_trace.push_back(v);
      }
    }
    ++rep.sd_iterations;
    if (!accepted) break;
  }

  double lambda = opts.lm_lambda0;
  while (rep.lm_iterations < opts.lm_max_iters) {
    if (converged_gradient()) return finish(Termination::Gradient);
    ++rep.lm_iterations;
    const Eigen::MatrixXd jtj = cur->jacobian.transpose() * cur->jacobian;
    Eigen::MatrixXd damped = jtj;
    damped.diagonal().array() += lambda;
    const Eigen::VectorXd dx = damped.ldlt().solve(-g);
    const Eigen::VectorXd trial = x + dx;
    auto res = dx.allFinite() ? try_evaluate(problem, trial, true, rep.evaluations) : std::nullopt;
    const double vt = res ? res->r.squaredNorm() : std::numeric_limits<double>::infinity();
    if (vt < v) {
      const double drop = v - vt;
      x = trial;
      v = vt;
      cur = std::move(res);
      g = cur->jacobian.transpose() * cur->r;
      rep.cost_trace.push_back(v);
      lambda *= opts.lm_down;
      if (drop <= opts.cost_rel_tol * (v + drop)) return finish(Termination::CostDecrease);
    } else {
      lambda *= opts.lm_up;
      if (lambda > kMaxLambda) return finish(Termination::DampingOverflow);
    }
  }
  return finish(Termination::IterationCap);
}

OptimReport minimize_multistart(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                const OptimOptions& opts) {
  opts.validate();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd(0.0, opts.multistart_std);
  std::optional<OptimReport> best;
  int failed = 0;
  for (int s = 0; s < opts.multistart; ++s) {
    Eigen::VectorXd start = x0;
    if (s > 0)
      for (Eigen::Index k = 0; k < start.size(); ++k) start(k) += nd(rng);
    try {
      OptimReport rep = minimize(problem, start, opts);
      rep.start_index = s;
      if (!best || rep.cost < best->cost) best = std::move(rep);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteCost) throw;
      ++failed;
    }
  }
  if (!best) fail(ErrorCode::AllStartsFailed, "no start produced a finite cost");
  best->failed_starts = failed;
  return *best;
}

double audit_gradient(const LeastSquaresProblem& problem, const Eigen::VectorXd& x, double step) {
  if (x.size() == 0) return 0.0;
  const Residuals at = problem.evaluate(x, true);
  const double floor = 1e-3 * std::max(at.jacobian.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = step * (1.0 + std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const Eigen::VectorXd fd = (problem.evaluate(xp, false).r - problem.evaluate(xm, false).r) / (2 * h);
    const double mag = std::max({fd.cwiseAbs().maxCoeff(), at.jacobian.col(k).cwiseAbs().maxCoeff(), floor});
    worst = std::max(worst, (fd - at.jacobian.col(k)).cwiseAbs().maxCoeff() / mag);
  }
  return worst;
}

Theta default_init(const OciModel& model) {
  const auto& s = model.controller;
  Theta t{ParamP::Zero(static_cast<Eigen::Index>(s.num_params())),
          ParamEta::Zero(static_cast<Eigen::Index>(model.reference.num_params()))};
  for (std::size_t k = 0; k < s.slots().size(); ++k) {
    const auto& sl = s.slots()[k];
    if (sl.row != sl.col) continue;
    const int from_top = s.numerator_degree()(sl.row, sl.col) - sl.power;
    if (from_top == 0) t.P(static_cast<Eigen::Index>(k)) = 0.1;
    else if (from_top == 1) t.P(static_cast<Eigen::Index>(k)) = -0.05;
  }
  return t;
}

}  // namespace ocitune
