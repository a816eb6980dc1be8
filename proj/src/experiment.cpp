#include "ocitune/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "ocitune/controller.hpp"
#include "ocitune/error.hpp"
#include "ocitune/reference_model.hpp"

namespace ocitune {

namespace {

/// Magnitude margin below which a pole counts as stable.
constexpr double kStabilityMargin = 1.0 - 1e-9;

void collect_unstable(const TransferMatrix& t, std::vector<Complex>& out) {
  for (const auto& e : t.grid())
    for (const Complex& p : e.poles())
      if (std::abs(p) >= kStabilityMargin) out.push_back(p);
}

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(lo);
  if (f == 0.0 || lo + 1 >= sorted.size() || sorted[lo] == sorted[lo + 1]) return sorted[lo];
  return sorted[lo] + f * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

Signal JmrProtocol::reference(std::size_t channels) const {
  if (n_eval == 0) fail(ErrorCode::InvalidArgument, "evaluation horizon must be positive");
  Signal r = Signal::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n_eval));
  for (std::size_t k = 0; k < channels; ++k) {
    const auto start = static_cast<Eigen::Index>(k * n_eval / channels);
    r.row(static_cast<Eigen::Index>(k)).tail(r.cols() - start).setOnes();
  }
  return r;
}

void ExperimentConfig::validate() const {
  const std::size_t n = model.controller.dim();
  if (n == 0) fail(ErrorCode::InvalidArgument, "controller structure is empty");
  if (model.reference.dim() != n) fail(ErrorCode::DimensionMismatch, "controller and reference model dimensions differ");
  for (const TransferMatrix* t : {&plant, &noise_filter, &initial_controller})
    if (t->dim() != 0 && t->dim() != n)
      fail(ErrorCode::DimensionMismatch, "plant, noise filter, initial controller and model must share one dimension");
  for (const auto& e : plant.grid())
    if (!e.is_zero() && e.relative_degree() < 1)
      fail(ErrorCode::ImproperEntry, "plant entries must have positive relative degree");
  if (!noise_filter.all_proper() || !initial_controller.all_proper())
    fail(ErrorCode::ImproperEntry, "noise filter and initial controller must be proper");
  if (noise_cov.size() != 0 &&
      (noise_cov.rows() != static_cast<Eigen::Index>(n) || noise_cov.cols() != static_cast<Eigen::Index>(n)))
    fail(ErrorCode::DimensionMismatch, "noise covariance must be n x n");
  if (excitation.length == 0 || excitation.hold == 0)
    fail(ErrorCode::InvalidArgument, "excitation length and hold must be positive");
  if (transient_skip >= excitation.length)
    fail(ErrorCode::InvalidArgument, "transient skip covers the whole record");
  if (protocol.n_eval == 0) fail(ErrorCode::InvalidArgument, "evaluation horizon must be positive");
  optim.validate();
}

bool ExperimentConfig::can_simulate() const {
  const std::size_t n = model.controller.dim();
  return plant.dim() == n && noise_filter.dim() == n && initial_controller.dim() == n &&
         noise_cov.rows() == static_cast<Eigen::Index>(n);
}

InternalStability internal_stability_check(const TransferMatrix& g0, const TransferMatrix& c) {
  const std::size_t n = g0.dim();
  if (c.dim() != n) fail(ErrorCode::DimensionMismatch, "plant and controller dimensions differ");
  const TransferMatrix s = tm_inverse(TransferMatrix::identity(n) + g0 * c);
  InternalStability out;
  collect_unstable(s, out.offending_poles);
  collect_unstable(s * g0, out.offending_poles);
  collect_unstable(c * s, out.offending_poles);
  collect_unstable(c * s * g0, out.offending_poles);
  std::vector<Complex> distinct;
  for (const auto& cl : cluster_roots(out.offending_poles, 1e-6)) distinct.push_back(cl.mean);
  out.offending_poles = std::move(distinct);
  out.stable = out.offending_poles.empty();
  return out;
}

Collection collect_closed_loop(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  if (!config.can_simulate())
    fail(ErrorCode::ConfigError, "simulation needs plant, noise_filter, noise_covariance and initial_controller");
  const std::size_t n = config.plant.dim();
  if (!internal_stability_check(config.plant, config.initial_controller).stable)
    fail(ErrorCode::UnstableInitialLoop, "initial closed loop is not internally stable");
  std::mt19937_64 master(seed);
  const std::uint64_t r_seed = master();
  const std::uint64_t w_seed = master();

  const auto& ex = config.excitation;
  const auto len = static_cast<Eigen::Index>(ex.length);
  const TransferMatrix t = closed_loop(config.plant, config.initial_controller);
  const TransferMatrix s = TransferMatrix::identity(n) - t;

  Collection out;
  DataBatch& b = out.batch;
  b.r = prbs(n, ex.amplitude, ex.hold, ex.length, r_seed);
  if (config.noise_cov.isZero(0.0)) {
    out.v = Signal::Zero(static_cast<Eigen::Index>(n), len);
  } else {
    out.v = shape_noise(config.noise_filter, gaussian_noise(config.noise_cov, ex.length, w_seed));
  }
  out.y_signal = simulate(t, b.r);
  out.y_noise = simulate(s, out.v);
  b.y = out.y_signal + out.y_noise;
  b.u = simulate(config.initial_controller, b.r - b.y);
  b.metadata["seed"] = std::to_string(seed);
  b.metadata["prbs_seed"] = std::to_string(r_seed);
  b.metadata["noise_seed"] = std::to_string(w_seed);
  b.metadata["amplitude"] = std::to_string(ex.amplitude);
  b.metadata["hold"] = std::to_string(ex.hold);
  return out;
}

std::vector<double> collection_snr_db(const Collection& c) { return snr_db(c.y_signal, c.y_noise); }

JmrResult evaluate_jmr(const TransferMatrix& g0, const TransferMatrix& c, const TransferMatrix& td,
                       const JmrProtocol& protocol) {
  JmrResult out;
  try {
    if (!internal_stability_check(g0, c).stable) return out;
    const Signal r = protocol.reference(g0.dim());
    const Signal diff = simulate(td, r) - simulate(closed_loop(g0, c), r);
    out.value = diff.squaredNorm() / static_cast<double>(r.cols());
    out.stable = std::isfinite(out.value);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AlgebraicLoop && e.code() != ErrorCode::SingularTransferMatrix) throw;
  }
  return out;
}

OciResult run_oci(const ExperimentConfig& config, const DataBatch& batch) {
  config.validate();
  batch.validate();
  const OciLeastSquares problem(config.model, batch.u, batch.y, config.transient_skip);
  OciResult out;
  out.report = minimize_multistart(problem, default_init(config.model).stacked(), config.optim);
  out.theta = problem.split(out.report.theta);
  out.cost = out.report.cost;
  out.controller = build_controller(config.model.controller, out.theta.P);
  out.reference = build_refmodel(config.model.reference, out.theta.eta);
  out.nmp_zeros = extract_nmp_zero(config.model.reference, out.theta.eta);
  if (!out.nmp_zeros.empty()) {
    const Complex z = out.nmp_zeros.front();
    out.z_nm = std::abs(z.imag()) < 1e-9 ? z.real() : std::abs(z);
  }
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  BoxStats out;
  out.count = values.size();
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  out.q1 = quantile(values, 0.25);
  out.median = quantile(values, 0.5);
  out.q3 = quantile(values, 0.75);
  const double inf = std::numeric_limits<double>::infinity();
  const double iqr = out.q3 - out.q1;
  double lo_fence = out.q1 - 1.5 * iqr, hi_fence = out.q3 + 1.5 * iqr;
  if (std::isnan(lo_fence)) lo_fence = -inf;
  if (std::isnan(hi_fence)) hi_fence = inf;
  out.lo_whisker = inf;
  out.hi_whisker = -inf;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      out.outliers.push_back(v);
    } else {
      out.lo_whisker = std::min(out.lo_whisker, v);
      out.hi_whisker = std::max(out.hi_whisker, v);
    }
  }
  return out;
}

std::uint64_t run_seed(std::uint64_t seed_base, std::size_t k) { return seed_base + k; }

std::size_t default_thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OCITUNE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

McSummary monte_carlo(const ExperimentConfig& config, std::size_t runs,
                      std::optional<std::size_t> threads) {
  if (runs == 0) fail(ErrorCode::InvalidArgument, "Monte Carlo needs at least one run");
  config.validate();
  if (!config.can_simulate()) fail(ErrorCode::ConfigError, "Monte Carlo needs a complete simulation setup");
  McSummary out;
  out.runs.resize(runs);

  auto one_run = [&](std::size_t k) {
    RunRecord& rec = out.runs[k];
    rec.seed = run_seed(config.monte_carlo.seed_base, k);
    try {
      const Collection col = collect_closed_loop(config, rec.seed);
      const OciResult res = run_oci(config, col.batch);
      rec.theta = res.report.theta;
      rec.cost = res.cost;
      rec.z_nm = res.z_nm;
      const JmrResult j = evaluate_jmr(config.plant, res.controller, res.reference, config.protocol);
      rec.jmr = j.value;
      rec.stable = j.stable;
    } catch (const Error& e) {
      rec.failed = true;
      rec.failure = e.what();
    }
  };

  const std::size_t workers = std::min(runs, std::max<std::size_t>(1, threads.value_or(default_thread_count())));
  if (workers == 1) {
    for (std::size_t k = 0; k < runs; ++k) one_run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < runs; k = next++) one_run(k);
      });
  }

  std::vector<double> jmr, znm;
  for (const auto& rec : out.runs) {
    if (rec.failed) {
      ++out.failed;
      continue;
    }
    if (!rec.stable) ++out.unstable;
    jmr.push_back(rec.jmr);
    znm.push_back(rec.z_nm);
  }
  out.jmr = box_stats(std::move(jmr));
  out.z_nm = box_stats(std::move(znm));
  return out;
}

}  // namespace ocitune
