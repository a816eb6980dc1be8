#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocitune/optimizer.hpp"
#include "ocitune/predictor.hpp"
#include "ocitune/rational.hpp"
#include "ocitune/signals.hpp"

namespace ocitune {

struct ExcitationSettings {
  double amplitude = 1.0;
  std::size_t hold = 20;
  std::size_t length = 1260;
};

/// Reference used to score a tuned loop: unit step on channel 1 at sample 1,
/// unit step added on channel 2 at sample n_eval/2 + 1 (and so on for more
/// channels, evenly spaced).
struct JmrProtocol {
  std::size_t n_eval = 120;

  Signal reference(std::size_t channels) const;
};

struct MonteCarloSettings {
  std::size_t runs = 100;
  std::uint64_t seed_base = 1;
};

struct ExperimentConfig {
  std::string name;
  TransferMatrix plant;           ///< truth G0, simulation only; may be empty
  TransferMatrix noise_filter;    ///< H0
  Eigen::MatrixXd noise_cov;      ///< Lambda
  TransferMatrix initial_controller;  ///< C0
  ExcitationSettings excitation;
  OciModel model;
  OptimOptions optim;
  std::size_t transient_skip = 0;
  JmrProtocol protocol;
  MonteCarloSettings monte_carlo;
  std::uint64_t seed = 1;

  /// Throws DimensionMismatch / InvalidArgument / ImproperEntry on
  /// inconsistent settings. Plant entries need positive relative degree.
  void validate() const;
  /// True when plant, noise filter, covariance and C0 are all present.
  bool can_simulate() const;
};

struct InternalStability {
  bool stable = true;
  std::vector<Complex> offending_poles;
};

/// Poles of (I+GC)^{-1}, (I+GC)^{-1}G, C(I+GC)^{-1} and C(I+GC)^{-1}G on or
/// outside the unit circle.
InternalStability internal_stability_check(const TransferMatrix& g0, const TransferMatrix& c);

/// Closed-loop batch with C0: r from prbs, v = H0 w, y = T r + (I - T) v,
/// u = C0 (r - y). The noise-free and noise parts of y are returned as well.
struct Collection {
  DataBatch batch;
  Signal y_signal;  ///< T r
  Signal y_noise;   ///< (I - T) v
  Signal v;         ///< H0 w
};

/// Throws UnstableInitialLoop when (G0, C0) is not internally stable.
Collection collect_closed_loop(const ExperimentConfig& config, std::uint64_t seed);

/// Per-output SNR of a collection: var(T r) against var((I - T) v).
std::vector<double> collection_snr_db(const Collection& c);

struct JmrResult {
  double value = std::numeric_limits<double>::infinity();
  bool stable = false;
};

/// (1/N) sum ||(Td - T) r||^2 over the protocol reference; +inf when the loop
/// (G0, C) is not internally stable.
JmrResult evaluate_jmr(const TransferMatrix& g0, const TransferMatrix& c, const TransferMatrix& td,
                       const JmrProtocol& protocol);

struct OciResult {
  Theta theta;
  TransferMatrix controller;
  TransferMatrix reference;
  std::vector<Complex> nmp_zeros;  ///< unstable zeros of the free numerators, largest first
  double z_nm = std::numeric_limits<double>::quiet_NaN();  ///< |largest| unstable zero, NaN if none
  double cost = 0.0;
  OptimReport report;
};

/// Identifies theta on one batch starting from default_init.
OciResult run_oci(const ExperimentConfig& config, const DataBatch& batch);

struct RunRecord {
  std::uint64_t seed = 0;
  bool failed = false;      ///< identification threw
  std::string failure;
  bool stable = false;      ///< tuned loop internally stable
  double jmr = std::numeric_limits<double>::infinity();
  double z_nm = std::numeric_limits<double>::quiet_NaN();
  double cost = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd theta;
};

/// Box-plot statistics: quartiles by linear interpolation, whiskers at the most
/// extreme samples within 1.5 IQR of the box, the rest reported as outliers.
struct BoxStats {
  std::size_t count = 0;
  double q1 = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q3 = std::numeric_limits<double>::quiet_NaN();
  double lo_whisker = std::numeric_limits<double>::quiet_NaN();
  double hi_whisker = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> outliers;
};

BoxStats box_stats(std::vector<double> values);

struct McSummary {
  std::vector<RunRecord> runs;
  BoxStats jmr;   ///< over runs that did not fail
  BoxStats z_nm;  ///< over runs that did not fail and found an unstable zero
  std::size_t failed = 0;
  std::size_t unstable = 0;
};

/// Seed of run k of a campaign.
std::uint64_t run_seed(std::uint64_t seed_base, std::size_t k);

/// Independent collect + identify + evaluate runs. Threads default to the
/// hardware concurrency capped by OCITUNE_THREADS; results do not depend on
/// the thread count.
McSummary monte_carlo(const ExperimentConfig& config, std::size_t runs,
                      std::optional<std::size_t> threads = std::nullopt);

/// Thread count used by monte_carlo when none is given.
std::size_t default_thread_count();

}  // namespace ocitune
