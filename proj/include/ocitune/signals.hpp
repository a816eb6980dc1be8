#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocitune/rational.hpp"

namespace ocitune {

/// One closed-loop experiment: reference, plant input and plant output, all
/// n x N with sample t = 1..N stored in column t-1.
struct DataBatch {
  Signal r;
  Signal u;
  Signal y;
  std::map<std::string, std::string> metadata;

  std::size_t channels() const { return static_cast<std::size_t>(r.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(r.cols()); }
  /// Throws DimensionMismatch unless r, u, y share one shape.
  void validate() const;
};

/// 7-bit maximal-length LFSR (taps 7 and 6, period 127). Each channel runs an
/// independent register started from a distinct nonzero state drawn from
/// `seed`; bits map to +/-amplitude and are held for `hold` samples.
Signal prbs(std::size_t channels, double amplitude, std::size_t hold, std::size_t length,
            std::uint64_t seed);

/// I.i.d. zero-mean Gaussian vectors with covariance `covariance` (symmetric
/// positive semidefinite; NonPSD otherwise), colored by a symmetric square root.
Signal gaussian_noise(const Eigen::MatrixXd& covariance, std::size_t length, std::uint64_t seed);

/// v = H0(q) w.
Signal shape_noise(const TransferMatrix& h0, const Signal& w);

/// 10 log10(var(signal) / var(noise)) per channel, variances about the mean.
/// Throws ZeroNoiseVariance when a noise channel is constant.
std::vector<double> snr_db(const Signal& signal, const Signal& noise);

}  // namespace ocitune
