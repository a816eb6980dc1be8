#include "ocitune/signals.hpp"

#include <cmath>
#include <random>
#include <set>

#include "ocitune/error.hpp"

namespace ocitune {

namespace {

constexpr unsigned kLfsrBits = 7;
constexpr unsigned kLfsrPeriod = (1u << kLfsrBits) - 1;

/// Fibonacci register: feedback = bit 7 xor bit 6, output = bit 1.
class Lfsr7 {
 public:
  explicit Lfsr7(unsigned state) : state_(state) {}

  bool next() {
    const bool out = state_ & 1u;
    const unsigned fb = ((state_ >> 6) ^ (state_ >> 5)) & 1u;
    state_ = ((state_ << 1) | fb) & kLfsrPeriod;
    return out;
  }

 private:
  unsigned state_;
};

}  // namespace

void DataBatch::validate() const {
  if (r.rows() != u.rows() || r.rows() != y.rows() || r.cols() != u.cols() || r.cols() != y.cols())
    fail(ErrorCode::DimensionMismatch, "r, u and y must share one shape");
}

Signal prbs(std::size_t channels, double amplitude, std::size_t hold, std::size_t length,
            std::uint64_t seed) {
  if (hold == 0) fail(ErrorCode::InvalidArgument, "PRBS hold must be at least one sample");
  if (channels > kLfsrPeriod) fail(ErrorCode::InvalidArgument, "too many PRBS channels for distinct phases");
  std::mt19937_64 rng(seed);
  std::set<unsigned> used;
  Signal out(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(length));
  for (std::size_t i = 0; i < channels; ++i) {
    unsigned state = 0;
    do state = 1u + static_cast<unsigned>(rng() % kLfsrPeriod);
    while (!used.insert(state).second);
    Lfsr7 reg(state);
    double level = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      if (t % hold == 0) level = reg.next() ? amplitude : -amplitude;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = level;
    }
  }
  return out;
}

Signal gaussian_noise(const Eigen::MatrixXd& covariance, std::size_t length, std::uint64_t seed) {
  if (covariance.rows() != covariance.cols())
    fail(ErrorCode::DimensionMismatch, "covariance must be square");
  const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1.0);
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorCode::NonPSD, "covariance is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
    fail(ErrorCode::NonPSD, "covariance has a negative eigenvalue");
  const Eigen::MatrixXd root = eig.eigenvectors() *
                               eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               eig.eigenvectors().transpose();
  const Eigen::Index n = covariance.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(length));
  for (Eigen::Index t = 0; t < z.cols(); ++t)
    for (Eigen::Index i = 0; i < n; ++i) z(i, t) = nd(rng);
  return root * z;
}

Signal shape_noise(const TransferMatrix& h0, const Signal& w) { return simulate(h0, w); }

std::vector<double> snr_db(const Signal& signal, const Signal& noise) {
  if (signal.rows() != noise.rows()) fail(ErrorCode::DimensionMismatch, "channel counts differ");
  auto variance = [](const auto& row) {
    const double mean = row.mean();
    return (row.array() - mean).square().sum() / static_cast<double>(row.size());
  };
  std::vector<double> out;
  for (Eigen::Index i = 0; i < signal.rows(); ++i) {
    const double vn = variance(noise.row(i));
    if (!(vn > 0.0)) fail(ErrorCode::ZeroNoiseVariance, "noise channel " + std::to_string(i + 1) + " has zero variance");
    out.push_back(10.0 * std::log10(variance(signal.row(i)) / vn));
  }
  return out;
}

}  // namespace ocitune
