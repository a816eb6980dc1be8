// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocitune/error.hpp"
#include "ocitune/predictor.hpp"
#include "ocitune/studies.hpp"

using namespace ocitune;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;
  std::function<Outcome()> check;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_deviation(const TransferMatrix& a, const TransferMatrix& b) {
  double dev = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) dev = std::max(dev, max_coefficient_deviation(a(i, j), b(i, j)));
  return dev;
}

Outcome ideal_controller_golden() {
  const TransferMatrix cd = ideal_controller(studies::example_plant(), studies::example_reference());
  const double gains[2][2] = {{0.6, -0.8}, {-0.5, 0.4}};
  const double zeros[2][2][2] = {{{0.9, 0.8}, {0.9, 0.8}}, {{0.9, 0.8}, {0.8, 0.7}}};
  double worst = 0.0;
  bool shape = true;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const RationalFunction& e = cd(i, j);
      worst = std::max(worst, std::abs(e.gain() - gains[i][j]));
      if (e.zeros().size() != 2) {
        shape = false;
        continue;
      }
      std::vector<double> z{e.zeros()[0].real(), e.zeros()[1].real()};
      std::sort(z.rbegin(), z.rend());
      for (int k = 0; k < 2; ++k) {
        worst = std::max(worst, std::abs(z[static_cast<std::size_t>(k)] - zeros[i][j][k]));
        worst = std::max(worst, std::abs(e.zeros()[static_cast<std::size_t>(k)].imag()));
      }
    }
  return {shape && worst < 5e-3, "max gain/zero deviation " + sci(worst) + " (< 5e-3)"};
}

Outcome transmission_zero_golden() {
  const auto zs = transmission_zeros(studies::example_plant());
  if (zs.size() != 1) return {false, std::to_string(zs.size()) + " zeros found, expected 1"};
  Eigen::Vector2cd want(-0.6, 0.8);
  const double cosine = std::min(1.0, std::abs(want.dot(zs[0].y_dir)) / (want.norm() * zs[0].y_dir.norm()));
  const double angle = std::acos(cosine);
  const double err = std::abs(zs[0].z - 1.2);
  return {err < 1e-9 && angle < 1e-6, "|z - 1.2| = " + sci(err) + " (< 1e-9), angle " + sci(angle) + " rad (< 1e-6)"};
}

Outcome consistency() {
  ExperimentConfig cfg = studies::block_study();
  cfg.noise_cov.setZero();
  const OciResult res = run_oci(cfg, collect_closed_loop(cfg, cfg.seed).batch);
  const double jmr = evaluate_jmr(cfg.plant, res.controller, res.reference, cfg.protocol).value;
  const double dev = max_deviation(res.controller, ideal_controller(cfg.plant, res.reference));
  const bool pass = res.cost < 1e-10 && jmr < 1e-8 && std::abs(res.z_nm - 1.2) <= 1e-3 && dev < 1e-4;
  return {pass, "V = " + sci(res.cost) + " (< 1e-10), J^MR = " + sci(jmr) + " (< 1e-8), z = " +
                    std::to_string(res.z_nm) + " (1.2 +- 1e-3), C deviation " + sci(dev) + " (< 1e-4)"};
}

Outcome diagonal_study() {
  const ExperimentConfig cfg = studies::diagonal_study();
  const OciResult res = run_oci(cfg, collect_closed_loop(cfg, cfg.seed).batch);
  const double jmr = evaluate_jmr(cfg.plant, res.controller, res.reference, cfg.protocol).value;
  bool zeros_ok = res.nmp_zeros.size() == 2;
  std::string zs;
  for (const Complex& z : res.nmp_zeros) {
    zeros_ok = zeros_ok && std::abs(z.imag()) < 1e-9 && z.real() >= 1.15 && z.real() <= 1.30;
    zs += " " + std::to_string(z.real());
  }
  return {zeros_ok && jmr >= 4e-4 && jmr <= 1e-2,
          "J^MR = " + sci(jmr) + " (in [4e-4, 1e-2]), zeros" + zs + " (both in [1.15, 1.30])"};
}

double block_median_jmr = std::nan("");

McSummary campaign(const ExperimentConfig& cfg) { return monte_carlo(cfg, 100); }

Outcome block_monte_carlo() {
  const McSummary s = campaign(studies::block_study());
  std::size_t stable = 0;
  for (const auto& r : s.runs) stable += !r.failed && r.stable;
  block_median_jmr = s.jmr.median;
  const bool pass = std::abs(s.z_nm.median - 1.2) <= 0.01 && s.jmr.median < 1e-3 && stable >= 95;
  return {pass, "median z = " + std::to_string(s.z_nm.median) + " (1.2 +- 0.01), median J^MR = " + sci(s.jmr.median) +
                    " (< 1e-3), stable " + std::to_string(stable) + "/100 (>= 95)"};
}

Outcome mismatched_monte_carlo() {
  if (std::isnan(block_median_jmr)) block_median_jmr = campaign(studies::block_study()).jmr.median;
  const McSummary s = campaign(studies::mismatched_study());
  const bool pass = s.jmr.median > block_median_jmr && s.z_nm.median >= 1.1 && s.z_nm.median <= 1.3;
  return {pass, "median J^MR = " + sci(s.jmr.median) + " (> " + sci(block_median_jmr) + "), median z = " +
                    std::to_string(s.z_nm.median) + " (in [1.1, 1.3])"};
}

Outcome gradient_audit() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 0.05);
  double worst = 0.0;
  for (const ExperimentConfig& cfg : {studies::diagonal_study(), studies::block_study(), studies::mismatched_study()}) {
    const DataBatch b = collect_closed_loop(cfg, cfg.seed).batch;
    const OciLeastSquares problem(cfg.model, b.u, b.y, cfg.transient_skip);
    const Eigen::VectorXd x0 = default_init(cfg.model).stacked();
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd x = x0;
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += nd(rng);
      worst = std::max(worst, audit_gradient(problem, x));
    }
  }
  return {worst < 1e-5, "max relative deviation " + sci(worst) + " over 9 points (< 1e-5)"};
}

Outcome factorization_suite() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> degree(2, 8);
  const auto radius = [&] {
    return unit(rng) < 0.5 ? 0.05 + 0.85 * unit(rng) : 1.1 + 1.9 * unit(rng);
  };
  double reconv = 0.0, allpass = 0.0, jac = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int deg = degree(rng);
    std::vector<Complex> roots;
    while (static_cast<int>(roots.size()) < deg) {
      const double r = radius();
      if (deg - static_cast<int>(roots.size()) >= 2 && unit(rng) < 0.5) {
        const Complex z = std::polar(r, 0.1 + (M_PI - 0.2) * unit(rng));
        roots.push_back(z);
        roots.push_back(std::conj(z));
      } else {
        roots.emplace_back(unit(rng) < 0.5 ? r : -r, 0.0);
      }
    }
    const Polynomial d = Polynomial::from_roots(roots, 0.5 + 2.0 * unit(rng));
    const FactoredDenominator f = factor_unit_circle(d);
    const Polynomial back = f.d_s * f.d_u;
    double scale = 0.0, diff = 0.0;
    for (int k = 0; k <= d.degree(); ++k) scale = std::max(scale, std::abs(d.coeffs()[static_cast<std::size_t>(k)]));
    for (int k = 0; k <= d.degree(); ++k)
      diff = std::max(diff, std::abs(back.coeffs()[static_cast<std::size_t>(k)] - d.coeffs()[static_cast<std::size_t>(k)]));
    reconv = std::max(reconv, back.degree() == d.degree() ? diff / scale : 1.0);
    for (double m : allpass_magnitude(f.d_u, f.d_u_star, 256)) allpass = std::max(allpass, std::abs(m - 1.0));

    const std::vector<double> ds = f.d_s.coeffs();
    const std::vector<double> du(f.d_u.coeffs().begin() + 1, f.d_u.coeffs().end());
    const Eigen::MatrixXd j = sylvester_jacobian(ds, du);
    std::vector<double> x = ds;
    x.insert(x.end(), du.begin(), du.end());
    Eigen::MatrixXd fd(j.rows(), j.cols());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double h = 1e-6 * (1.0 + std::abs(x[k]));
      std::vector<double> xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const auto split = static_cast<std::ptrdiff_t>(ds.size());
      const std::vector<double> cp = convolve_split({xp.data(), ds.size()}, {xp.data() + split, du.size()});
      const std::vector<double> cm = convolve_split({xm.data(), ds.size()}, {xm.data() + split, du.size()});
      for (Eigen::Index r = 0; r < fd.rows(); ++r)
        fd(r, static_cast<Eigen::Index>(k)) = (cp[static_cast<std::size_t>(r)] - cm[static_cast<std::size_t>(r)]) / (2.0 * h);
    }
    jac = std::max(jac, (fd - j).cwiseAbs().maxCoeff() / std::max(1.0, j.cwiseAbs().maxCoeff()));
  }
  return {reconv < 1e-10 && allpass < 1e-10 && jac < 1e-8,
          "reconvolution " + sci(reconv) + " (< 1e-10), all-pass " + sci(allpass) + " (< 1e-10), Sylvester vs FD " +
              sci(jac) + " (< 1e-8)"};
}

Outcome snr_reproduction() {
  const ExperimentConfig cfg = studies::block_study();
  const std::vector<double> snr = collection_snr_db(collect_closed_loop(cfg, cfg.seed));
  bool pass = true;
  std::string detail = "SNR";
  for (double s : snr) {
    pass = pass && std::abs(s - 9.0) <= 1.5;
    detail += " " + std::to_string(s);
  }
  return {pass, detail + " dB (9 +- 1.5 each)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  app.add_option("--criterion", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "ideal-controller golden values", 1.0, ideal_controller_golden},
      {2, "transmission zero and direction", 1.0, transmission_zero_golden},
      {3, "noise-free consistency", 30.0, consistency},
      {4, "diagonal study", 60.0, diagonal_study},
      {5, "noisy block-triangular Monte Carlo", 600.0, block_monte_carlo},
      {6, "mismatched Monte Carlo", 600.0, mismatched_monte_carlo},
      {7, "gradient audit", 30.0, gradient_audit},
      {8, "all-pass and factorization suite", 30.0, factorization_suite},
      {9, "collection SNR", 5.0, snr_reproduction},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %d %s: %s; %s; %.2f s (< %.0f s)\n", c.id, c.title.c_str(), pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.time_limit);
    std::fflush(stdout);
  }
  return failed;
}
