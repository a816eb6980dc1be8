// Command-line front end: collect, identify, montecarlo, stepresponse, audit.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "ocitune/error.hpp"
#include "ocitune/io.hpp"

namespace fs = std::filesystem;
using namespace ocitune;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kStability = 3, kOptimization = 4 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::IoError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ImproperEntry:
    case ErrorCode::ZeroPolynomial:
    case ErrorCode::NonPSD:
      return kConfig;
    case ErrorCode::UnstableInitialLoop:
    case ErrorCode::AlgebraicLoop:
      return kStability;
    case ErrorCode::NonFiniteCost:
    case ErrorCode::AllStartsFailed:
      return kOptimization;
    default:
      return kFailure;
  }
}

/// Raised to leave a command with a specific status after printing `what`.
struct CommandExit {
  int code;
  std::string what;
};

struct Options {
  fs::path config;
  fs::path data;
  fs::path controller;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> transient_skip;
  std::optional<std::size_t> threads;
  bool audit = false;
  std::size_t points = 3;
};

/// Config JSON with command-line overrides applied, so a manifest records
/// exactly what was run.
struct LoadedConfig {
  Json json;
  ExperimentConfig config;
};

LoadedConfig load(const Options& o, bool seed_is_campaign_base) {
  LoadedConfig out;
  try {
    Json j = read_json(o.config);
    if (j.is_object() && j.contains("manifest_version")) j = j.at("config");
    if (o.seed) {
      if (seed_is_campaign_base) {
        j["monte_carlo"]["seed_base"] = *o.seed;
      } else {
        j["seed"] = *o.seed;
      }
    }
    if (o.runs) j["monte_carlo"]["runs"] = *o.runs;
    if (o.transient_skip) j["transient_skip"] = *o.transient_skip;
    out.config = config_from_json(j);
    out.json = std::move(j);
  } catch (const Error& e) {
    throw CommandExit{kConfig, e.what()};
  }
  return out;
}

class Manifest {
 public:
  Manifest(std::string command, const LoadedConfig& cfg) : start_(std::chrono::steady_clock::now()) {
    m_.command = std::move(command);
    m_.config = cfg.json;
    m_.config_hash = fnv1a(cfg.json.dump());
  }
  RunManifest& get() { return m_; }
  void write(const fs::path& path) {
    m_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(path, m_.to_json());
  }

 private:
  RunManifest m_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_collect(const Options& o) {
  const LoadedConfig cfg = load(o, false);
  Manifest man("collect", cfg);
  const Collection c = collect_closed_loop(cfg.config, cfg.config.seed);
  write_batch_csv(o.out, c.batch);
  man.get().seeds = {cfg.config.seed};
  man.get().artifacts = {o.out.string()};
  if (!c.y_noise.isZero(0.0)) {
    const std::vector<double> snr = collection_snr_db(c);
    man.get().extra["snr_db"] = snr;
    std::cout << "snr_db";
    for (double s : snr) std::cout << ' ' << s;
    std::cout << '\n';
  }
  man.write(manifest_path(o.out));
  std::cout << "wrote " << c.batch.length() << " samples to " << o.out.string() << '\n';
  return kOk;
}

int cmd_identify(const Options& o) {
  const LoadedConfig cfg = load(o, false);
  Manifest man("identify", cfg);
  DataBatch batch;
  try {
    batch = read_batch_csv(o.data);
  } catch (const Error& e) {
    throw CommandExit{kConfig, e.what()};
  }
  const OciResult res = run_oci(cfg.config, batch);
  Json report = identification_report(cfg.config, res);
  if (o.audit) {
    const OciLeastSquares problem(cfg.config.model, batch.u, batch.y, cfg.config.transient_skip);
    report["gradient_audit"] = {{"max_relative_deviation", audit_gradient(problem, res.report.theta)},
                                {"step", 1e-6}};
  }
  write_json(o.out, report);
  man.get().seeds = {cfg.config.optim.seed};
  man.get().artifacts = {o.out.string()};
  man.get().extra["inputs"] = {o.data.string()};
  man.write(manifest_path(o.out));
  std::cout << "cost " << res.cost << " z_nm " << res.z_nm;
  if (report.contains("jmr")) std::cout << " jmr " << report["jmr"].dump();
  std::cout << '\n';
  return kOk;
}

void write_boxplot(const fs::path& path, const McSummary& s) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "metric,count,q1,median,q3,lo_whisker,hi_whisker,outliers\n";
  for (const auto& [name, b] : {std::pair{"jmr", &s.jmr}, std::pair{"z_nm", &s.z_nm}}) {
    out << name << ',' << b->count << ',' << fmt(b->q1) << ',' << fmt(b->median) << ',' << fmt(b->q3) << ','
        << fmt(b->lo_whisker) << ',' << fmt(b->hi_whisker);
    for (double v : b->outliers) out << ',' << fmt(v);
    out << '\n';
  }
}

void write_runs(const fs::path& path, const McSummary& s) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  std::size_t width = 0;
  for (const auto& r : s.runs) width = std::max(width, static_cast<std::size_t>(r.theta.size()));
  out << "run,seed,failed,stable,jmr,z_nm,cost";
  for (std::size_t k = 1; k <= width; ++k) out << ",theta" << k;
  out << '\n';
  for (std::size_t k = 0; k < s.runs.size(); ++k) {
    const RunRecord& r = s.runs[k];
    out << k + 1 << ',' << r.seed << ',' << r.failed << ',' << r.stable << ',' << fmt(r.jmr) << ','
        << fmt(r.z_nm) << ',' << fmt(r.cost);
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) out << ',' << fmt(r.theta(i));
    out << '\n';
  }
}

int cmd_montecarlo(const Options& o) {
  const LoadedConfig cfg = load(o, true);
  Manifest man("montecarlo", cfg);
  fs::create_directories(o.out);
  const std::size_t runs = cfg.config.monte_carlo.runs;
  const McSummary s = monte_carlo(cfg.config, runs, o.threads);
  const fs::path box = o.out / "boxplot.csv", rows = o.out / "runs.csv", summary = o.out / "summary.json";
  write_boxplot(box, s);
  write_runs(rows, s);
  Json failures = Json::array();
  for (const auto& r : s.runs)
    if (r.failed) failures.push_back({{"seed", r.seed}, {"error", r.failure}});
  write_json(summary, {{"runs", runs},
                       {"failed", s.failed},
                       {"unstable", s.unstable},
                       {"median_jmr", s.jmr.median},
                       {"median_z_nm", s.z_nm.median},
                       {"failures", failures}});
  for (std::size_t k = 0; k < runs; ++k) man.get().seeds.push_back(run_seed(cfg.config.monte_carlo.seed_base, k));
  man.get().artifacts = {box.string(), rows.string(), summary.string()};
  man.write(o.out / "manifest.json");
  std::cout << "runs " << runs << " failed " << s.failed << " unstable " << s.unstable << " median_jmr "
            << s.jmr.median << " median_z_nm " << s.z_nm.median << '\n';
  return s.failed == runs ? kOptimization : kOk;
}

int cmd_stepresponse(const Options& o) {
  const LoadedConfig cfg = load(o, false);
  Manifest man("stepresponse", cfg);
  if (cfg.config.plant.dim() == 0) throw CommandExit{kConfig, "stepresponse needs a plant in the config"};
  TransferMatrix c, td;
  try {
    const Json j = read_json(o.controller);
    c = transfer_matrix_from_json(j.at("controller"), "controller");
    td = transfer_matrix_from_json(j.at("reference"), "reference");
  } catch (const Json::exception& e) {
    throw CommandExit{kConfig, o.controller.string() + ": needs 'controller' and 'reference' matrices (" + e.what() + ")"};
  } catch (const Error& e) {
    throw CommandExit{kConfig, e.what()};
  }
  const InternalStability st = internal_stability_check(cfg.config.plant, c);
  if (!st.stable) throw CommandExit{kStability, "closed loop with this controller is not internally stable"};
  const Signal r = cfg.config.protocol.reference(cfg.config.plant.dim());
  const Signal y_cl = simulate(closed_loop(cfg.config.plant, c), r);
  const Signal y_td = simulate(td, r);
  std::ofstream out(o.out);
  if (!out) fail(ErrorCode::IoError, "cannot write " + o.out.string());
  out << "# ocitune-step v1\nt,channel,y_closedloop,y_refmodel\n";
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index t = 0; t < r.cols(); ++t)
      out << t + 1 << ',' << i + 1 << ',' << fmt(y_cl(i, t)) << ',' << fmt(y_td(i, t)) << '\n';
  out.close();
  man.get().artifacts = {o.out.string()};
  man.get().extra["inputs"] = {o.controller.string()};
  man.write(manifest_path(o.out));
  std::cout << "jmr " << (y_td - y_cl).squaredNorm() / static_cast<double>(r.cols()) << '\n';
  return kOk;
}

int cmd_audit(const Options& o) {
  const LoadedConfig cfg = load(o, false);
  Manifest man("audit", cfg);
  DataBatch batch;
  if (!o.data.empty()) {
    try {
      batch = read_batch_csv(o.data);
    } catch (const Error& e) {
      throw CommandExit{kConfig, e.what()};
    }
  } else {
    batch = collect_closed_loop(cfg.config, cfg.config.seed).batch;
  }
  const OciLeastSquares problem(cfg.config.model, batch.u, batch.y, cfg.config.transient_skip);
  const Eigen::VectorXd x0 = default_init(cfg.config.model).stacked();
  std::mt19937_64 rng(cfg.config.seed);
  std::normal_distribution<double> nd(0.0, 0.05);
  Json points = Json::array();
  double worst = 0.0;
  for (std::size_t k = 0; k < o.points; ++k) {
    Eigen::VectorXd x = x0;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += nd(rng);
    const double dev = audit_gradient(problem, x);
    worst = std::max(worst, dev);
    points.push_back({{"theta", std::vector<double>(x.data(), x.data() + x.size())}, {"max_relative_deviation", dev}});
  }
  const Json report{{"points", points}, {"max_relative_deviation", worst}};
  if (!o.out.empty()) {
    write_json(o.out, report);
    man.get().seeds = {cfg.config.seed};
    man.get().artifacts = {o.out.string()};
    man.write(manifest_path(o.out));
  }
  std::cout << "max_relative_deviation " << worst << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven tuning of fixed-structure MIMO controllers from one closed-loop batch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Options o;

  auto* collect = app.add_subcommand("collect", "simulate the initial closed loop and write a data batch");
  collect->add_option("config", o.config, "experiment config or run manifest")->required();
  collect->add_option("--out", o.out, "output CSV")->required();
  collect->add_option("--seed", o.seed, "experiment seed");

  auto* identify = app.add_subcommand("identify", "identify controller and reference model from a batch");
  identify->add_option("config", o.config, "experiment config or run manifest")->required();
  identify->add_option("data", o.data, "data batch CSV")->required();
  identify->add_option("--out", o.out, "report JSON")->required();
  identify->add_option("--transient-skip", o.transient_skip, "samples excluded from the cost");
  identify->add_flag("--audit-gradient", o.audit, "compare the analytic Jacobian with central differences");

  auto* mc = app.add_subcommand("montecarlo", "repeat collect + identify + evaluate over seeds");
  mc->add_option("config", o.config, "experiment config or run manifest")->required();
  mc->add_option("--runs", o.runs, "number of runs");
  mc->add_option("--out", o.out, "output directory")->required();
  mc->add_option("--seed", o.seed, "seed of the first run");
  mc->add_option("--transient-skip", o.transient_skip, "samples excluded from the cost");
  mc->add_option("--threads", o.threads, "worker threads");

  auto* step = app.add_subcommand("stepresponse", "step traces of the tuned loop and the reference model");
  step->add_option("config", o.config, "experiment config with the plant")->required();
  step->add_option("controller", o.controller, "report or file with 'controller' and 'reference'")->required();
  step->add_option("--out", o.out, "output CSV")->required();

  auto* audit = app.add_subcommand("audit", "gradient audit at random parameter points");
  audit->add_option("config", o.config, "experiment config or run manifest")->required();
  audit->add_option("--data", o.data, "data batch CSV (collected from the config otherwise)");
  audit->add_option("--seed", o.seed, "experiment seed");
  audit->add_option("--points", o.points, "number of random points");
  audit->add_option("--transient-skip", o.transient_skip, "samples excluded from the cost");
  audit->add_option("--out", o.out, "report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*collect) return cmd_collect(o);
    if (*identify) return cmd_identify(o);
    if (*mc) return cmd_montecarlo(o);
    if (*step) return cmd_stepresponse(o);
    return cmd_audit(o);
  } catch (const CommandExit& e) {
    std::cerr << "ocitune: " << e.what << '\n';
    return e.code;
  } catch (const Error& e) {
    std::cerr << "ocitune: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ocitune: " << e.what() << '\n';
    return kFailure;
  }
}
