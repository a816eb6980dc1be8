#include "ocitune/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ocitune/error.hpp"

namespace ocitune {

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  fail(ErrorCode::ConfigError, where + ": " + what);
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

const Json& need(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) config_error(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) config_error(join(where, key), "missing key");
  return *it;
}

double as_number(const Json& j, const std::string& where) {
  if (!j.is_number()) config_error(where, "expected a number");
  return j.get<double>();
}

std::size_t as_count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) config_error(where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

std::vector<double> as_numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) config_error(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

template <class F>
auto optional_field(const Json& j, const std::string& key, const std::string& where, F&& read)
    -> std::optional<decltype(read(j, where))> {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return read(*it, join(where, key));
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) config_error(where, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::vector<double> row = as_numbers(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    if (static_cast<Eigen::Index>(row.size()) != rows) config_error(where, "matrix must be square");
    for (Eigen::Index c = 0; c < rows; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

template <class T, class F>
Grid<T> grid_from_json(const Json& j, const std::string& where, F&& read) {
  if (!j.is_array() || j.empty()) config_error(where, "expected a non-empty array of rows");
  const std::size_t n = j.size();
  Grid<T> g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != n) config_error(row, "expected " + std::to_string(n) + " entries");
    for (std::size_t c = 0; c < n; ++c) g(i, c) = read(j[i][c], row + "[" + std::to_string(c) + "]");
  }
  return g;
}

const char* kind_name(RefEntry::Kind k) {
  switch (k) {
    case RefEntry::Kind::Zero: return "zero";
    case RefEntry::Kind::Fixed: return "fixed";
    case RefEntry::Kind::Free: return "free";
    case RefEntry::Kind::GainConstrained: return "gain_constrained";
  }
  return "zero";
}

Json entry_json(const RefEntry& e) {
  Json out{{"template", kind_name(e.kind)}};
  switch (e.kind) {
    case RefEntry::Kind::Zero:
      break;
    case RefEntry::Kind::Fixed:
      out["num"] = to_json(e.num);
      out["den"] = to_json(e.den);
      break;
    case RefEntry::Kind::Free: {
      out["den"] = to_json(e.den);
      out["factor"] = to_json(e.factor);
      Json coeffs = Json::array();
      for (const auto& s : e.coeffs) coeffs.push_back(s.free ? Json("free") : Json(s.value));
      out["coeffs"] = coeffs;
      break;
    }
    case RefEntry::Kind::GainConstrained:
      out["den"] = to_json(e.den);
      break;
  }
  return out;
}

// Entry denominator given either as coefficients or as a list of real poles.
Polynomial entry_den(const Json& j, const std::string& where) {
  if (j.contains("poles")) return Polynomial::from_real_roots(as_numbers(j["poles"], join(where, "poles")));
  return polynomial_from_json(need(j, "den", where), join(where, "den"));
}

RefEntry entry_from_json(const Json& j, const std::string& where) {
  if (j.is_null()) return RefEntry::zero();
  const Json& tag = need(j, "template", where);
  if (!tag.is_string()) config_error(join(where, "template"), "expected a string");
  const std::string kind = tag.get<std::string>();
  if (kind == "zero") return RefEntry::zero();
  if (kind == "fixed")
    return RefEntry::fixed(polynomial_from_json(need(j, "num", where), join(where, "num")),
                           entry_den(j, where));
  if (kind == "free") {
    const Json& cj = need(j, "coeffs", where);
    if (!cj.is_array() || cj.empty()) config_error(join(where, "coeffs"), "expected a non-empty array");
    std::vector<CoefficientSlot> coeffs;
    for (std::size_t k = 0; k < cj.size(); ++k) {
      if (cj[k].is_string() && cj[k].get<std::string>() == "free") {
        coeffs.push_back(CoefficientSlot::open());
      } else {
        coeffs.push_back(CoefficientSlot::pinned(as_number(cj[k], join(where, "coeffs") + "[" + std::to_string(k) + "]")));
      }
    }
    const Polynomial factor = j.contains("factor") ? polynomial_from_json(j["factor"], join(where, "factor")) : Polynomial{1.0};
    return RefEntry::free(entry_den(j, where), factor, std::move(coeffs));
  }
  if (kind == "gain_constrained") {
    if (j.contains("poles")) {
      const int rel = j.contains("relative_degree")
                          ? static_cast<int>(as_count(j["relative_degree"], join(where, "relative_degree")))
                          : 1;
      return RefEntry::gain_constrained(as_numbers(j["poles"], join(where, "poles")), rel);
    }
    RefEntry e;
    e.kind = RefEntry::Kind::GainConstrained;
    e.den = polynomial_from_json(need(j, "den", where), join(where, "den"));
    if (std::abs(e.den(1.0)) < 1e-12) config_error(join(where, "den"), "gain-constrained entry has a pole at q = 1");
    return e;
  }
  config_error(join(where, "template"), "unknown template '" + kind + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Json to_json(const Polynomial& p) { return p.coeffs(); }

Json to_json(const RationalFunction& f) { return Json{{"num", to_json(f.num())}, {"den", to_json(f.den())}}; }

Json to_json(const TransferMatrix& t) {
  Json out = Json::array();
  for (std::size_t i = 0; i < t.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < t.dim(); ++j) row.push_back(to_json(t(i, j)));
    out.push_back(row);
  }
  return out;
}

Json to_json(const ControllerStructure& s) {
  Json deg = Json::array();
  for (std::size_t i = 0; i < s.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < s.dim(); ++j) row.push_back(s.numerator_degree()(i, j));
    deg.push_back(row);
  }
  return Json{{"denominator", to_json(s.denominator())}, {"numerator_degree", deg}};
}

Json to_json(const RefModelSpec& s) {
  Json entries = Json::array();
  for (std::size_t i = 0; i < s.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < s.dim(); ++j) row.push_back(entry_json(s.entries()(i, j)));
    entries.push_back(row);
  }
  Json out{{"structure", s.structure() == RefStructure::Diagonal ? "diagonal" : "block_triangular"},
           {"entries", entries}};
  if (s.structure() == RefStructure::BlockTriangular) out["distinguished_row"] = s.distinguished_row();
  return out;
}

Json to_json(const OptimOptions& o) {
  return Json{{"sd_iters", o.sd_iters},           {"lm_max_iters", o.lm_max_iters},
              {"lm_lambda0", o.lm_lambda0},       {"lm_up", o.lm_up},
              {"lm_down", o.lm_down},             {"sd_step0", o.sd_step0},
              {"grad_tol", o.grad_tol},           {"cost_rel_tol", o.cost_rel_tol},
              {"multistart", o.multistart},       {"multistart_std", o.multistart_std},
              {"seed", o.seed}};
}

Json to_json(const ExperimentConfig& c) {
  Json out{{"name", c.name},
           {"seed", c.seed},
           {"controller", to_json(c.model.controller)},
           {"reference_model", to_json(c.model.reference)},
           {"excitation", {{"amplitude", c.excitation.amplitude}, {"hold", c.excitation.hold}, {"length", c.excitation.length}}},
           {"optimizer", to_json(c.optim)},
           {"transient_skip", c.transient_skip},
           {"evaluation", {{"n_eval", c.protocol.n_eval}}},
           {"monte_carlo", {{"runs", c.monte_carlo.runs}, {"seed_base", c.monte_carlo.seed_base}}}};
  if (c.plant.dim() != 0) out["plant"] = to_json(c.plant);
  if (c.noise_filter.dim() != 0) out["noise_filter"] = to_json(c.noise_filter);
  if (c.initial_controller.dim() != 0) out["initial_controller"] = to_json(c.initial_controller);
  if (c.noise_cov.size() != 0) out["noise_covariance"] = matrix_json(c.noise_cov);
  return out;
}

Polynomial polynomial_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return Polynomial{j.get<double>()};
  const std::vector<double> c = as_numbers(j, where);
  if (c.empty()) config_error(where, "polynomial needs at least one coefficient");
  return Polynomial(c);
}

RationalFunction rational_from_json(const Json& j, const std::string& where) {
  if (j.is_null()) return RationalFunction();
  if (j.is_number()) return RationalFunction(j.get<double>());
  const Polynomial den = polynomial_from_json(need(j, "den", where), join(where, "den"));
  if (den.is_zero()) config_error(join(where, "den"), "denominator is zero");
  return RationalFunction(polynomial_from_json(need(j, "num", where), join(where, "num")), den);
}

TransferMatrix transfer_matrix_from_json(const Json& j, const std::string& where) {
  if (j.is_object()) {
    const Json& tag = need(j, "template", where);
    if (!tag.is_string()) config_error(join(where, "template"), "expected a string");
    const std::string kind = tag.get<std::string>();
    if (kind == "identity") {
      const std::size_t n = as_count(need(j, "dim", where), join(where, "dim"));
      const double gain = j.contains("gain") ? as_number(j["gain"], join(where, "gain")) : 1.0;
      return gain * TransferMatrix::identity(n);
    }
    if (kind == "diagonal") {
      const Json& ej = need(j, "entries", where);
      if (!ej.is_array() || ej.empty()) config_error(join(where, "entries"), "expected a non-empty array");
      std::vector<RationalFunction> d;
      for (std::size_t k = 0; k < ej.size(); ++k)
        d.push_back(rational_from_json(ej[k], join(where, "entries") + "[" + std::to_string(k) + "]"));
      return TransferMatrix::diagonal(d);
    }
    config_error(join(where, "template"), "unknown template '" + kind + "'");
  }
  return TransferMatrix(grid_from_json<RationalFunction>(j, where, rational_from_json));
}

ControllerStructure controller_structure_from_json(const Json& j, const std::string& where) {
  if (j.contains("template")) {
    const Json& tag = j["template"];
    const std::size_t n = as_count(need(j, "dim", where), join(where, "dim"));
    if (tag == "pid") return ControllerStructure::pid(n);
    if (tag == "pi") return ControllerStructure::pi(n);
    config_error(join(where, "template"), "unknown template " + tag.dump());
  }
  const Polynomial c = polynomial_from_json(need(j, "denominator", where), join(where, "denominator"));
  const Grid<int> deg = grid_from_json<int>(need(j, "numerator_degree", where), join(where, "numerator_degree"),
                                            [](const Json& e, const std::string& w) {
                                              if (!e.is_number_integer()) config_error(w, "expected an integer degree");
                                              return e.get<int>();
                                            });
  return ControllerStructure(c, deg);
}

RefModelSpec refmodel_from_json(const Json& j, const std::string& where) {
  const Json& st = need(j, "structure", where);
  RefStructure structure;
  if (st == "diagonal") {
    structure = RefStructure::Diagonal;
  } else if (st == "block_triangular") {
    structure = RefStructure::BlockTriangular;
  } else {
    config_error(join(where, "structure"), "expected 'diagonal' or 'block_triangular'");
  }
  const std::size_t row = j.contains("distinguished_row") ? as_count(j["distinguished_row"], join(where, "distinguished_row")) : 0;
  return RefModelSpec(structure, grid_from_json<RefEntry>(need(j, "entries", where), join(where, "entries"), entry_from_json), row);
}

OptimOptions optim_options_from_json(const Json& j, const std::string& where) {
  OptimOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) config_error(where, "expected an object");
  const auto integer = [&](const char* key, int& field) {
    if (const auto v = optional_field(j, key, where, as_count)) field = static_cast<int>(*v);
  };
  const auto real = [&](const char* key, double& field) {
    if (const auto v = optional_field(j, key, where, as_number)) field = *v;
  };
  integer("sd_iters", o.sd_iters);
  integer("lm_max_iters", o.lm_max_iters);
  integer("multistart", o.multistart);
  real("lm_lambda0", o.lm_lambda0);
  real("lm_up", o.lm_up);
  real("lm_down", o.lm_down);
  real("sd_step0", o.sd_step0);
  real("grad_tol", o.grad_tol);
  real("cost_rel_tol", o.cost_rel_tol);
  real("multistart_std", o.multistart_std);
  if (const auto v = optional_field(j, "seed", where, as_count)) o.seed = *v;
  return o;
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) config_error("config", "expected an object at the top level");
  ExperimentConfig c;
  try {
    c.name = j.value("name", std::string{});
    if (const auto v = optional_field(j, "seed", "", as_count)) c.seed = *v;
    c.model.controller = controller_structure_from_json(need(j, "controller", ""), "controller");
    c.model.reference = refmodel_from_json(need(j, "reference_model", ""), "reference_model");
    const std::size_t n = c.model.controller.dim();
    if (j.contains("plant")) {
      c.plant = transfer_matrix_from_json(j["plant"], "plant");
      c.noise_filter = TransferMatrix::identity(n);
      c.noise_cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    }
    if (j.contains("noise_filter")) c.noise_filter = transfer_matrix_from_json(j["noise_filter"], "noise_filter");
    if (j.contains("noise_covariance")) c.noise_cov = matrix_from_json(j["noise_covariance"], "noise_covariance");
    if (j.contains("initial_controller"))
      c.initial_controller = transfer_matrix_from_json(j["initial_controller"], "initial_controller");
    if (const auto it = j.find("excitation"); it != j.end()) {
      if (const auto v = optional_field(*it, "amplitude", "excitation", as_number)) c.excitation.amplitude = *v;
      if (const auto v = optional_field(*it, "hold", "excitation", as_count)) c.excitation.hold = *v;
      if (const auto v = optional_field(*it, "length", "excitation", as_count)) c.excitation.length = *v;
    }
    if (j.contains("optimizer")) c.optim = optim_options_from_json(j["optimizer"], "optimizer");
    if (const auto v = optional_field(j, "transient_skip", "", as_count)) c.transient_skip = *v;
    if (const auto it = j.find("evaluation"); it != j.end())
      if (const auto v = optional_field(*it, "n_eval", "evaluation", as_count)) c.protocol.n_eval = *v;
    if (const auto it = j.find("monte_carlo"); it != j.end()) {
      if (const auto v = optional_field(*it, "runs", "monte_carlo", as_count)) c.monte_carlo.runs = *v;
      if (const auto v = optional_field(*it, "seed_base", "monte_carlo", as_count)) c.monte_carlo.seed_base = *v;
    }
  } catch (const Json::exception& e) {
    config_error("config", e.what());
  }
  c.validate();
  return c;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const Json j = read_json(path);
  if (j.is_object() && j.contains("manifest_version")) return config_from_json(need(j, "config", "manifest"));
  return config_from_json(j);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_config(const ExperimentConfig& c) { return to_json(c).dump(); }

void write_batch_csv(const std::filesystem::path& path, const DataBatch& batch) {
  batch.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << kBatchSchema << '\n';
  for (const auto& [key, value] : batch.metadata) {
    if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
      fail(ErrorCode::InvalidArgument, "metadata must not contain '=' in keys or newlines");
    out << "# " << key << '=' << value << '\n';
  }
  const std::size_t n = batch.channels();
  out << 't';
  for (const char* sig : {"r", "u", "y"})
    for (std::size_t i = 1; i <= n; ++i) out << ',' << sig << i;
  out << '\n';
  for (std::size_t t = 0; t < batch.length(); ++t) {
    out << t + 1;
    for (const Signal* s : {&batch.r, &batch.u, &batch.y})
      for (std::size_t i = 0; i < n; ++i)
        out << ',' << fmt17((*s)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)));
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

DataBatch read_batch_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  const auto bad = [&](std::size_t line, const std::string& what) {
    fail(ErrorCode::IoError, path.string() + ":" + std::to_string(line) + ": " + what);
  };
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != kBatchSchema) bad(1, std::string("expected schema line '") + kBatchSchema + "'");
  DataBatch b;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# ", 0) != 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad(lineno, "metadata line without '='");
    b.metadata[line.substr(2, eq - 2)] = line.substr(eq + 1);
  }
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  if (header.size() < 4 || (header.size() - 1) % 3 != 0 || header[0] != "t") bad(lineno, "malformed header");
  const std::size_t n = (header.size() - 1) / 3;
  for (std::size_t k = 0; k < 3 * n; ++k) {
    const std::string want = std::string(1, "ruy"[k / n]) + std::to_string(k % n + 1);
    if (header[k + 1] != want) bad(lineno, "expected column '" + want + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    for (std::size_t k = 0; k <= 3 * n; ++k) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) bad(lineno, "expected a number in column " + std::to_string(k + 1));
      row.push_back(v);
      p = end;
      if (k < 3 * n) {
        if (*p != ',') bad(lineno, "expected " + std::to_string(3 * n + 1) + " columns");
        ++p;
      }
    }
    if (*p != '\0') bad(lineno, "trailing characters");
    if (row[0] != static_cast<double>(rows.size() + 1)) bad(lineno, "sample index out of sequence");
    rows.push_back(std::move(row));
  }
  const auto len = static_cast<Eigen::Index>(rows.size());
  const auto ch = static_cast<Eigen::Index>(n);
  b.r.resize(ch, len);
  b.u.resize(ch, len);
  b.y.resize(ch, len);
  for (Eigen::Index t = 0; t < len; ++t)
    for (Eigen::Index i = 0; i < ch; ++i) {
      const auto& row = rows[static_cast<std::size_t>(t)];
      b.r(i, t) = row[static_cast<std::size_t>(1 + i)];
      b.u(i, t) = row[static_cast<std::size_t>(1 + ch + i)];
      b.y(i, t) = row[static_cast<std::size_t>(1 + 2 * ch + i)];
    }
  return b;
}

Json identification_report(const ExperimentConfig& config, const OciResult& result) {
  Json p = Json::object(), eta = Json::object();
  for (std::size_t k = 0; k < config.model.controller.num_params(); ++k)
    p[config.model.controller.slot_name(k)] = result.theta.P(static_cast<Eigen::Index>(k));
  for (std::size_t k = 0; k < config.model.reference.num_params(); ++k)
    eta[config.model.reference.slot_name(k)] = result.theta.eta(static_cast<Eigen::Index>(k));
  Json zeros = Json::array();
  for (const Complex& z : result.nmp_zeros) zeros.push_back({z.real(), z.imag()});
  const OptimReport& r = result.report;
  Json out{{"name", config.name},
           {"controller_parameters", p},
           {"reference_parameters", eta},
           {"controller", to_json(result.controller)},
           {"reference", to_json(result.reference)},
           {"nmp_zeros", zeros},
           {"z_nm", std::isnan(result.z_nm) ? Json(nullptr) : Json(result.z_nm)},
           {"cost", result.cost},
           {"optimizer",
            {{"termination", to_string(r.termination)},
             {"sd_iterations", r.sd_iterations},
             {"lm_iterations", r.lm_iterations},
             {"evaluations", r.evaluations},
             {"gradient_norm", r.gradient_norm},
             {"start_index", r.start_index},
             {"failed_starts", r.failed_starts},
             {"cost_trace", r.cost_trace}}}};
  if (config.plant.dim() != 0) {
    const JmrResult j = evaluate_jmr(config.plant, result.controller, result.reference, config.protocol);
    out["jmr"] = std::isfinite(j.value) ? Json(j.value) : Json(nullptr);
    out["closed_loop_stable"] = j.stable;
  }
  return out;
}

Json RunManifest::to_json() const {
  Json out{{"manifest_version", 1},
           {"command", command},
           {"config", config},
           {"config_hash", hex64(config_hash)},
           {"seeds", seeds},
           {"artifacts", artifacts},
           {"tool_version", tool_version},
           {"wall_seconds", wall_seconds}};
  for (const auto& [k, v] : extra.items()) out[k] = v;
  return out;
}

}  // namespace ocitune
