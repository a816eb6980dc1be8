#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocitune/experiment.hpp"

namespace ocitune {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kBatchSchema = "# ocitune-batch v1";

using Json = nlohmann::json;

/// JSON <-> library objects. Readers throw ConfigError naming the offending
/// key path; writers emit the canonical form accepted by the readers.
Json to_json(const Polynomial& p);
Json to_json(const RationalFunction& f);
Json to_json(const TransferMatrix& t);
Json to_json(const ControllerStructure& s);
Json to_json(const RefModelSpec& s);
Json to_json(const OptimOptions& o);
Json to_json(const ExperimentConfig& c);

Polynomial polynomial_from_json(const Json& j, const std::string& where);
RationalFunction rational_from_json(const Json& j, const std::string& where);
TransferMatrix transfer_matrix_from_json(const Json& j, const std::string& where);
ControllerStructure controller_structure_from_json(const Json& j, const std::string& where);
RefModelSpec refmodel_from_json(const Json& j, const std::string& where);
OptimOptions optim_options_from_json(const Json& j, const std::string& where);
ExperimentConfig config_from_json(const Json& j);

/// Parses and validates a config file. A run manifest is accepted as well; its
/// config snapshot is used.
ExperimentConfig load_config(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Canonical single-line dump of the config and its 64-bit FNV-1a hash.
std::string canonical_config(const ExperimentConfig& c);
std::uint64_t fnv1a(std::string_view bytes);

/// CSV with the schema line, `# key=value` metadata lines, the header
/// t,r1..rn,u1..un,y1..yn and one row per sample, values at 17 significant
/// digits so that a write/read roundtrip is exact.
void write_batch_csv(const std::filesystem::path& path, const DataBatch& batch);
DataBatch read_batch_csv(const std::filesystem::path& path);

/// Identification report: slot-named parameters, controller and reference
/// model coefficient lists, zeros, cost, optimizer trace and, when the config
/// carries a plant, J^MR.
Json identification_report(const ExperimentConfig& config, const OciResult& result);

struct RunManifest {
  std::string command;
  Json config;
  std::uint64_t config_hash = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts;
  std::string tool_version = kToolVersion;
  double wall_seconds = 0.0;
  Json extra = Json::object();

  Json to_json() const;
};

}  // namespace ocitune
