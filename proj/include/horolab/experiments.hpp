#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "horolab/models.hpp"

namespace horolab {

inline constexpr const char* kLibraryVersion = "0.1.0";

inline const std::vector<std::string> kExperiments{
    "oracle-check", "riccati",        "boundary-products", "quasimetric",    "ahlfors",
    "derivative",   "cocycle-growth", "holder",            "symmetry-defect"};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero means "experiment default" for n, p and translation_length; the resolved values
// are what gets echoed.
struct ExperimentConfig {
  std::string experiment;
  ModelDescriptor model;
  double epsilon = 1.0;
  double p = 0.0;  // 0: 2 / epsilon
  std::uint64_t seed = 7;
  long n = 0;
  int kmax = 8;
  double translation_length = 0.0;  // 0: 1 on the constant model, 3 on the perturbed one
  double R = 15.0;
  double T = 20.0;
  double tol = 1e-10;
  std::string out = "horolab-out";
};

// Model descriptor JSON: {"kind": "constant"|"perturbed_axial", "a", "b", "amplitude",
// "support_radius"}; missing fields take the defaults of the kind.
nlohmann::json model_to_json(const ModelDescriptor& d);
ModelDescriptor model_from_json(const nlohmann::json& j);
ModelDescriptor default_model(const std::string& kind);

// Applies the keys of j on top of base. Unknown keys and wrong types throw ConfigError.
ExperimentConfig apply_config(ExperimentConfig base, const nlohmann::json& j);
// Fills experiment-dependent defaults and checks ranges.
ExperimentConfig resolve_config(ExperimentConfig c);
nlohmann::json config_to_json(const ExperimentConfig& c);

struct Metric {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string comparison;  // "<=", ">=", "<", ">", "flag"
  bool pass = false;
  bool warn_only = false;  // reported, but does not fail the run
};

struct SeriesFile {
  std::string name;  // written as <name>.csv
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<Metric> metrics;
  nlohmann::json details = nlohmann::json::object();
  std::vector<SeriesFile> series;
  std::vector<std::uint64_t> seeds;
  double wall_time = 0.0;
  std::string failure;  // numerical failure outside the metrics

  bool pass() const;
  nlohmann::json to_json() const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);
// report.json plus one CSV per series and a two-column <name>.xy.csv for plotting.
void write_report(const ExperimentReport& r);

std::string format_csv_number(double v);

}  // namespace horolab
