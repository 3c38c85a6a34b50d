#pragma once

// JSON configs and reports, CSV series, SVG charts and run manifests.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "rwlab/error.hpp"
#include "rwlab/harness.hpp"

namespace rwlab {

using Json = nlohmann::json;

/// Schema violation; `field` is a JSON pointer such as "/t_grid/2".
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& what)
      : InvalidArgument(field.empty() ? what : "field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Known experiment kinds.
const std::vector<std::string>& experiment_kinds();

/// Relative "pair_file" entries resolve against `base_dir`.
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
/// Reads and parses a file; JSON syntax errors report line and column.
ExperimentConfig load_config(const std::filesystem::path& file);
Json parse_json_text(const std::string& text);

/// Canonical, self-contained form (toral pairs inline).
Json config_to_json(const ExperimentConfig& c);
std::string canonical_dump(const Json& j);
std::string sha256_hex(const std::string& bytes);

Json law_to_json(const IncrementLaw& law);
IncrementLaw law_from_json(const Json& j, const std::string& at = "/walk");
Json scenery_to_json(const SceneryModel& s);
SceneryModel scenery_from_json(const Json& j, const std::filesystem::path& base_dir = {}, const std::string& at = "/scenery");
Json pair_to_json(const MatrixPair& p);
MatrixPair pair_from_json(const Json& j, const std::string& at = "/pair");

// ---------------------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// Line chart as standalone SVG markup.
std::string svg_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_x = false);

/// Header plus rows; doubles printed with 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  CsvTable& row(std::vector<std::string> cells);
  std::string str() const;
  static std::string num(double x);
  static std::string num(std::uint64_t x) { return std::to_string(x); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct ExperimentOutput {
  Json payload;  ///< deterministic function of the config
  bool pass = false;
  std::vector<std::pair<std::string, std::string>> csv;  ///< (file name, content)
  std::vector<std::pair<std::string, std::string>> svg;
};

ExperimentOutput run_experiment(const ExperimentConfig& c);

Json to_json(const FcltReport& r);
Json to_json(const LlnTable& t);
Json to_json(const OrthogonalityTable& t);
Json to_json(const NewmanWrightReport& r);
Json to_json(const MoriczReport& r);
Json to_json(const TightnessTable& t);
Json to_json(const ErdosTaylorTable& t);
Json to_json(const TransientReport& r);

// ---------------------------------------------------------------------------

struct CatalogEntry {
  std::string id;
  std::string experiment;
  std::string anchor;   ///< the statement the experiment exercises
  std::string fixture;  ///< bundled config, relative to fixtures/configs
  std::string budget;   ///< documented single-core runtime
};

const std::vector<CatalogEntry>& experiment_catalog();
Json catalog_to_json();
std::vector<CatalogEntry> catalog_from_json(const Json& j);

/// Writes report.json, CSV and SVG files and manifest.json into `out_dir`.
/// Returns the manifest.
Json write_run(const ExperimentConfig& c, const ExperimentOutput& out, const std::filesystem::path& out_dir,
               const std::string& started_utc, const std::string& finished_utc);

std::string utc_now();

}  // namespace rwlab
