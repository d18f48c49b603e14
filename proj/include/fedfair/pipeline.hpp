#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/bias_forge.hpp"
#include "fedfair/fairness.hpp"
#include "fedfair/fl.hpp"
#include "fedfair/ingest.hpp"
#include "fedfair/models.hpp"
#include "fedfair/partition.hpp"
#include "fedfair/tabular.hpp"

namespace fedfair {

// Declarative pipeline configuration (JSON; schema in docs/config.md).
// Parsing validates exhaustively before any work happens: unknown keys,
// missing fields and inconsistent combinations are all ConfigErrors naming
// the offending field.

struct CsvSourceConfig {
  std::filesystem::path path;
  SchemaPtr schema;
};

struct ThresholdSearchConfig {
  enum class DropMode { fixed, auto_attribute, auto_value };
  double threshold = 0.09;
  double step = 0.1;
  double max_fraction = 0.9;
  FairnessLevel level = FairnessLevel::attribute;
  DropMode mode = DropMode::auto_attribute;
  std::string attr;              // fixed / auto_value
  std::int32_t value = 2;        // fixed drop value / auto_attribute drop value
  std::optional<BiasTarget> target;  // fixed mode only
  std::vector<SplitPart> apply_to_splits = {SplitPart::train, SplitPart::validation,
                                            SplitPart::test};

  std::string describe() const;
};

struct FlSection {
  FLConfig config;
  std::optional<FairRegConfig> fair;
  std::optional<FlTuneGrid> tuning;
  int tuning_max_random = 0;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::filesystem::path data_dir;  // input federation for evaluate/simulate/datasheet
  std::string base_task;
  int year = 2018;
  std::string horizon = "1-Year";

  std::optional<SyntheticSpec> synthetic;
  std::optional<CsvSourceConfig> csv;
  std::optional<RemapConfig> remap;
  std::optional<PartitionConfig> partition;
  std::map<std::int32_t, std::string> partition_labels;
  std::optional<PartitionConfig> subsplit;
  SplitFractions fractions{0.8, 0.1, 0.1};

  Metric metric = Metric::dd;
  FairnessLevel level = FairnessLevel::attribute;
  std::vector<std::string> fairness_attrs;  // empty: every sensitive attribute

  std::vector<Modification> modifications;
  std::optional<ThresholdSearchConfig> threshold_search;
  bool device_filter = false;
  std::optional<double> device_test_fraction;

  TrainConfig logistic;
  TrainConfig gbdt;
  bool evaluate_true_labels = true;
  std::vector<std::string> evaluate_models = {"logistic"};
  std::string local_model = "logistic";  // comparison baseline in simulate

  std::optional<FlSection> fl;

  std::string raw_json;  // verbatim config text, embedded in the datasheet
};

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Per-client outcome of the generate-time bias search/filter.
struct ClientBiasOutcome {
  std::optional<BiasTarget> label;
  double fraction = 0;  // achieved drop fraction (0: none applied)
};

struct GenerateResult {
  FederatedDataset fed;
  std::map<ClientId, ClientBiasOutcome> bias_labels;
  DeviceRoles roles;  // empty vectors when no device role split was requested
};

// generate: build the federation (source -> remap -> partition -> splits ->
// modifications / threshold search -> subsplit -> device filter/roles),
// write CSVs + metadata.json + fairness tables + plots + datasheet.
GenerateResult run_generate(const PipelineConfig& config);

// evaluate: true-label and/or local-model fairness tables and plots for a
// federation directory.
void run_evaluate(const PipelineConfig& config, const std::filesystem::path& data_dir);

// simulate: FedAvg (and optionally the fairness-regularized arm), local
// baselines, global evaluation, comparison reports and plots.
void run_simulate(const PipelineConfig& config, const std::filesystem::path& data_dir);

// datasheet: regenerate datasheet.md from metadata.json (+ recomputed
// true-label reports).
void run_datasheet(const std::filesystem::path& data_dir,
                   const std::filesystem::path& out_path);

// Extra per-dataset metadata living beside the GenerationRecord.
struct MetadataExtras {
  std::map<ClientId, ClientBiasOutcome> bias_labels;
  DeviceRoles roles;
};
MetadataExtras read_metadata_extras(const std::filesystem::path& dir);

}  // namespace fedfair
