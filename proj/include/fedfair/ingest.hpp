#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedfair/tabular.hpp"

namespace fedfair {

using ordered_json = nlohmann::ordered_json;

// Value remapping for one categorical column. The map plus the optional
// default bucket must cover every observed code.
struct ColumnRemap {
  std::map<std::int32_t, std::int32_t> map;
  std::optional<std::int32_t> default_code;
};

struct RemapConfig {
  std::map<std::string, ColumnRemap> columns;
  std::optional<ColumnRemap> label;  // remapped labels must stay binary
};

// ---- synthetic federation spec (test fixture standing in for ACS data) ----

// Per-client group layout of one sensitive attribute: value shares plus an
// additive shift on the positive-label probability.
struct SyntheticGroupSpec {
  std::vector<double> shares;
  std::vector<double> rate_shifts;
};

struct SyntheticAttrSpec {
  std::string name;
  std::vector<std::int32_t> values;
  SyntheticGroupSpec dflt;
  std::map<int, SyntheticGroupSpec> per_client;  // client ordinal -> override

  const SyntheticGroupSpec& for_client(int client) const;
};

struct SyntheticSpec {
  int n_clients = 1;
  int rows_min = 1000;
  int rows_max = 1000;
  std::vector<SyntheticAttrSpec> attrs;
  double base_rate = 0.5;                    // P(Y=1) before group shifts
  std::map<int, double> base_rate_per_client;
  int feature_dim = 4;
  double feature_signal = 1.0;               // numeric feature mean at y=1 is +signal, y=0 is -signal
  SplitFractions fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;

  void check() const;  // throws ConfigError on violated invariants
  double client_base_rate(int client) const;
};

// ---- operations ----

// Loads a CSV whose header is exactly the schema's columns plus the label
// column, in any order. Rows keep file order; row ids are file ordinals.
Dataset load_csv(const std::filesystem::path& path, SchemaPtr schema);

// Canonical serialization: schema-order columns then the label, LF endings,
// shortest round-trip numerals. write-then-load is cell-exact.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

Dataset apply_remap(const Dataset& dataset, const RemapConfig& remap);

// Deterministic per seed. Group values are allocated by largest remainder
// (so empirical shares match the spec up to rounding), labels are Bernoulli
// in the row's shifted rate, numeric features are label-informative
// Gaussians. Sensitive attributes are sampled independently of each other.
FederatedDataset generate_synthetic(const SyntheticSpec& spec);

// One CSV per client per split plus metadata.json with the full
// GenerationRecord. Layout documented in docs/formats.md.
void write_federation(const FederatedDataset& fed, const std::filesystem::path& dir);

FederatedDataset read_federation(const std::filesystem::path& dir);

// ---- JSON (de)serialization used by metadata.json and reports ----

ordered_json schema_to_json(const Schema& schema);
Schema schema_from_json(const ordered_json& j);
ordered_json modification_to_json(const Modification& m);
Modification modification_from_json(const ordered_json& j);
ordered_json record_to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const ordered_json& j);

// ---- shipped default schemas (ACS code books evolve; override via config) ----

SchemaPtr acs_income_schema();
SchemaPtr acs_employment_schema();

// Largest-remainder apportionment of n into integer counts proportional to
// shares. Ties go to the lowest index.
std::vector<std::int64_t> largest_remainder_counts(const std::vector<double>& shares,
                                                   std::int64_t n);

}  // namespace fedfair
