#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fedfair/version.hpp"

namespace fedfair {

using ClientId = std::string;

enum class ColumnKind { numeric, categorical };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // Categorical only: the closed set of legal codes, kept sorted.
  std::vector<std::int32_t> allowed_values;

  bool operator==(const ColumnSchema&) const = default;
};

struct Schema {
  std::vector<ColumnSchema> columns;
  std::string label_name = "LABEL";
  // Names of the categorical columns fairness is measured against.
  std::vector<std::string> sensitive;

  int index_of(const std::string& name) const;
  const ColumnSchema& column(const std::string& name) const;
  bool is_sensitive(const std::string& name) const;

  bool operator==(const Schema&) const = default;
};

using SchemaPtr = std::shared_ptr<const Schema>;

enum class SplitPart { train, validation, test };

const char* to_string(SplitPart part);
SplitPart split_part_from_string(const std::string& s);

enum class ModKind { flip, drop };

// One bias-exacerbation directive. Applied by the bias_forge operations.
struct Modification {
  ModKind kind = ModKind::drop;
  std::string attr;
  std::int32_t value = 0;
  // Optional intersectional narrowing: only rows that also match this.
  std::optional<std::pair<std::string, std::int32_t>> secondary;
  double fraction = 0.0;
  std::vector<SplitPart> splits = {SplitPart::train, SplitPart::validation, SplitPart::test};
  std::uint64_t seed = 0;
  // Target client ids; empty means every client.
  std::vector<ClientId> clients;

  bool operator==(const Modification&) const = default;
};

struct SplitFractions {
  double train = 1.0;
  double validation = 0.0;
  double test = 0.0;

  bool operator==(const SplitFractions&) const = default;
};

// Everything needed to regenerate a federation, persisted in metadata.json
// and rendered verbatim in the datasheet.
struct GenerationRecord {
  std::string base_task = "synthetic";
  int year = 2018;
  std::string horizon = "1-Year";
  std::vector<std::string> states;
  std::string partitioner = "none";
  SplitFractions split_fractions;
  std::uint64_t seed = 0;
  std::vector<Modification> modifications;
  std::string threshold_rule;   // empty renders as "none"
  std::string device_sampling;  // empty renders as "none"
  std::string config_json;      // verbatim pipeline config when CLI-driven
  std::string library_version = kVersion;

  bool operator==(const GenerationRecord&) const = default;
};

// Immutable columnar table. Numeric columns hold doubles, categorical
// columns hold integer codes; the binary label lives outside the feature
// columns. Row identity (original ordinal) survives splits and partitions
// so disjointness stays checkable.
class Dataset {
 public:
  using NumericColumn = std::vector<double>;
  using CategoricalColumn = std::vector<std::int32_t>;
  using ColumnData = std::variant<NumericColumn, CategoricalColumn>;

  Dataset() = default;
  Dataset(SchemaPtr schema, std::vector<ColumnData> columns, std::vector<std::int8_t> labels,
          std::vector<std::int64_t> row_ids);

  // Empty dataset over a schema.
  static Dataset empty(SchemaPtr schema);

  std::int64_t n() const { return static_cast<std::int64_t>(labels_.size()); }
  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }

  const std::vector<std::int8_t>& labels() const { return labels_; }
  int label(std::int64_t row) const { return labels_[static_cast<std::size_t>(row)]; }
  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }

  const NumericColumn& numeric(int col) const;
  const CategoricalColumn& categorical(int col) const;
  const CategoricalColumn& categorical(const std::string& name) const;

  // New dataset with the given rows, in the given order. Shares the schema.
  Dataset take(const std::vector<std::int64_t>& rows) const;
  // Same rows, new labels (bias_forge flip path).
  Dataset with_labels(std::vector<std::int8_t> labels) const;

 private:
  SchemaPtr schema_;
  std::vector<ColumnData> columns_;
  std::vector<std::int8_t> labels_;
  std::vector<std::int64_t> row_ids_;
};

// Concatenation in argument order. All parts must share one schema.
Dataset concat(const std::vector<const Dataset*>& parts);

struct SplitSet {
  Dataset train;
  Dataset validation;
  Dataset test;

  const Dataset& part(SplitPart p) const;
  Dataset& part(SplitPart p);
};

// Ordered map ClientId -> SplitSet. Order is generation order and is the
// ordinal used for per-client seed derivation.
class FederatedDataset {
 public:
  GenerationRecord metadata;

  void add_client(ClientId id, SplitSet splits);

  std::size_t size() const { return entries_.size(); }
  const ClientId& client_id(std::size_t i) const { return entries_[i].first; }
  const SplitSet& splits(std::size_t i) const { return entries_[i].second; }
  const SplitSet& splits(const ClientId& id) const;
  bool has_client(const ClientId& id) const;
  std::vector<ClientId> client_ids() const;

 private:
  std::vector<std::pair<ClientId, SplitSet>> entries_;
};

struct Violation {
  std::int64_t row = -1;  // -1: schema-level problem
  std::string column;
  std::string message;
};

// Full invariant scan. Violations are data, not exceptions: an empty result
// means the dataset conforms to its schema.
std::vector<Violation> validate(const Dataset& dataset);

// Row indices (ascending) where sensitive column `attr` equals `value`.
// Unknown attr/value is a precondition error.
std::vector<std::int64_t> group_index(const Dataset& dataset, const std::string& attr,
                                      std::int32_t value);

struct IntersectionResult {
  Dataset data;                                    // input plus the composite column
  std::string column;                              // composite column name
  std::vector<std::vector<std::int32_t>> combos;   // code -> value tuple, lexicographic
};

// Derived categorical column over the Cartesian product of the observed
// per-attribute value sets. Codes are assigned 0..M-1 in lexicographic
// order (attr order, then value order); the column is registered as
// sensitive so it can be used as a single composite attribute.
IntersectionResult intersect_groups(const Dataset& dataset,
                                    const std::vector<std::string>& attrs);

}  // namespace fedfair
