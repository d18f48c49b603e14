#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedfair/tabular.hpp"

namespace fedfair {

enum class Metric { dd, eod };
enum class FairnessLevel { attribute, value, attribute_value };

const char* to_string(Metric m);
const char* to_string(FairnessLevel l);
Metric metric_from_string(const std::string& s);
FairnessLevel level_from_string(const std::string& s);

// Empirical rates for one sensitive attribute. Every allowed value gets an
// entry; empty groups carry nullopt rates rather than zeros.
struct GroupRate {
  std::int32_t value = 0;
  std::int64_t count = 0;
  std::int64_t positives = 0;              // predictions equal to 1
  std::optional<double> rate;              // P(pred=1 | Z=value)
  // Filled when labels are supplied:
  std::int64_t label_pos = 0, label_neg = 0;
  std::int64_t tp = 0, fp = 0;
  std::optional<double> tpr, fpr;
};

struct GroupRates {
  std::string attr;
  std::vector<GroupRate> groups;
  std::vector<std::string> warnings;
};

GroupRates demographic_parity_rates(const std::vector<int>& preds, const Dataset& dataset,
                                    const std::string& attr);

// Pairwise |rate gap| between two value groups. Computed from integer counts
// (|p_i*c_j - p_j*c_i| / (c_i*c_j)) so results are exactly reproducible.
struct PairDiff {
  std::int32_t zi = 0, zj = 0;
  double diff = 0;
};

// Signed one-vs-rest gap of one value: rate(z) - rate(Z != z).
struct OneVsRest {
  std::int32_t value = 0;
  std::optional<double> diff;
};

struct DdResult {
  double dd = 0;                                  // max over non-empty pairs
  std::pair<std::int32_t, std::int32_t> argmax;   // tie-break: lowest codes
  std::vector<PairDiff> pairs;
  std::vector<OneVsRest> per_value;
  GroupRates rates;
};

// Demographic disparity: the canonical number is the pairwise maximum; the
// signed one-vs-rest gaps feed value-level plots. Throws DataError when
// fewer than two groups are non-empty.
DdResult demographic_disparity(const std::vector<int>& preds, const Dataset& dataset,
                               const std::string& attr);

// One-vs-rest gap of P(pred=1 | Y=y, Z=z) for one (y, z) cell; nullopt when
// either side lacks class-y rows.
struct EodCell {
  int y = 0;
  std::int32_t value = 0;
  std::optional<double> gap;  // absolute
};

struct EodResult {
  double eod = 0;
  std::pair<int, std::int32_t> argmax;  // (y, z); tie-break: lowest z, then y=0
  std::vector<EodCell> cells;
  GroupRates rates;
  std::vector<std::string> warnings;
};

// Equalized odds difference: max over y in {0,1} and values z of the
// one-vs-rest TPR/FPR gap. Undefined cells are excluded with a warning.
EodResult equalized_odds_difference(const std::vector<int>& preds,
                                    const std::vector<int>& labels, const Dataset& dataset,
                                    const std::string& attr);

// Per-attribute section of a FairnessReport. max_value is nullopt when the
// metric is undefined on this attribute (degenerate groups).
struct AttrTable {
  std::string attr;
  std::optional<double> max_value;
  std::optional<std::pair<std::int32_t, std::int32_t>> argmax_pair;  // dd
  std::optional<std::int32_t> argmax_value;  // value identity (one-vs-rest argmax for dd)
  std::optional<std::pair<int, std::int32_t>> argmax_cell;           // eod (y, z)
  std::vector<GroupRate> groups;
  std::vector<PairDiff> pairs;       // dd detail
  std::vector<OneVsRest> per_value;  // dd detail
  std::vector<EodCell> eod_cells;    // eod detail
  std::vector<std::string> warnings;
};

struct FairnessReport {
  Metric metric = Metric::dd;
  FairnessLevel level = FairnessLevel::attribute;
  std::string source;  // "true_labels" or a model id
  std::vector<AttrTable> attributes;

  const AttrTable& attribute(const std::string& name) const;
};

// Fairness table over several attributes. Degenerate attributes become
// flagged undefined rows (warning attached) instead of failing the whole
// table, so small device shards still produce reports.
FairnessReport fairness_table(const Dataset& dataset, const std::vector<int>& preds,
                              const std::vector<std::string>& attrs, Metric metric,
                              FairnessLevel level, const std::string& source);

// True-label variant (pre-model bias, predictions = labels).
FairnessReport fairness_table(const Dataset& dataset, const std::vector<std::string>& attrs,
                              Metric metric, FairnessLevel level);

struct BiasTarget {
  std::string attr;
  std::optional<std::int32_t> value;

  bool operator==(const BiasTarget&) const = default;
  std::string describe() const;
};

// Dual-model benchmark rule: the common argmax attribute (or attribute
// value, at value level) is returned iff every report agrees on the argmax
// and the minimum of their maxima exceeds the threshold.
std::optional<BiasTarget> bias_label(const std::vector<FairnessReport>& reports_by_model,
                                     double threshold);

// Serialization. Detail sections follow the report level: attribute emits
// the maxima, value adds argmax identities, attribute_value adds the full
// per-value / per-pair / per-cell tables.
nlohmann::ordered_json report_to_json(const FairnessReport& report);
void reports_to_csv(const std::vector<std::pair<ClientId, FairnessReport>>& reports,
                    const std::filesystem::path& path);

}  // namespace fedfair
