#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/fairness.hpp"
#include "fedfair/fl.hpp"
#include "fedfair/tabular.hpp"

namespace fedfair {

// ---------------------------------------------------------------------------
// Per-client statistics table
// ---------------------------------------------------------------------------

struct ClientStatsRow {
  ClientId client;
  std::int64_t n_train = 0, n_validation = 0, n_test = 0;
  // True-label DD per sensitive attribute over the client's full data.
  std::vector<std::pair<std::string, std::optional<double>>> label_dd;
  // Filled when local evaluations are supplied.
  std::optional<double> local_accuracy;
  std::vector<std::pair<std::string, std::optional<double>>> local_dd;
};

struct ClientStatsTable {
  std::vector<std::string> attrs;
  std::vector<ClientStatsRow> rows;

  ordered_json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

ClientStatsTable client_stats(const FederatedDataset& fed,
                              const std::map<ClientId, ClientEval>* local_evals = nullptr);

// ---------------------------------------------------------------------------
// Local-vs-global comparison
// ---------------------------------------------------------------------------

struct CompareEntry {
  ClientId client;
  std::string attr;
  std::optional<double> local_value;
  std::optional<double> global_value;
  std::optional<double> delta;  // global - local, exactly
  std::optional<std::int32_t> argmax_before, argmax_after;
  std::optional<BiasTarget> biased_toward;
};

struct ComparisonReport {
  Metric metric = Metric::dd;
  FairnessLevel level = FairnessLevel::attribute;
  std::vector<std::string> attrs;
  std::vector<CompareEntry> entries;  // one per client per attr, client-major
  std::map<ClientId, std::pair<double, double>> accuracies;  // (local, global)

  ordered_json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

// Pairs each client's local-model report with the global-model report.
// Both maps must cover the same clients; bias labels (when known) color the
// plots, clients without one render neutral.
ComparisonReport compare(const std::map<ClientId, ClientEval>& local_evals,
                         const std::map<ClientId, ClientEval>& global_evals,
                         const std::map<ClientId, std::optional<BiasTarget>>& bias_labels = {});

// ---------------------------------------------------------------------------
// SVG plots (hand-rolled; deterministic bytes for fixed input)
// ---------------------------------------------------------------------------

enum class PlotKind { scatter, bars, value_shift };

// scatter: x = global metric, y = local metric, unit diagonal, one point per
// (client, attr). bars: per-client grouped delta bars. value_shift: argmax
// value movement for one attribute (the first, unless specified).
void emit_svg(const ComparisonReport& report, PlotKind kind, const std::filesystem::path& path,
              const std::string& value_shift_attr = "");

// Generation-time plot: per-client grouped bars of report maxima (e.g.
// true-label DD per attribute).
void emit_report_bars_svg(const std::vector<std::pair<ClientId, FairnessReport>>& reports,
                          const std::filesystem::path& path, const std::string& title);

// ---------------------------------------------------------------------------
// Datasheet
// ---------------------------------------------------------------------------

// Renders the versioned markdown template with the record's fields and a
// fairness summary built from the per-client reports. Unknown template keys
// and unused record fields are errors, which keeps template and record in
// sync. Byte-identical for equal inputs.
std::string generate_datasheet(const GenerationRecord& record,
                               const std::vector<std::pair<ClientId, FairnessReport>>& reports);

}  // namespace fedfair
