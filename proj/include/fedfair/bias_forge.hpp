#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/fairness.hpp"
#include "fedfair/tabular.hpp"

namespace fedfair {

// Flips label 0 -> 1 on exactly round(fraction * |eligible|) rows, where the
// eligible set is the negative-label rows matching the modification target
// (and its secondary target, when present). Selection is uniform in the
// modification seed; row order and count are unchanged.
Dataset flip_negative_labels(const Dataset& dataset, const Modification& mod,
                             std::vector<std::string>* warnings = nullptr);

// Removes exactly round(fraction * |eligible|) eligible rows; everything
// else is untouched and keeps its order.
Dataset drop_negative_rows(const Dataset& dataset, const Modification& mod,
                           std::vector<std::string>* warnings = nullptr);

// Applies modifications in list order to the targeted clients/splits and
// appends them to the federation's GenerationRecord. Selection seeds are
// derived per (client, split) from the modification seed.
FederatedDataset apply_modifications(const FederatedDataset& fed,
                                     const std::vector<Modification>& mods,
                                     std::vector<std::string>* warnings = nullptr);

// A model the threshold search can train: fit on `train`, return hard
// predictions on `eval`. The name becomes the report source.
struct NamedTrainer {
  std::string name;
  std::function<std::vector<int>(const Dataset& train, const Dataset& eval)> fit_predict;
};

struct ExacerbationResult {
  bool success = false;
  double fraction = 0;                   // achieved fraction, or best-seen on failure
  Dataset train;                         // modified train split at that fraction
  std::vector<FairnessReport> reports;   // one per trainer at that fraction
  std::optional<BiasTarget> label;       // bias_label outcome at that fraction
};

// Iterates drop fractions {0, step, 2*step, ..., max_fraction} on the train
// split; after each, trains every trainer and runs the dual-model rule on
// the test split. Returns the first fraction whose bias_label equals
// `target`. Failure is a value carrying the best-seen trial (the fraction
// with the largest min-over-models maximum).
ExacerbationResult exacerbate_to_threshold(const SplitSet& client_split,
                                           const std::string& drop_attr, std::int32_t drop_value,
                                           const BiasTarget& target, double threshold,
                                           double step, double max_fraction,
                                           const std::vector<NamedTrainer>& trainers,
                                           FairnessLevel level, std::uint64_t seed);

}  // namespace fedfair
