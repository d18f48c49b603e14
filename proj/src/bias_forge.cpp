#include "fedfair/bias_forge.hpp"

#include <algorithm>
#include <cmath>

#include "fedfair/error.hpp"
#include "fedfair/partition.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

namespace {

void check_target(const Dataset& dataset, const Modification& mod) {
  const Schema& schema = dataset.schema();
  if (!(mod.fraction >= 0 && mod.fraction <= 1))
    throw ConfigError("modification fraction must be in [0, 1]");
  if (!schema.is_sensitive(mod.attr))
    throw ConfigError("modification target '" + mod.attr + "' is not a sensitive attribute");
  const ColumnSchema& col = schema.column(mod.attr);
  if (!std::binary_search(col.allowed_values.begin(), col.allowed_values.end(), mod.value))
    throw ConfigError("modification value " + std::to_string(mod.value) + " not allowed for '" +
                      mod.attr + "'");
  if (mod.secondary) {
    if (mod.secondary->first == mod.attr)
      throw ConfigError("secondary target must name a different attribute");
    if (!schema.is_sensitive(mod.secondary->first))
      throw ConfigError("secondary target '" + mod.secondary->first +
                        "' is not a sensitive attribute");
    const ColumnSchema& sec = schema.column(mod.secondary->first);
    if (!std::binary_search(sec.allowed_values.begin(), sec.allowed_values.end(),
                            mod.secondary->second))
      throw ConfigError("secondary value " + std::to_string(mod.secondary->second) +
                        " not allowed for '" + mod.secondary->first + "'");
  }
}

// Negative-label rows matching the (possibly intersectional) target.
std::vector<std::int64_t> eligible_rows(const Dataset& dataset, const Modification& mod) {
  const auto& codes = dataset.categorical(mod.attr);
  const Dataset::CategoricalColumn* sec =
      mod.secondary ? &dataset.categorical(mod.secondary->first) : nullptr;
  std::vector<std::int64_t> out;
  for (std::int64_t r = 0; r < dataset.n(); ++r) {
    if (dataset.label(r) != 0) continue;
    if (codes[static_cast<std::size_t>(r)] != mod.value) continue;
    if (sec && (*sec)[static_cast<std::size_t>(r)] != mod.secondary->second) continue;
    out.push_back(r);
  }
  return out;
}

// First round(fraction * |eligible|) rows of a seeded shuffle. Using a
// shuffle prefix makes selections at growing fractions nested.
std::vector<std::int64_t> select_rows(std::vector<std::int64_t> eligible, double fraction,
                                      std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(eligible);
  const auto k = static_cast<std::size_t>(
      round_half_away(fraction * static_cast<double>(eligible.size())));
  eligible.resize(std::min(k, eligible.size()));
  return eligible;
}

void warn_no_eligible(const Modification& mod, std::vector<std::string>* warnings) {
  if (!warnings) return;
  std::string target = mod.attr + "=" + std::to_string(mod.value);
  if (mod.secondary)
    target += " & " + mod.secondary->first + "=" + std::to_string(mod.secondary->second);
  warnings->push_back("no eligible negative rows for target " + target + "; no-op");
}

}  // namespace

Dataset flip_negative_labels(const Dataset& dataset, const Modification& mod,
                             std::vector<std::string>* warnings) {
  if (mod.kind != ModKind::flip) throw ConfigError("flip_negative_labels: modification kind is not flip");
  check_target(dataset, mod);
  auto eligible = eligible_rows(dataset, mod);
  if (eligible.empty()) {
    if (mod.fraction > 0) warn_no_eligible(mod, warnings);
    return dataset;
  }
  auto chosen = select_rows(std::move(eligible), mod.fraction, mod.seed);
  std::vector<std::int8_t> labels = dataset.labels();
  for (auto r : chosen) labels[static_cast<std::size_t>(r)] = 1;
  return dataset.with_labels(std::move(labels));
}

Dataset drop_negative_rows(const Dataset& dataset, const Modification& mod,
                           std::vector<std::string>* warnings) {
  if (mod.kind != ModKind::drop) throw ConfigError("drop_negative_rows: modification kind is not drop");
  check_target(dataset, mod);
  auto eligible = eligible_rows(dataset, mod);
  if (eligible.empty()) {
    if (mod.fraction > 0) warn_no_eligible(mod, warnings);
    return dataset;
  }
  auto chosen = select_rows(std::move(eligible), mod.fraction, mod.seed);
  std::vector<bool> removed(static_cast<std::size_t>(dataset.n()), false);
  for (auto r : chosen) removed[static_cast<std::size_t>(r)] = true;
  std::vector<std::int64_t> keep;
  keep.reserve(static_cast<std::size_t>(dataset.n()) - chosen.size());
  for (std::int64_t r = 0; r < dataset.n(); ++r)
    if (!removed[static_cast<std::size_t>(r)]) keep.push_back(r);
  return dataset.take(keep);
}

FederatedDataset apply_modifications(const FederatedDataset& fed,
                                     const std::vector<Modification>& mods,
                                     std::vector<std::string>* warnings) {
  for (const auto& mod : mods)
    for (const auto& client : mod.clients)
      if (!fed.has_client(client))
        throw ConfigError("modification targets unknown client '" + client + "'");

  FederatedDataset out;
  out.metadata = fed.metadata;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const ClientId& id = fed.client_id(i);
    SplitSet splits = fed.splits(i);
    for (const auto& mod : mods) {
      const bool targeted =
          mod.clients.empty() ||
          std::find(mod.clients.begin(), mod.clients.end(), id) != mod.clients.end();
      if (!targeted) continue;
      for (auto part : mod.splits) {
        Modification local = mod;
        local.seed = derive_seed(mod.seed, std::string("mod:") + id + ":" + to_string(part));
        Dataset& target = splits.part(part);
        target = mod.kind == ModKind::flip ? flip_negative_labels(target, local, warnings)
                                           : drop_negative_rows(target, local, warnings);
      }
    }
    out.add_client(id, std::move(splits));
  }
  for (const auto& mod : mods) out.metadata.modifications.push_back(mod);
  return out;
}

ExacerbationResult exacerbate_to_threshold(const SplitSet& client_split,
                                           const std::string& drop_attr, std::int32_t drop_value,
                                           const BiasTarget& target, double threshold,
                                           double step, double max_fraction,
                                           const std::vector<NamedTrainer>& trainers,
                                           FairnessLevel level, std::uint64_t seed) {
  if (!(threshold > 0)) throw ConfigError("exacerbate_to_threshold: threshold must be > 0");
  if (!(step > 0 && step <= max_fraction && max_fraction <= 1))
    throw ConfigError("exacerbate_to_threshold: need 0 < step <= max_fraction <= 1");
  if (trainers.size() < 2)
    throw ConfigError("exacerbate_to_threshold: the bias rule needs at least two trainers");

  const std::vector<std::string> attrs = client_split.train.schema().sensitive;

  ExacerbationResult best;
  double best_score = -1;
  for (int k = 0;; ++k) {
    const double fraction = k * step;
    if (fraction > max_fraction + 1e-12) break;

    Dataset train = client_split.train;
    if (fraction > 0) {
      Modification mod;
      mod.kind = ModKind::drop;
      mod.attr = drop_attr;
      mod.value = drop_value;
      mod.fraction = fraction;
      mod.seed = derive_seed(seed, "exacerbate_drop");
      train = drop_negative_rows(train, mod);
    }

    std::vector<FairnessReport> reports;
    reports.reserve(trainers.size());
    for (const auto& trainer : trainers) {
      auto preds = trainer.fit_predict(train, client_split.test);
      reports.push_back(
          fairness_table(client_split.test, preds, attrs, Metric::dd, level, trainer.name));
    }
    auto label = bias_label(reports, threshold);

    // Best-seen trial: largest min-over-models maximum metric value.
    double min_of_max = -1;
    for (const auto& report : reports) {
      double mx = -1;
      for (const auto& a : report.attributes)
        if (a.max_value && *a.max_value > mx) mx = *a.max_value;
      min_of_max = min_of_max < 0 ? mx : std::min(min_of_max, mx);
    }
    if (min_of_max > best_score) {
      best_score = min_of_max;
      best.fraction = fraction;
      best.train = train;
      best.reports = reports;
      best.label = label;
    }

    if (label && *label == target) {
      ExacerbationResult out;
      out.success = true;
      out.fraction = fraction;
      out.train = std::move(train);
      out.reports = std::move(reports);
      out.label = label;
      return out;
    }
  }
  best.success = false;
  return best;
}

}  // namespace fedfair
