#include "fedfair/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fedfair/csv.hpp"
#include "fedfair/error.hpp"
#include "fedfair/report.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

using json = ordered_json;

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
}

void reject_unknown_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
T require(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ConfigError("config: missing '" + where + "." + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for '" + where + "." + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const std::string& where, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for '" + where + "." + key + "'");
  }
}

SyntheticGroupSpec parse_group_spec(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where, {"shares", "rate_shifts"});
  SyntheticGroupSpec g;
  g.shares = require<std::vector<double>>(j, where, "shares");
  g.rate_shifts = require<std::vector<double>>(j, where, "rate_shifts");
  return g;
}

SyntheticSpec parse_synthetic(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where,
                      {"n_clients", "rows_per_client", "attrs", "base_rate",
                       "base_rate_per_client", "feature_dim", "feature_signal"});
  SyntheticSpec spec;
  spec.n_clients = require<int>(j, where, "n_clients");
  const auto rows = require<std::vector<int>>(j, where, "rows_per_client");
  if (rows.size() != 2) throw ConfigError("config: '" + where + ".rows_per_client' must be [min, max]");
  spec.rows_min = rows[0];
  spec.rows_max = rows[1];
  spec.base_rate = get_or<double>(j, where, "base_rate", 0.5);
  spec.feature_dim = get_or<int>(j, where, "feature_dim", 4);
  spec.feature_signal = get_or<double>(j, where, "feature_signal", 1.0);
  if (j.contains("base_rate_per_client")) {
    for (const auto& [key, value] : j.at("base_rate_per_client").items())
      spec.base_rate_per_client[std::stoi(key)] = value.get<double>();
  }
  if (!j.contains("attrs")) throw ConfigError("config: missing '" + where + ".attrs'");
  for (const auto& aj : j.at("attrs")) {
    const std::string attr_where = where + ".attrs[]";
    expect_object(aj, attr_where);
    reject_unknown_keys(aj, attr_where, {"name", "values", "shares", "rate_shifts", "per_client"});
    SyntheticAttrSpec attr;
    attr.name = require<std::string>(aj, attr_where, "name");
    attr.values = require<std::vector<std::int32_t>>(aj, attr_where, "values");
    attr.dflt.shares = require<std::vector<double>>(aj, attr_where, "shares");
    attr.dflt.rate_shifts = require<std::vector<double>>(aj, attr_where, "rate_shifts");
    if (aj.contains("per_client")) {
      for (const auto& [key, value] : aj.at("per_client").items())
        attr.per_client[std::stoi(key)] = parse_group_spec(value, attr_where + ".per_client");
    }
    spec.attrs.push_back(std::move(attr));
  }
  return spec;
}

SchemaPtr parse_schema_ref(const json& j, const std::string& where) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "acs_income") return acs_income_schema();
    if (name == "acs_employment") return acs_employment_schema();
    throw ConfigError("config: unknown schema name '" + name + "' at " + where);
  }
  expect_object(j, where);
  return std::make_shared<Schema>(schema_from_json(j));
}

ColumnRemap parse_column_remap(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where, {"map", "default"});
  ColumnRemap rule;
  if (j.contains("map")) {
    for (const auto& [key, value] : j.at("map").items())
      rule.map[std::stoi(key)] = value.get<std::int32_t>();
  }
  if (j.contains("default")) rule.default_code = j.at("default").get<std::int32_t>();
  return rule;
}

RemapConfig parse_remap(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where, {"columns", "label"});
  RemapConfig remap;
  if (j.contains("columns")) {
    for (const auto& [name, rule] : j.at("columns").items())
      remap.columns[name] = parse_column_remap(rule, where + ".columns." + name);
  }
  if (j.contains("label")) remap.label = parse_column_remap(j.at("label"), where + ".label");
  return remap;
}

PartitionConfig parse_partition(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where, {"strategy", "column", "n", "alpha", "min_partition_size"});
  PartitionConfig cfg;
  const std::string strategy = require<std::string>(j, where, "strategy");
  if (strategy == "natural_key") {
    cfg.strategy = PartitionStrategy::natural_key;
    cfg.key_column = require<std::string>(j, where, "column");
  } else if (strategy == "iid") {
    cfg.strategy = PartitionStrategy::iid;
    cfg.n = require<int>(j, where, "n");
  } else if (strategy == "dirichlet") {
    cfg.strategy = PartitionStrategy::dirichlet;
    cfg.n = require<int>(j, where, "n");
    cfg.alpha = require<double>(j, where, "alpha");
    cfg.min_partition_size = get_or<std::int64_t>(j, where, "min_partition_size", 1);
  } else if (strategy == "linear") {
    cfg.strategy = PartitionStrategy::linear;
    cfg.n = require<int>(j, where, "n");
  } else {
    throw ConfigError("config: unknown partition strategy '" + strategy + "'");
  }
  return cfg;
}

SplitFractions parse_fractions(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where, {"train", "validation", "test"});
  SplitFractions f;
  f.train = require<double>(j, where, "train");
  f.validation = require<double>(j, where, "validation");
  f.test = require<double>(j, where, "test");
  if (f.train < 0 || f.validation < 0 || f.test < 0 ||
      std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw ConfigError("config: '" + where + "' fractions must be >= 0 and sum to 1");
  return f;
}

Modification parse_modification(const json& j, const std::string& where, std::uint64_t seed,
                                std::size_t index) {
  expect_object(j, where);
  reject_unknown_keys(j, where,
                      {"kind", "attr", "value", "secondary", "fraction", "splits", "seed",
                       "clients"});
  Modification m;
  const std::string kind = require<std::string>(j, where, "kind");
  if (kind == "flip")
    m.kind = ModKind::flip;
  else if (kind == "drop")
    m.kind = ModKind::drop;
  else
    throw ConfigError("config: '" + where + ".kind' must be flip or drop");
  m.attr = require<std::string>(j, where, "attr");
  m.value = require<std::int32_t>(j, where, "value");
  if (j.contains("secondary") && !j.at("secondary").is_null()) {
    const json& s = j.at("secondary");
    reject_unknown_keys(s, where + ".secondary", {"attr", "value"});
    m.secondary = {require<std::string>(s, where + ".secondary", "attr"),
                   require<std::int32_t>(s, where + ".secondary", "value")};
  }
  m.fraction = require<double>(j, where, "fraction");
  if (!(m.fraction >= 0 && m.fraction <= 1))
    throw ConfigError("config: '" + where + ".fraction' must be in [0, 1]");
  if (j.contains("splits")) {
    m.splits.clear();
    for (const auto& s : j.at("splits")) m.splits.push_back(split_part_from_string(s.get<std::string>()));
    if (m.splits.empty()) throw ConfigError("config: '" + where + ".splits' must be non-empty");
  }
  m.seed = get_or<std::uint64_t>(j, where, "seed", derive_seed(seed, "modification", index));
  m.clients = get_or<std::vector<std::string>>(j, where, "clients", {});
  return m;
}

ThresholdSearchConfig parse_threshold_search(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where,
                      {"threshold", "step", "max_fraction", "level", "drop", "apply_to_splits"});
  ThresholdSearchConfig cfg;
  cfg.threshold = get_or<double>(j, where, "threshold", 0.09);
  cfg.step = get_or<double>(j, where, "step", 0.1);
  cfg.max_fraction = get_or<double>(j, where, "max_fraction", 0.9);
  cfg.level = level_from_string(get_or<std::string>(j, where, "level", "attribute"));
  if (cfg.level == FairnessLevel::attribute_value)
    throw ConfigError("config: '" + where + ".level' must be attribute or value");

  if (!j.contains("drop")) throw ConfigError("config: missing '" + where + ".drop'");
  const json& d = j.at("drop");
  expect_object(d, where + ".drop");
  reject_unknown_keys(d, where + ".drop", {"mode", "attr", "value", "target"});
  const std::string mode = require<std::string>(d, where + ".drop", "mode");
  if (mode == "fixed") {
    cfg.mode = ThresholdSearchConfig::DropMode::fixed;
    cfg.attr = require<std::string>(d, where + ".drop", "attr");
    cfg.value = require<std::int32_t>(d, where + ".drop", "value");
    if (!d.contains("target")) throw ConfigError("config: missing '" + where + ".drop.target'");
    const json& t = d.at("target");
    reject_unknown_keys(t, where + ".drop.target", {"attr", "value"});
    BiasTarget target;
    target.attr = require<std::string>(t, where + ".drop.target", "attr");
    if (t.contains("value")) target.value = t.at("value").get<std::int32_t>();
    const bool needs_value = cfg.level == FairnessLevel::value;
    if (needs_value != target.value.has_value())
      throw ConfigError("config: '" + where + ".drop.target' must carry a value iff level=value");
    cfg.target = target;
  } else if (mode == "auto_attribute") {
    cfg.mode = ThresholdSearchConfig::DropMode::auto_attribute;
    cfg.value = get_or<std::int32_t>(d, where + ".drop", "value", 2);
    if (cfg.level != FairnessLevel::attribute)
      throw ConfigError("config: drop mode auto_attribute requires level=attribute");
  } else if (mode == "auto_value") {
    cfg.mode = ThresholdSearchConfig::DropMode::auto_value;
    cfg.attr = require<std::string>(d, where + ".drop", "attr");
    if (cfg.level != FairnessLevel::value)
      throw ConfigError("config: drop mode auto_value requires level=value");
  } else {
    throw ConfigError("config: '" + where + ".drop.mode' must be fixed, auto_attribute or auto_value");
  }

  if (j.contains("apply_to_splits")) {
    cfg.apply_to_splits.clear();
    for (const auto& s : j.at("apply_to_splits"))
      cfg.apply_to_splits.push_back(split_part_from_string(s.get<std::string>()));
    if (cfg.apply_to_splits.empty())
      throw ConfigError("config: '" + where + ".apply_to_splits' must be non-empty");
  }
  if (!(cfg.threshold > 0)) throw ConfigError("config: '" + where + ".threshold' must be > 0");
  if (!(cfg.step > 0 && cfg.step <= cfg.max_fraction && cfg.max_fraction <= 1))
    throw ConfigError("config: '" + where + "' needs 0 < step <= max_fraction <= 1");
  return cfg;
}

std::string describe_level(FairnessLevel level) { return to_string(level); }

TrainConfig parse_train_config(const json& j, const std::string& where, const TrainConfig& base) {
  expect_object(j, where);
  reject_unknown_keys(j, where,
                      {"learning_rate", "batch_size", "epochs", "l2_penalty", "optimizer",
                       "momentum", "include_sensitive", "n_rounds", "max_depth",
                       "min_child_rows", "l2"});
  TrainConfig cfg = base;
  cfg.learning_rate = get_or<double>(j, where, "learning_rate", base.learning_rate);
  cfg.batch_size = get_or<int>(j, where, "batch_size", base.batch_size);
  cfg.epochs = get_or<int>(j, where, "epochs", base.epochs);
  cfg.l2_penalty = get_or<double>(j, where, "l2_penalty", base.l2_penalty);
  if (j.contains("optimizer"))
    cfg.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  cfg.momentum = get_or<double>(j, where, "momentum", base.momentum);
  cfg.include_sensitive = get_or<bool>(j, where, "include_sensitive", base.include_sensitive);
  cfg.trees.n_rounds = get_or<int>(j, where, "n_rounds", base.trees.n_rounds);
  cfg.trees.max_depth = get_or<int>(j, where, "max_depth", base.trees.max_depth);
  cfg.trees.min_child_rows =
      get_or<std::int64_t>(j, where, "min_child_rows", base.trees.min_child_rows);
  cfg.trees.l2 = get_or<double>(j, where, "l2", base.trees.l2);
  cfg.check();
  return cfg;
}

FlSection parse_fl(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown_keys(j, where,
                      {"rounds", "local_epochs", "client_fraction", "batch_size", "learning_rate",
                       "l2_penalty", "optimizer", "momentum", "include_sensitive", "fair",
                       "tuning"});
  FlSection fl;
  fl.config.rounds = get_or<int>(j, where, "rounds", 50);
  fl.config.local_epochs = get_or<int>(j, where, "local_epochs", 1);
  fl.config.client_fraction = get_or<double>(j, where, "client_fraction", 1.0);
  fl.config.batch_size = get_or<int>(j, where, "batch_size", 32);
  fl.config.learning_rate = get_or<double>(j, where, "learning_rate", 0.1);
  fl.config.l2_penalty = get_or<double>(j, where, "l2_penalty", 1e-4);
  if (j.contains("optimizer"))
    fl.config.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  fl.config.momentum = get_or<double>(j, where, "momentum", 0.9);
  fl.config.include_sensitive = get_or<bool>(j, where, "include_sensitive", true);
  if (j.contains("fair")) {
    const json& f = j.at("fair");
    reject_unknown_keys(f, where + ".fair", {"lambda", "target_dd", "target_attr"});
    FairRegConfig fair;
    fair.lambda = require<double>(f, where + ".fair", "lambda");
    fair.target_dd = get_or<double>(f, where + ".fair", "target_dd", 0.05);
    fair.target_attr = require<std::string>(f, where + ".fair", "target_attr");
    fair.check();
    fl.fair = fair;
  }
  if (j.contains("tuning")) {
    const json& t = j.at("tuning");
    reject_unknown_keys(t, where + ".tuning",
                        {"learning_rates", "batch_sizes", "local_epochs", "optimizers", "lambdas",
                         "max_random"});
    FlTuneGrid grid;
    grid.learning_rates = get_or<std::vector<double>>(t, where + ".tuning", "learning_rates", {});
    grid.batch_sizes = get_or<std::vector<int>>(t, where + ".tuning", "batch_sizes", {});
    grid.local_epochs = get_or<std::vector<int>>(t, where + ".tuning", "local_epochs", {});
    if (t.contains("optimizers"))
      for (const auto& o : t.at("optimizers"))
        grid.optimizers.push_back(optimizer_from_string(o.get<std::string>()));
    grid.lambdas = get_or<std::vector<double>>(t, where + ".tuning", "lambdas", {});
    fl.tuning = grid;
    fl.tuning_max_random = get_or<int>(t, where + ".tuning", "max_random", 0);
  }
  fl.config.check();
  return fl;
}

}  // namespace

std::string ThresholdSearchConfig::describe() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "dual-model rule at the %s level: all models agree on the argmax and the minimum "
                "of their maximum DD values exceeds %g; drop fractions searched in steps of %g up "
                "to %g",
                describe_level(level).c_str(), threshold, step, max_fraction);
  return buf;
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: not valid JSON: " + std::string(e.what()));
  }
  expect_object(j, "(root)");
  reject_unknown_keys(j, "(root)",
                      {"seed", "output_dir", "data_dir", "base_task", "year", "horizon", "source",
                       "remap", "partition", "partition_labels", "subsplit", "split_fractions",
                       "fairness", "modifications", "threshold_search", "device_filter",
                       "device_roles", "models", "evaluate", "local_model", "fl"});

  PipelineConfig cfg;
  cfg.raw_json = json_text;
  cfg.seed = get_or<std::uint64_t>(j, "(root)", "seed", 0);
  cfg.output_dir = get_or<std::string>(j, "(root)", "output_dir", "");
  cfg.data_dir = get_or<std::string>(j, "(root)", "data_dir", "");
  cfg.year = get_or<int>(j, "(root)", "year", 2018);
  cfg.horizon = get_or<std::string>(j, "(root)", "horizon", "1-Year");

  if (!j.contains("source")) throw ConfigError("config: missing 'source'");
  const json& source = j.at("source");
  expect_object(source, "source");
  reject_unknown_keys(source, "source", {"synthetic", "csv"});
  if (source.contains("synthetic") == source.contains("csv"))
    throw ConfigError("config: 'source' must contain exactly one of synthetic|csv");
  if (source.contains("synthetic")) {
    cfg.synthetic = parse_synthetic(source.at("synthetic"), "source.synthetic");
    cfg.base_task = get_or<std::string>(j, "(root)", "base_task", "synthetic");
  } else {
    const json& c = source.at("csv");
    expect_object(c, "source.csv");
    reject_unknown_keys(c, "source.csv", {"path", "schema", "label", "sensitive"});
    CsvSourceConfig csv_cfg;
    csv_cfg.path = require<std::string>(c, "source.csv", "path");
    if (!c.contains("schema")) throw ConfigError("config: missing 'source.csv.schema'");
    SchemaPtr schema = parse_schema_ref(c.at("schema"), "source.csv.schema");
    if (c.contains("label") || c.contains("sensitive")) {
      auto s = std::make_shared<Schema>(*schema);
      if (c.contains("label")) s->label_name = c.at("label").get<std::string>();
      if (c.contains("sensitive"))
        s->sensitive = c.at("sensitive").get<std::vector<std::string>>();
      schema = s;
    }
    for (const auto& attr : schema->sensitive) {
      int idx = schema->index_of(attr);
      if (idx < 0 || schema->columns[static_cast<std::size_t>(idx)].kind != ColumnKind::categorical)
        throw ConfigError("config: sensitive attribute '" + attr +
                          "' is not a categorical column of the schema");
    }
    csv_cfg.schema = schema;
    cfg.csv = csv_cfg;
    cfg.base_task = get_or<std::string>(j, "(root)", "base_task",
                                        "csv:" + csv_cfg.path.filename().string());
  }

  if (j.contains("remap")) {
    if (cfg.synthetic) throw ConfigError("config: 'remap' requires a csv source");
    cfg.remap = parse_remap(j.at("remap"), "remap");
  }
  if (j.contains("partition")) {
    if (cfg.synthetic) throw ConfigError("config: 'partition' requires a csv source");
    cfg.partition = parse_partition(j.at("partition"), "partition");
  }
  if (cfg.csv && !cfg.partition)
    throw ConfigError("config: csv sources require a 'partition' section");
  if (j.contains("partition_labels")) {
    for (const auto& [key, value] : j.at("partition_labels").items())
      cfg.partition_labels[std::stoi(key)] = value.get<std::string>();
  }
  if (j.contains("subsplit")) {
    cfg.subsplit = parse_partition(j.at("subsplit"), "subsplit");
    if (cfg.subsplit->strategy == PartitionStrategy::natural_key)
      throw ConfigError("config: 'subsplit' cannot use natural_key");
  }
  if (j.contains("split_fractions"))
    cfg.fractions = parse_fractions(j.at("split_fractions"), "split_fractions");

  if (j.contains("fairness")) {
    const json& f = j.at("fairness");
    expect_object(f, "fairness");
    reject_unknown_keys(f, "fairness", {"metric", "level", "attrs"});
    cfg.metric = metric_from_string(get_or<std::string>(f, "fairness", "metric", "dd"));
    cfg.level = level_from_string(get_or<std::string>(f, "fairness", "level", "attribute"));
    cfg.fairness_attrs = get_or<std::vector<std::string>>(f, "fairness", "attrs", {});
  }

  if (j.contains("modifications")) {
    std::size_t index = 0;
    for (const auto& m : j.at("modifications"))
      cfg.modifications.push_back(parse_modification(m, "modifications[]", cfg.seed, index++));
  }
  if (j.contains("threshold_search"))
    cfg.threshold_search = parse_threshold_search(j.at("threshold_search"), "threshold_search");

  cfg.device_filter = get_or<bool>(j, "(root)", "device_filter", false);
  if (cfg.device_filter && !cfg.subsplit)
    throw ConfigError("config: 'device_filter' requires a 'subsplit' section");
  if (cfg.device_filter && !cfg.threshold_search)
    throw ConfigError("config: 'device_filter' requires 'threshold_search' (its bias rule)");
  if (j.contains("device_roles")) {
    const json& d = j.at("device_roles");
    reject_unknown_keys(d, "device_roles", {"test_client_fraction"});
    cfg.device_test_fraction = require<double>(d, "device_roles", "test_client_fraction");
    if (!(*cfg.device_test_fraction > 0 && *cfg.device_test_fraction < 1))
      throw ConfigError("config: 'device_roles.test_client_fraction' must be in (0, 1)");
  }

  TrainConfig logistic_base;
  TrainConfig gbdt_base;
  gbdt_base.learning_rate = 0.2;
  gbdt_base.trees.n_rounds = 30;
  gbdt_base.trees.max_depth = 3;
  gbdt_base.trees.min_child_rows = 5;
  if (j.contains("models")) {
    const json& m = j.at("models");
    expect_object(m, "models");
    reject_unknown_keys(m, "models", {"logistic", "gbdt"});
    if (m.contains("logistic"))
      logistic_base = parse_train_config(m.at("logistic"), "models.logistic", logistic_base);
    if (m.contains("gbdt")) gbdt_base = parse_train_config(m.at("gbdt"), "models.gbdt", gbdt_base);
  }
  cfg.logistic = logistic_base;
  cfg.gbdt = gbdt_base;

  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    expect_object(e, "evaluate");
    reject_unknown_keys(e, "evaluate", {"true_labels", "models"});
    cfg.evaluate_true_labels = get_or<bool>(e, "evaluate", "true_labels", true);
    cfg.evaluate_models = get_or<std::vector<std::string>>(e, "evaluate", "models", {"logistic"});
  }
  cfg.local_model = get_or<std::string>(j, "(root)", "local_model", "logistic");
  for (const auto& name : cfg.evaluate_models)
    if (name != "logistic" && name != "gbdt")
      throw ConfigError("config: evaluate.models entries must be logistic or gbdt");
  if (cfg.local_model != "logistic" && cfg.local_model != "gbdt")
    throw ConfigError("config: 'local_model' must be logistic or gbdt");

  if (j.contains("fl")) cfg.fl = parse_fl(j.at("fl"), "fl");

  if (cfg.threshold_search && cfg.threshold_search->mode == ThresholdSearchConfig::DropMode::fixed) {
    // target attr existence can only be checked against the schema here for csv sources
    if (cfg.csv && !cfg.csv->schema->is_sensitive(cfg.threshold_search->target->attr))
      throw ConfigError("config: threshold_search target '" +
                        cfg.threshold_search->target->attr + "' is not a sensitive attribute");
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pipeline_config(text);
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace {

NamedTrainer make_logistic_trainer(TrainConfig cfg) {
  return {"logistic", [cfg](const Dataset& train, const Dataset& eval) {
            SplitSet s;
            s.train = train;
            s.validation = Dataset::empty(train.schema_ptr());
            s.test = Dataset::empty(train.schema_ptr());
            return predict(train_logistic(s, cfg).model, eval).labels;
          }};
}

NamedTrainer make_gbdt_trainer(TrainConfig cfg) {
  return {"gbdt", [cfg](const Dataset& train, const Dataset& eval) {
            SplitSet s;
            s.train = train;
            s.validation = Dataset::empty(train.schema_ptr());
            s.test = Dataset::empty(train.schema_ptr());
            return predict(train_gbdt(s, cfg), eval).labels;
          }};
}

Dataset client_full_data(const SplitSet& splits) {
  std::vector<const Dataset*> parts;
  for (const Dataset* d : {&splits.train, &splits.validation, &splits.test})
    if (d->n() > 0) parts.push_back(d);
  if (parts.empty()) return splits.train;
  return concat(parts);
}

std::vector<std::string> resolve_attrs(const PipelineConfig& config, const Schema& schema) {
  if (config.fairness_attrs.empty()) return schema.sensitive;
  for (const auto& attr : config.fairness_attrs)
    if (!schema.is_sensitive(attr))
      throw ConfigError("config: fairness.attrs entry '" + attr + "' is not a sensitive attribute");
  return config.fairness_attrs;
}

void write_json_file(const ordered_json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text_file(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// True-label reports over each client's full data, in federation order.
std::vector<std::pair<ClientId, FairnessReport>> true_label_reports(
    const FederatedDataset& fed, const std::vector<std::string>& attrs, Metric metric,
    FairnessLevel level) {
  std::vector<std::pair<ClientId, FairnessReport>> out;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const Dataset full = client_full_data(fed.splits(i));
    out.emplace_back(fed.client_id(i), fairness_table(full, attrs, metric, level));
  }
  return out;
}

ordered_json bias_outcomes_to_json(const std::map<ClientId, ClientBiasOutcome>& outcomes) {
  ordered_json j = ordered_json::object();
  for (const auto& [client, outcome] : outcomes) {
    ordered_json o;
    if (outcome.label) {
      o["attr"] = outcome.label->attr;
      o["value"] = outcome.label->value ? ordered_json(*outcome.label->value) : ordered_json(nullptr);
    } else {
      o = nullptr;
    }
    j[client] = ordered_json{{"label", o}, {"fraction", outcome.fraction}};
  }
  return j;
}

std::map<ClientId, ClientBiasOutcome> bias_outcomes_from_json(const ordered_json& j) {
  std::map<ClientId, ClientBiasOutcome> out;
  for (const auto& [client, oj] : j.items()) {
    ClientBiasOutcome outcome;
    const ordered_json& label = oj.at("label");
    if (!label.is_null()) {
      BiasTarget target;
      target.attr = label.at("attr").get<std::string>();
      if (!label.at("value").is_null()) target.value = label.at("value").get<std::int32_t>();
      outcome.label = target;
    }
    outcome.fraction = oj.at("fraction").get<double>();
    out[client] = outcome;
  }
  return out;
}

}  // namespace

MetadataExtras read_metadata_extras(const fs::path& dir) {
  std::ifstream in(dir / "metadata.json", std::ios::binary);
  if (!in) throw DataError("cannot open " + (dir / "metadata.json").string());
  ordered_json meta;
  in >> meta;
  MetadataExtras extras;
  if (meta.contains("bias_labels")) extras.bias_labels = bias_outcomes_from_json(meta.at("bias_labels"));
  if (meta.contains("device_roles") && !meta.at("device_roles").is_null()) {
    extras.roles.train_clients =
        meta.at("device_roles").at("train").get<std::vector<std::string>>();
    extras.roles.test_clients =
        meta.at("device_roles").at("test").get<std::vector<std::string>>();
  }
  return extras;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

namespace {

struct NamedDataset {
  ClientId id;
  Dataset data;
};

std::string padded_name(const char* prefix, std::size_t index, std::size_t count) {
  int width = 2;
  for (std::size_t v = count > 0 ? count - 1 : 0; v >= 100; v /= 10) ++width;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, index);
  return buf;
}

std::vector<NamedDataset> partition_pooled(const Dataset& pooled, const PartitionConfig& cfg,
                                           const std::map<std::int32_t, std::string>& labels,
                                           std::uint64_t seed) {
  std::vector<NamedDataset> out;
  if (cfg.strategy == PartitionStrategy::natural_key) {
    FederatedDataset fed = split_by_key(pooled, cfg.key_column, labels);
    for (std::size_t i = 0; i < fed.size(); ++i)
      out.push_back({fed.client_id(i), fed.splits(i).train});
    return out;
  }
  std::vector<Dataset> parts;
  switch (cfg.strategy) {
    case PartitionStrategy::iid: parts = partition_iid(pooled, cfg.n, seed); break;
    case PartitionStrategy::dirichlet:
      parts = partition_dirichlet(pooled, cfg.n, cfg.alpha, cfg.min_partition_size, seed);
      break;
    case PartitionStrategy::linear: parts = partition_linear(pooled, cfg.n, seed); break;
    default: throw ConfigError("partition_pooled: bad strategy");
  }
  for (std::size_t i = 0; i < parts.size(); ++i)
    out.push_back({padded_name("part_", i, parts.size()), std::move(parts[i])});
  return out;
}

// The "more biased" attribute under the dual-model rule: the one with the
// largest min-over-models maximum DD. Ties go to the lowest attribute name.
std::string pick_drop_attribute(const std::vector<FairnessReport>& reports) {
  std::map<std::string, double> min_of_max;
  for (const auto& report : reports) {
    for (const auto& a : report.attributes) {
      if (!a.max_value) continue;
      auto it = min_of_max.find(a.attr);
      if (it == min_of_max.end())
        min_of_max[a.attr] = *a.max_value;
      else
        it->second = std::min(it->second, *a.max_value);
    }
  }
  if (min_of_max.empty()) throw DataError("threshold search: no attribute is measurable");
  std::string best;
  double best_value = -1;
  for (const auto& [attr, value] : min_of_max) {
    if (value > best_value) {
      best = attr;
      best_value = value;
    }
  }
  return best;
}

std::int32_t pick_drop_value(const std::vector<FairnessReport>& reports, const std::string& attr) {
  std::map<std::int32_t, double> min_of_gap;
  for (const auto& report : reports) {
    const AttrTable& table = report.attribute(attr);
    for (const auto& ovr : table.per_value) {
      if (!ovr.diff) continue;
      const double gap = std::abs(*ovr.diff);
      auto it = min_of_gap.find(ovr.value);
      if (it == min_of_gap.end())
        min_of_gap[ovr.value] = gap;
      else
        it->second = std::min(it->second, gap);
    }
  }
  if (min_of_gap.empty())
    throw DataError("threshold search: no value of '" + attr + "' is measurable");
  std::int32_t best = min_of_gap.begin()->first;
  double best_value = -1;
  for (const auto& [value, gap] : min_of_gap) {
    if (gap > best_value) {
      best = value;
      best_value = gap;
    }
  }
  return best;
}

}  // namespace

GenerateResult run_generate(const PipelineConfig& config) {
  if (config.output_dir.empty()) throw ConfigError("generate: output_dir is required");

  // ---- source ----
  FederatedDataset fed;
  std::string partitioner_desc;
  if (config.synthetic) {
    SyntheticSpec spec = *config.synthetic;
    spec.seed = derive_seed(config.seed, "synthetic");
    spec.fractions = config.fractions;
    fed = generate_synthetic(spec);
    partitioner_desc = fed.metadata.partitioner;
  } else {
    Dataset pooled = load_csv(config.csv->path, config.csv->schema);
    if (config.remap) pooled = apply_remap(pooled, *config.remap);
    auto violations = validate(pooled);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw DataError("generate: input fails validation (" + std::to_string(violations.size()) +
                      " violations; first: row " + std::to_string(v.row) + ", column '" +
                      v.column + "': " + v.message + ")");
    }
    auto clients = partition_pooled(pooled, *config.partition, config.partition_labels,
                                    derive_seed(config.seed, "partition"));
    partitioner_desc = config.partition->describe();
    for (auto& client : clients) {
      SplitSet splits = split_train_val_test(client.data, config.fractions,
                                             derive_seed(config.seed, "split", client.id));
      fed.add_client(client.id, std::move(splits));
    }
  }
  const std::vector<ClientId> parent_ids = fed.client_ids();

  // ---- fixed modifications ----
  std::vector<std::string> warnings;
  if (!config.modifications.empty())
    fed = apply_modifications(fed, config.modifications, &warnings);

  // ---- threshold search ----
  std::map<ClientId, ClientBiasOutcome> bias_outcomes;
  std::string threshold_rule;
  if (config.threshold_search) {
    const ThresholdSearchConfig& search = *config.threshold_search;
    threshold_rule = search.describe();
    const std::vector<std::string> attrs = fed.splits(std::size_t{0}).train.schema().sensitive;
    std::vector<Modification> search_mods;
    FederatedDataset searched;
    searched.metadata = fed.metadata;

    for (std::size_t i = 0; i < fed.size(); ++i) {
      const ClientId& id = fed.client_id(i);
      SplitSet splits = fed.splits(i);

      TrainConfig logistic_cfg = config.logistic;
      logistic_cfg.seed = derive_seed(config.seed, "search_logistic", id);
      TrainConfig gbdt_cfg = config.gbdt;
      gbdt_cfg.seed = derive_seed(config.seed, "search_gbdt", id);
      const std::vector<NamedTrainer> trainers{make_logistic_trainer(logistic_cfg),
                                               make_gbdt_trainer(gbdt_cfg)};

      // Resolve the drop target for the auto modes from fraction-0 reports.
      std::string drop_attr = search.attr;
      std::int32_t drop_value = search.value;
      BiasTarget target;
      if (search.mode == ThresholdSearchConfig::DropMode::fixed) {
        target = *search.target;
      } else {
        std::vector<FairnessReport> initial;
        for (const auto& trainer : trainers) {
          auto preds = trainer.fit_predict(splits.train, splits.test);
          initial.push_back(
              fairness_table(splits.test, preds, attrs, Metric::dd, search.level, trainer.name));
        }
        if (search.mode == ThresholdSearchConfig::DropMode::auto_attribute) {
          drop_attr = pick_drop_attribute(initial);
          target.attr = drop_attr;
        } else {
          drop_value = pick_drop_value(initial, drop_attr);
          target.attr = drop_attr;
          target.value = drop_value;
        }
      }

      ExacerbationResult result = exacerbate_to_threshold(
          splits, drop_attr, drop_value, target, search.threshold, search.step,
          search.max_fraction, trainers, search.level, derive_seed(config.seed, "exacerbate", id));

      ClientBiasOutcome outcome;
      if (result.success) {
        outcome.label = result.label;
        outcome.fraction = result.fraction;
        if (result.fraction > 0) {
          Modification mod;
          mod.kind = ModKind::drop;
          mod.attr = drop_attr;
          mod.value = drop_value;
          mod.fraction = result.fraction;
          mod.splits = search.apply_to_splits;
          mod.seed = derive_seed(config.seed, "exacerbate", id);
          mod.clients = {id};
          search_mods.push_back(mod);

          const bool touch_train =
              std::find(mod.splits.begin(), mod.splits.end(), SplitPart::train) !=
              mod.splits.end();
          if (touch_train) splits.train = result.train;  // exactly the validated rows
          for (auto part : mod.splits) {
            if (part == SplitPart::train) continue;
            Modification local = mod;
            local.seed = derive_seed(mod.seed, std::string("mod:") + id + ":" + to_string(part));
            splits.part(part) = drop_negative_rows(splits.part(part), local, &warnings);
          }
        }
      } else {
        warnings.push_back("threshold search failed for client '" + id +
                           "'; client left unmodified");
      }
      bias_outcomes[id] = outcome;
      searched.add_client(id, std::move(splits));
    }
    searched.metadata.modifications.insert(searched.metadata.modifications.end(),
                                           search_mods.begin(), search_mods.end());
    fed = std::move(searched);
  }

  // ---- subsplit into device-style clients ----
  std::string device_sampling;
  if (config.subsplit) {
    partitioner_desc += " + " + config.subsplit->describe();
    FederatedDataset devices;
    devices.metadata = fed.metadata;
    std::map<ClientId, ClientBiasOutcome> device_outcomes;
    std::vector<ClientId> kept, rejected;

    for (std::size_t i = 0; i < fed.size(); ++i) {
      const ClientId& id = fed.client_id(i);
      const Dataset full = client_full_data(fed.splits(i));
      PartitionConfig sub = *config.subsplit;
      std::vector<NamedDataset> parts;
      {
        std::vector<Dataset> datasets;
        const std::uint64_t seed = derive_seed(config.seed, "subsplit", id);
        switch (sub.strategy) {
          case PartitionStrategy::iid: datasets = partition_iid(full, sub.n, seed); break;
          case PartitionStrategy::dirichlet:
            datasets = partition_dirichlet(full, sub.n, sub.alpha, sub.min_partition_size, seed);
            break;
          case PartitionStrategy::linear: datasets = partition_linear(full, sub.n, seed); break;
          default: throw ConfigError("subsplit: bad strategy");
        }
        for (std::size_t p = 0; p < datasets.size(); ++p)
          parts.push_back({id + "_" + std::to_string(p), std::move(datasets[p])});
      }

      for (auto& part : parts) {
        SplitSet splits = split_train_val_test(
            part.data, config.fractions, derive_seed(config.seed, "subsplit_split", part.id));

        if (config.device_filter) {
          TrainConfig logistic_cfg = config.logistic;
          logistic_cfg.seed = derive_seed(config.seed, "filter_logistic", part.id);
          TrainConfig gbdt_cfg = config.gbdt;
          gbdt_cfg.seed = derive_seed(config.seed, "filter_gbdt", part.id);
          const std::vector<NamedTrainer> trainers{make_logistic_trainer(logistic_cfg),
                                                   make_gbdt_trainer(gbdt_cfg)};
          const ThresholdSearchConfig& search = *config.threshold_search;
          const std::vector<std::string> attrs = splits.train.schema().sensitive;
          std::optional<BiasTarget> label;
          try {
            std::vector<FairnessReport> reports;
            for (const auto& trainer : trainers) {
              auto preds = trainer.fit_predict(splits.train, splits.test);
              reports.push_back(fairness_table(splits.test, preds, attrs, Metric::dd,
                                               search.level, trainer.name));
            }
            label = bias_label(reports, search.threshold);
          } catch (const DataError& e) {
            warnings.push_back("device filter on '" + part.id + "': " + e.what());
          }
          if (!label) {
            rejected.push_back(part.id);
            continue;
          }
          ClientBiasOutcome outcome;
          outcome.label = label;
          auto parent = bias_outcomes.find(id);
          outcome.fraction = parent != bias_outcomes.end() ? parent->second.fraction : 0;
          device_outcomes[part.id] = outcome;
          kept.push_back(part.id);
        }
        devices.add_client(part.id, std::move(splits));
      }
    }
    if (config.device_filter) {
      if (devices.size() == 0) throw DataError("device filter rejected every subset");
      bias_outcomes = std::move(device_outcomes);
      std::string desc = "kept=[";
      for (std::size_t i = 0; i < kept.size(); ++i) desc += (i ? ", " : "") + kept[i];
      desc += "]; rejected=[";
      for (std::size_t i = 0; i < rejected.size(); ++i) desc += (i ? ", " : "") + rejected[i];
      desc += "]";
      device_sampling = desc;
    }
    fed = std::move(devices);
  }

  // ---- device roles ----
  GenerateResult result;
  if (config.device_test_fraction)
    result.roles =
        assign_device_roles(fed, *config.device_test_fraction, derive_seed(config.seed, "device_roles"));

  // ---- metadata ----
  fed.metadata.base_task = config.base_task;
  fed.metadata.year = config.year;
  fed.metadata.horizon = config.horizon;
  fed.metadata.states = parent_ids;
  fed.metadata.partitioner = partitioner_desc;
  fed.metadata.split_fractions = config.fractions;
  fed.metadata.seed = config.seed;
  fed.metadata.threshold_rule = threshold_rule;
  fed.metadata.device_sampling = device_sampling;
  fed.metadata.config_json = config.raw_json;
  fed.metadata.library_version = kVersion;

  // ---- outputs ----
  fs::create_directories(config.output_dir);
  write_federation(fed, config.output_dir);

  // Inject the sibling metadata keys (bias labels, device roles, warnings).
  {
    std::ifstream in(config.output_dir / "metadata.json", std::ios::binary);
    ordered_json meta;
    in >> meta;
    in.close();
    meta["bias_labels"] = bias_outcomes_to_json(bias_outcomes);
    if (config.device_test_fraction) {
      meta["device_roles"] = ordered_json{{"train", result.roles.train_clients},
                                          {"test", result.roles.test_clients}};
    } else {
      meta["device_roles"] = nullptr;
    }
    meta["warnings"] = warnings;
    write_json_file(meta, config.output_dir / "metadata.json");
  }

  const Schema& schema = fed.splits(std::size_t{0}).train.schema();
  const auto attrs = resolve_attrs(config, schema);
  const auto reports = true_label_reports(fed, attrs, config.metric, config.level);
  write_json_file(
      [&] {
        ordered_json j = ordered_json::array();
        for (const auto& [client, report] : reports)
          j.push_back(ordered_json{{"client", client}, {"report", report_to_json(report)}});
        return j;
      }(),
      config.output_dir / "fairness_true_labels.json");
  reports_to_csv(reports, config.output_dir / "fairness_true_labels.csv");
  emit_report_bars_svg(reports, config.output_dir / "true_label_bars.svg",
                       std::string("true-label ") + to_string(config.metric) + " per client");

  const ClientStatsTable stats = client_stats(fed);
  write_json_file(stats.to_json(), config.output_dir / "client_stats.json");
  stats.write_csv(config.output_dir / "client_stats.csv");

  write_text_file(generate_datasheet(fed.metadata, reports), config.output_dir / "datasheet.md");

  result.fed = std::move(fed);
  result.bias_labels = std::move(bias_outcomes);
  return result;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

std::map<ClientId, ClientEval> local_model_evals(const FederatedDataset& fed,
                                                 const std::string& model_name,
                                                 const TrainConfig& base,
                                                 const std::vector<std::string>& attrs,
                                                 Metric metric, FairnessLevel level,
                                                 std::uint64_t seed,
                                                 const std::vector<ClientId>* only,
                                                 std::vector<std::string>* warnings) {
  std::map<ClientId, ClientEval> out;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const ClientId& id = fed.client_id(i);
    if (only && std::find(only->begin(), only->end(), id) == only->end()) continue;
    const SplitSet& splits = fed.splits(i);
    try {
      if (splits.test.n() == 0) throw DataError("no test split");
      TrainConfig cfg = base;
      cfg.seed = derive_seed(seed, "local_" + model_name, id);
      std::vector<int> preds;
      if (model_name == "logistic")
        preds = predict(train_logistic(splits, cfg).model, splits.test).labels;
      else
        preds = predict(train_gbdt(splits, cfg), splits.test).labels;
      ClientEval eval;
      eval.report = fairness_table(splits.test, preds, attrs, metric, level, model_name);
      eval.accuracy = accuracy(preds, splits.test.labels());
      eval.n = splits.test.n();
      out.emplace(id, std::move(eval));
    } catch (const DataError& e) {
      if (warnings)
        warnings->push_back("local " + model_name + " on '" + id + "' skipped: " + e.what());
    }
  }
  return out;
}

ordered_json client_evals_to_json(const std::map<ClientId, ClientEval>& evals) {
  ordered_json j = ordered_json::array();
  for (const auto& [client, eval] : evals) {
    j.push_back(ordered_json{{"client", client},
                             {"accuracy", eval.accuracy},
                             {"n", eval.n},
                             {"report", report_to_json(eval.report)}});
  }
  return j;
}

std::vector<std::pair<ClientId, FairnessReport>> evals_to_report_list(
    const std::map<ClientId, ClientEval>& evals) {
  std::vector<std::pair<ClientId, FairnessReport>> out;
  for (const auto& [client, eval] : evals) out.emplace_back(client, eval.report);
  return out;
}

}  // namespace

void run_evaluate(const PipelineConfig& config, const fs::path& data_dir) {
  const fs::path out_dir =
      config.output_dir.empty() ? data_dir / "evaluation" : config.output_dir;
  const FederatedDataset fed = read_federation(data_dir);
  if (fed.size() == 0) throw DataError("evaluate: federation is empty");
  const Schema& schema = fed.splits(std::size_t{0}).train.schema();
  const auto attrs = resolve_attrs(config, schema);
  fs::create_directories(out_dir);

  std::vector<std::string> warnings;
  if (config.evaluate_true_labels) {
    const auto reports = true_label_reports(fed, attrs, config.metric, config.level);
    write_json_file(
        [&] {
          ordered_json j = ordered_json::array();
          for (const auto& [client, report] : reports)
            j.push_back(ordered_json{{"client", client}, {"report", report_to_json(report)}});
          return j;
        }(),
        out_dir / "fairness_true_labels.json");
    reports_to_csv(reports, out_dir / "fairness_true_labels.csv");
    emit_report_bars_svg(reports, out_dir / "true_label_bars.svg",
                         std::string("true-label ") + to_string(config.metric) + " per client");
  }

  std::map<ClientId, ClientEval> first_model_evals;
  for (const auto& model_name : config.evaluate_models) {
    const TrainConfig& base = model_name == "logistic" ? config.logistic : config.gbdt;
    auto evals = local_model_evals(fed, model_name, base, attrs, config.metric, config.level,
                                   config.seed, nullptr, &warnings);
    write_json_file(client_evals_to_json(evals), out_dir / ("fairness_" + model_name + ".json"));
    reports_to_csv(evals_to_report_list(evals), out_dir / ("fairness_" + model_name + ".csv"));
    emit_report_bars_svg(evals_to_report_list(evals), out_dir / (model_name + "_bars.svg"),
                         model_name + " " + to_string(config.metric) + " per client");
    if (first_model_evals.empty()) first_model_evals = std::move(evals);
  }

  const ClientStatsTable stats =
      client_stats(fed, first_model_evals.empty() ? nullptr : &first_model_evals);
  write_json_file(stats.to_json(), out_dir / "client_stats.json");
  stats.write_csv(out_dir / "client_stats.csv");
  if (!warnings.empty())
    write_json_file(ordered_json{{"warnings", warnings}}, out_dir / "warnings.json");
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

namespace {

FederatedDataset sub_federation(const FederatedDataset& fed, const std::vector<ClientId>& ids) {
  FederatedDataset out;
  out.metadata = fed.metadata;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const ClientId& id = fed.client_id(i);
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) out.add_client(id, fed.splits(i));
  }
  return out;
}

void write_simulation_arm(const fs::path& out_dir, const std::string& arm, const FlResult& result,
                          const std::map<ClientId, ClientEval>& local,
                          const FederatedDataset& eval_fed,
                          const std::map<ClientId, std::optional<BiasTarget>>& bias_labels,
                          const std::vector<std::string>& attrs, Metric metric,
                          FairnessLevel level) {
  result.history.write_csv(out_dir / ("history_" + arm + ".csv"));
  write_json_file(result.history.to_json(), out_dir / ("history_" + arm + ".json"));
  write_json_file(result.model.to_json(), out_dir / ("model_" + arm + ".json"));

  auto global = evaluate_global(result.model, eval_fed, EvalMode::cross_silo(), attrs, metric, level);
  write_json_file(client_evals_to_json(global), out_dir / ("global_eval_" + arm + ".json"));

  // Comparison over the clients that have both sides.
  std::map<ClientId, ClientEval> paired_global;
  for (const auto& [id, eval] : global)
    if (local.count(id)) paired_global.emplace(id, eval);
  if (!local.empty() && local.size() == paired_global.size()) {
    const ComparisonReport comparison = compare(local, paired_global, bias_labels);
    write_json_file(comparison.to_json(), out_dir / ("comparison_" + arm + ".json"));
    comparison.write_csv(out_dir / ("comparison_" + arm + ".csv"));
    emit_svg(comparison, PlotKind::scatter, out_dir / ("scatter_" + arm + ".svg"));
    emit_svg(comparison, PlotKind::bars, out_dir / ("bars_" + arm + ".svg"));
    emit_svg(comparison, PlotKind::value_shift, out_dir / ("value_shift_" + arm + ".svg"));
  }
}

}  // namespace

void run_simulate(const PipelineConfig& config, const fs::path& data_dir) {
  if (!config.fl) throw ConfigError("simulate: config has no 'fl' section");
  const fs::path out_dir =
      config.output_dir.empty() ? data_dir / "simulation" : config.output_dir;
  const FederatedDataset fed = read_federation(data_dir);
  if (fed.size() == 0) throw DataError("simulate: federation is empty");
  MetadataExtras extras = read_metadata_extras(data_dir);
  const Schema& schema = fed.splits(std::size_t{0}).train.schema();
  const auto attrs = resolve_attrs(config, schema);
  fs::create_directories(out_dir);

  // Cross-device: train on the train-role clients, compare on the test-role
  // clients' own test splits. Roles come from metadata or are assigned here.
  const bool device_mode = !extras.roles.test_clients.empty() || config.device_test_fraction;
  if (device_mode && extras.roles.test_clients.empty())
    extras.roles =
        assign_device_roles(fed, *config.device_test_fraction, derive_seed(config.seed, "device_roles"));

  FLConfig fl_config = config.fl->config;
  fl_config.seed = derive_seed(config.seed, "fl");
  const FederatedDataset train_fed =
      device_mode ? sub_federation(fed, extras.roles.train_clients) : fed;
  const FederatedDataset eval_fed =
      device_mode ? sub_federation(fed, extras.roles.test_clients) : fed;

  ordered_json summary;
  summary["mode"] = device_mode ? "cross_device" : "cross_silo";
  if (device_mode)
    summary["device_roles"] = ordered_json{{"train", extras.roles.train_clients},
                                           {"test", extras.roles.test_clients}};

  // Optional hyperparameter search before the final runs.
  std::optional<FairRegConfig> fair = config.fl->fair;
  if (config.fl->tuning) {
    if (fair) {
      FlTuneResult tuned = tune_fair_fedavg(train_fed, fl_config, *fair, *config.fl->tuning,
                                            config.fl->tuning_max_random, config.seed);
      fl_config = tuned.config;
      fair->lambda = *tuned.lambda;
      summary["tuning"] = ordered_json{{"validation_accuracy", tuned.validation_accuracy},
                                       {"lambda", *tuned.lambda}};
    } else {
      FlTuneResult tuned = tune_fedavg(train_fed, fl_config, *config.fl->tuning,
                                       config.fl->tuning_max_random, config.seed);
      fl_config = tuned.config;
      summary["tuning"] = ordered_json{{"validation_accuracy", tuned.validation_accuracy}};
    }
  }

  // Local baselines on the comparison clients.
  std::vector<std::string> warnings;
  const std::vector<ClientId> compare_ids = eval_fed.client_ids();
  const TrainConfig& local_base = config.local_model == "logistic" ? config.logistic : config.gbdt;
  const auto local = local_model_evals(eval_fed, config.local_model, local_base, attrs,
                                       config.metric, config.level, config.seed, &compare_ids,
                                       &warnings);

  std::map<ClientId, std::optional<BiasTarget>> bias_labels;
  for (const auto& [id, outcome] : extras.bias_labels) bias_labels[id] = outcome.label;

  const FlResult fedavg = run_fedavg(train_fed, fl_config);
  write_simulation_arm(out_dir, "fedavg", fedavg, local, eval_fed, bias_labels, attrs,
                       config.metric, config.level);

  if (fair) {
    const FlResult fair_run = run_fair_fedavg(train_fed, fl_config, *fair);
    write_simulation_arm(out_dir, "fair", fair_run, local, eval_fed, bias_labels, attrs,
                         config.metric, config.level);
    summary["fair"] = ordered_json{{"lambda", fair->lambda},
                                   {"target_dd", fair->target_dd},
                                   {"target_attr", fair->target_attr}};
  }

  // Pooled (centralized) baseline on the training federation.
  try {
    const LogisticFit pooled = train_pooled(train_fed, fl_config);
    std::vector<const Dataset*> test_parts;
    for (std::size_t i = 0; i < eval_fed.size(); ++i)
      if (eval_fed.splits(i).test.n() > 0) test_parts.push_back(&eval_fed.splits(i).test);
    if (!test_parts.empty()) {
      const Dataset pooled_test = concat(test_parts);
      const auto preds = predict(pooled.model, pooled_test);
      summary["pooled_test_accuracy"] = accuracy(preds.labels, pooled_test.labels());
    }
  } catch (const DataError& e) {
    warnings.push_back(std::string("pooled baseline skipped: ") + e.what());
  }

  summary["fl"] = ordered_json{{"rounds", fl_config.rounds},
                               {"local_epochs", fl_config.local_epochs},
                               {"client_fraction", fl_config.client_fraction},
                               {"batch_size", fl_config.batch_size},
                               {"learning_rate", fl_config.learning_rate},
                               {"l2_penalty", fl_config.l2_penalty},
                               {"optimizer", to_string(fl_config.optimizer)},
                               {"momentum", fl_config.momentum}};
  summary["warnings"] = warnings;
  write_json_file(summary, out_dir / "summary.json");
}

// ---------------------------------------------------------------------------
// datasheet
// ---------------------------------------------------------------------------

void run_datasheet(const fs::path& data_dir, const fs::path& out_path) {
  const FederatedDataset fed = read_federation(data_dir);
  if (fed.size() == 0) throw DataError("datasheet: federation is empty");
  const Schema& schema = fed.splits(std::size_t{0}).train.schema();

  // The fairness summary settings come from the embedded config when present.
  Metric metric = Metric::dd;
  FairnessLevel level = FairnessLevel::attribute;
  std::vector<std::string> attrs = schema.sensitive;
  if (!fed.metadata.config_json.empty()) {
    const PipelineConfig config = parse_pipeline_config(fed.metadata.config_json);
    metric = config.metric;
    level = config.level;
    if (!config.fairness_attrs.empty()) attrs = config.fairness_attrs;
  }
  const auto reports = true_label_reports(fed, attrs, metric, level);
  const fs::path target = out_path.empty() ? data_dir / "datasheet.md" : out_path;
  write_text_file(generate_datasheet(fed.metadata, reports), target);
}

}  // namespace fedfair
