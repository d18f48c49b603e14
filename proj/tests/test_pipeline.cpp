#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "fedfair/error.hpp"
#include "fedfair/fairness.hpp"
#include "fedfair/ingest.hpp"
#include "fedfair/csv.hpp"
#include "fedfair/pipeline.hpp"
#include "fedfair/rng.hpp"
#include "helpers.hpp"

using namespace fedfair;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("fedfair_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string synthetic_config(const fs::path& out_dir, std::uint64_t seed) {
  return R"({
  "seed": )" + std::to_string(seed) + R"(,
  "output_dir": ")" + out_dir.string() + R"(",
  "source": {
    "synthetic": {
      "n_clients": 3,
      "rows_per_client": [300, 300],
      "base_rate": 0.5,
      "attrs": [
        {"name": "SEX", "values": [1, 2], "shares": [0.5, 0.5], "rate_shifts": [0.12, -0.12]},
        {"name": "RACE", "values": [1, 2], "shares": [0.6, 0.4], "rate_shifts": [0.0, 0.0]}
      ],
      "feature_dim": 2,
      "feature_signal": 0.8
    }
  },
  "split_fractions": {"train": 0.7, "validation": 0.15, "test": 0.15},
  "fairness": {"metric": "dd", "level": "value"},
  "modifications": [
    {"kind": "drop", "attr": "RACE", "value": 2, "fraction": 0.2, "splits": ["train"],
     "clients": ["client_00"]}
  ]
})";
}

// Comparable to an attribute-silo recipe, scaled down to test size.
std::string search_config(const fs::path& out_dir, std::uint64_t seed) {
  return R"({
  "seed": )" + std::to_string(seed) + R"(,
  "output_dir": ")" + out_dir.string() + R"(",
  "source": {
    "synthetic": {
      "n_clients": 2,
      "rows_per_client": [1200, 1200],
      "base_rate": 0.45,
      "attrs": [
        {"name": "SEX", "values": [1, 2], "shares": [0.5, 0.5], "rate_shifts": [0.17, -0.17]},
        {"name": "RACE", "values": [1, 2], "shares": [0.5, 0.5], "rate_shifts": [0.0, 0.0]}
      ],
      "feature_dim": 2,
      "feature_signal": 0.6
    }
  },
  "split_fractions": {"train": 0.7, "validation": 0.1, "test": 0.2},
  "fairness": {"metric": "dd", "level": "attribute"},
  "threshold_search": {
    "threshold": 0.09, "step": 0.1, "max_fraction": 0.9, "level": "attribute",
    "drop": {"mode": "auto_attribute", "value": 2}
  },
  "models": {
    "logistic": {"epochs": 8, "learning_rate": 0.3, "batch_size": 64},
    "gbdt": {"n_rounds": 10, "max_depth": 2, "learning_rate": 0.3}
  }
})";
}

}  // namespace

TEST_CASE("config parsing: unknown keys and bad values are named") {
  CHECK_THROWS_WITH_AS(parse_pipeline_config("{\"nope\": 1, \"source\": {}}"),
                       doctest::Contains("nope"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_pipeline_config("not json"), doctest::Contains("JSON"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_pipeline_config("{}"), doctest::Contains("source"), ConfigError);

  // both sources at once
  CHECK_THROWS_AS(
      parse_pipeline_config(
          R"({"source": {"synthetic": {"n_clients": 1, "rows_per_client": [10, 10], "attrs": []},
               "csv": {"path": "x.csv", "schema": "acs_income"}}})"),
      ConfigError);

  // csv source requires a partition section
  CHECK_THROWS_WITH_AS(
      parse_pipeline_config(R"({"source": {"csv": {"path": "x.csv", "schema": "acs_income"}}})"),
      doctest::Contains("partition"), ConfigError);

  // device_filter needs subsplit + threshold_search
  CHECK_THROWS_WITH_AS(
      parse_pipeline_config(
          R"({"source": {"csv": {"path": "x.csv", "schema": "acs_income"}},
              "partition": {"strategy": "natural_key", "column": "ST"},
              "device_filter": true})"),
      doctest::Contains("device_filter"), ConfigError);

  // fractions must sum to one
  CHECK_THROWS_AS(parse_pipeline_config(R"({
    "source": {"synthetic": {"n_clients": 1, "rows_per_client": [10, 10],
               "attrs": [{"name": "A", "values": [1], "shares": [1.0], "rate_shifts": [0.0]}]}},
    "split_fractions": {"train": 0.5, "validation": 0.2, "test": 0.2}})"),
                  ConfigError);
}

TEST_CASE("config parsing: defaults and schema references") {
  auto dir = temp_dir("cfg");
  auto config = parse_pipeline_config(synthetic_config(dir, 9));
  CHECK(config.seed == 9);
  CHECK(config.base_task == "synthetic");
  CHECK(config.metric == Metric::dd);
  CHECK(config.level == FairnessLevel::value);
  REQUIRE(config.synthetic.has_value());
  CHECK(config.synthetic->n_clients == 3);
  REQUIRE(config.modifications.size() == 1);
  CHECK(config.modifications[0].splits == std::vector<SplitPart>{SplitPart::train});

  auto csv_cfg = parse_pipeline_config(R"({
    "source": {"csv": {"path": "data.csv", "schema": "acs_income", "sensitive": ["SEX", "RAC1P"]}},
    "partition": {"strategy": "natural_key", "column": "ST"}})");
  REQUIRE(csv_cfg.csv.has_value());
  CHECK(csv_cfg.csv->schema->sensitive == std::vector<std::string>{"SEX", "RAC1P"});
  CHECK(csv_cfg.base_task == "csv:data.csv");
}

TEST_CASE("run_generate: structure of the output tree") {
  auto dir = temp_dir("generate");
  auto config = parse_pipeline_config(synthetic_config(dir, 21));
  auto result = run_generate(config);
  CHECK(result.fed.size() == 3);

  for (const auto& id : {"client_00", "client_01", "client_02"})
    for (const auto& part : {"train", "validation", "test"})
      CHECK(fs::exists(dir / (std::string(id) + "_" + part + ".csv")));
  for (const auto& name :
       {"metadata.json", "fairness_true_labels.json", "fairness_true_labels.csv",
        "true_label_bars.svg", "client_stats.json", "client_stats.csv", "datasheet.md"})
    CHECK(fs::exists(dir / name));

  // the fixed modification only touched client_00's train split
  auto fed = read_federation(dir);
  CHECK(fed.metadata.modifications.size() == 1);
  CHECK(fed.metadata.config_json == config.raw_json);

  // datasheet embeds the config verbatim
  const std::string sheet = slurp(dir / "datasheet.md");
  CHECK(sheet.find("\"seed\": 21") != std::string::npos);
}

TEST_CASE("run_generate: byte-identical reruns") {
  auto dir_a = temp_dir("determinism_a");
  auto dir_b = temp_dir("determinism_b");
  run_generate(parse_pipeline_config(synthetic_config(dir_a, 33)));
  run_generate(parse_pipeline_config(synthetic_config(dir_b, 33)));

  std::vector<fs::path> names;
  for (const auto& entry : fs::directory_iterator(dir_a)) names.push_back(entry.path().filename());
  REQUIRE(!names.empty());
  for (const auto& name : names) {
    CAPTURE(name.string());
    std::string a = slurp(dir_a / name);
    std::string b = slurp(dir_b / name);
    // metadata embeds output_dir via config_json; normalize it
    const std::string sa = dir_a.string(), sb = dir_b.string();
    std::size_t pos;
    while ((pos = a.find(sa)) != std::string::npos) a.replace(pos, sa.size(), "DIR");
    while ((pos = b.find(sb)) != std::string::npos) b.replace(pos, sb.size(), "DIR");
    CHECK(a == b);
  }
}

TEST_CASE("run_generate: threshold search labels clients and records modifications") {
  auto dir = temp_dir("search");
  auto config = parse_pipeline_config(search_config(dir, 2024));
  auto result = run_generate(config);

  // both clients carry a planted SEX gap; the rule should label them
  REQUIRE(result.bias_labels.size() == 2);
  int labeled = 0;
  for (const auto& [client, outcome] : result.bias_labels)
    if (outcome.label && outcome.label->attr == "SEX") ++labeled;
  CHECK(labeled == 2);

  auto extras = read_metadata_extras(dir);
  CHECK(extras.bias_labels.size() == 2);

  const std::string sheet = slurp(dir / "datasheet.md");
  CHECK(sheet.find("dual-model rule") != std::string::npos);
}

TEST_CASE("run_evaluate: outputs and golden equivalence with library calls") {
  auto data_dir = temp_dir("evaluate_data");
  auto config = parse_pipeline_config(synthetic_config(data_dir, 55));
  run_generate(config);

  auto out_dir = temp_dir("evaluate_out");
  PipelineConfig eval_config = config;
  eval_config.output_dir = out_dir;
  run_evaluate(eval_config, data_dir);

  for (const auto& name : {"fairness_true_labels.json", "fairness_logistic.json",
                           "client_stats.csv", "true_label_bars.svg", "logistic_bars.svg"})
    CHECK(fs::exists(out_dir / name));

  // golden check: file contents equal direct library computation
  auto fed = read_federation(data_dir);
  auto expected = ordered_json::array();
  for (std::size_t i = 0; i < fed.size(); ++i) {
    auto full = concat({&fed.splits(i).train, &fed.splits(i).validation, &fed.splits(i).test});
    auto report =
        fairness_table(full, fed.splits(i).train.schema().sensitive, Metric::dd,
                       FairnessLevel::value);
    expected.push_back(
        ordered_json{{"client", fed.client_id(i)}, {"report", report_to_json(report)}});
  }
  auto actual = ordered_json::parse(slurp(out_dir / "fairness_true_labels.json"));
  CHECK(actual == expected);
}

TEST_CASE("run_simulate: fedavg arm plus fair arm with lambda 0 match") {
  auto data_dir = temp_dir("simulate_data");
  auto config = parse_pipeline_config(synthetic_config(data_dir, 77));
  run_generate(config);

  const std::string fl_config = R"({
    "seed": 77,
    "data_dir": ")" + data_dir.string() + R"(",
    "source": {"synthetic": {"n_clients": 3, "rows_per_client": [300, 300], "base_rate": 0.5,
      "attrs": [
        {"name": "SEX", "values": [1, 2], "shares": [0.5, 0.5], "rate_shifts": [0.12, -0.12]},
        {"name": "RACE", "values": [1, 2], "shares": [0.6, 0.4], "rate_shifts": [0.0, 0.0]}
      ],
      "feature_dim": 2}},
    "fairness": {"metric": "dd", "level": "value"},
    "models": {"logistic": {"epochs": 4, "learning_rate": 0.3}},
    "fl": {"rounds": 3, "local_epochs": 1, "batch_size": 32, "learning_rate": 0.3,
           "fair": {"lambda": 0.0, "target_dd": 0.05, "target_attr": "SEX"}}
  })";

  auto out_dir = temp_dir("simulate_out");
  PipelineConfig sim = parse_pipeline_config(fl_config);
  sim.output_dir = out_dir;
  run_simulate(sim, data_dir);

  for (const auto& name :
       {"history_fedavg.csv", "history_fedavg.json", "model_fedavg.json",
        "global_eval_fedavg.json", "comparison_fedavg.json", "comparison_fedavg.csv",
        "scatter_fedavg.svg", "bars_fedavg.svg", "value_shift_fedavg.svg", "history_fair.csv",
        "summary.json"})
    CHECK(fs::exists(out_dir / name));

  // lambda = 0: the fair arm is byte-identical to the vanilla arm
  CHECK(slurp(out_dir / "history_fair.csv") == slurp(out_dir / "history_fedavg.csv"));
  CHECK(slurp(out_dir / "history_fair.json") == slurp(out_dir / "history_fedavg.json"));
  CHECK(slurp(out_dir / "model_fair.json") == slurp(out_dir / "model_fedavg.json"));
}

TEST_CASE("run_generate: csv source with remap, natural-key split and device subsplit") {
  auto dir = temp_dir("csv_source");

  // ACS-like pooled table: two states, nine RACE codes, one numeric feature
  {
    std::ofstream out(dir / "pooled.csv");
    out << "ST,SEX,RAC1P,x0,LABEL\n";
    Rng rng(31);
    for (int i = 0; i < 400; ++i) {
      const int st = rng.bernoulli(0.5) ? 1 : 2;
      const int sex = rng.bernoulli(0.5) ? 1 : 2;
      const int race = static_cast<int>(1 + rng.uniform_int(9));
      const int label = rng.bernoulli(st == 1 ? 0.6 : 0.4) ? 1 : 0;
      out << st << ',' << sex << ',' << race << ',' << csv::format_double(rng.normal()) << ','
          << label << '\n';
    }
  }

  const std::string config_text = R"({
    "seed": 7,
    "output_dir": ")" + (dir / "out").string() + R"(",
    "base_task": "ACSIncome",
    "source": {"csv": {"path": ")" + (dir / "pooled.csv").string() + R"(",
      "schema": {
        "columns": [
          {"name": "ST", "kind": "categorical", "allowed_values": [1, 2]},
          {"name": "SEX", "kind": "categorical", "allowed_values": [1, 2]},
          {"name": "RAC1P", "kind": "categorical", "allowed_values": [1,2,3,4,5,6,7,8,9]},
          {"name": "x0", "kind": "numeric"}
        ],
        "label": "LABEL",
        "sensitive": ["SEX", "RAC1P"]
      }}},
    "remap": {"columns": {"RAC1P": {"map": {"1": 1}, "default": 2}}},
    "partition": {"strategy": "natural_key", "column": "ST"},
    "partition_labels": {"1": "AL", "2": "AK"},
    "subsplit": {"strategy": "iid", "n": 2},
    "split_fractions": {"train": 0.6, "validation": 0.2, "test": 0.2},
    "fairness": {"metric": "dd", "level": "attribute"}
  })";

  auto result = run_generate(parse_pipeline_config(config_text));
  REQUIRE(result.fed.size() == 4);  // 2 states x 2 subsets
  CHECK(result.fed.client_id(0) == "AL_0");
  CHECK(result.fed.client_id(3) == "AK_1");
  CHECK(result.fed.metadata.states == std::vector<std::string>{"AL", "AK"});
  CHECK(result.fed.metadata.partitioner == "natural_key(ST) + iid(n=2)");
  CHECK(result.fed.metadata.base_task == "ACSIncome");

  // the remap binarized RAC1P federation-wide
  const Schema& schema = result.fed.splits(std::size_t{0}).train.schema();
  CHECK(schema.column("RAC1P").allowed_values == std::vector<std::int32_t>{1, 2});

  // rows conserved across states and subsets
  std::int64_t total = 0;
  for (std::size_t i = 0; i < result.fed.size(); ++i) {
    const SplitSet& splits = result.fed.splits(i);
    total += splits.train.n() + splits.validation.n() + splits.test.n();
  }
  CHECK(total == 400);
}

TEST_CASE("run_datasheet: byte-identical regeneration from metadata") {
  auto data_dir = temp_dir("datasheet_data");
  auto config = parse_pipeline_config(synthetic_config(data_dir, 88));
  run_generate(config);
  const std::string original = slurp(data_dir / "datasheet.md");

  fs::remove(data_dir / "datasheet.md");
  run_datasheet(data_dir, {});
  CHECK(slurp(data_dir / "datasheet.md") == original);
}

#ifdef FEDFAIR_CLI_PATH
TEST_CASE("CLI: exit codes for ok, config error and data error") {
  auto dir = temp_dir("cli");
  const fs::path config_path = dir / "config.json";
  std::ofstream(config_path) << synthetic_config(dir / "out", 5);

  const std::string cli = FEDFAIR_CLI_PATH;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("generate --config " + config_path.string()) == 0);
  CHECK(fs::exists(dir / "out" / "metadata.json"));

  // invalid config -> 2, naming handled in-process
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{\"unknown_field\": 1}";
  CHECK(run("generate --config " + bad.string()) == 2);

  // missing file -> config error as well (cannot open config)
  CHECK(run("generate --config " + (dir / "missing.json").string()) == 2);

  // evaluate without data_dir in config -> 2; with a bogus dir -> 3
  CHECK(run("evaluate --config " + config_path.string()) == 2);
  const fs::path eval_cfg = dir / "eval.json";
  std::ofstream(eval_cfg) << R"({"data_dir": "/nonexistent_dir_xyz",
    "source": {"synthetic": {"n_clients": 1, "rows_per_client": [10, 10],
      "attrs": [{"name": "A", "values": [1], "shares": [1.0], "rate_shifts": [0.0]}]}}})";
  CHECK(run("evaluate --config " + eval_cfg.string()) == 3);

  // unknown flag -> 2
  CHECK(run("generate --nope") == 2);
}
#endif
