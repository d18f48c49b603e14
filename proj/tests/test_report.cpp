#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedfair/error.hpp"
#include "fedfair/ingest.hpp"
#include "fedfair/report.hpp"
#include "helpers.hpp"

using namespace fedfair;
using namespace fedfair::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("fedfair_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ClientEval make_eval(double sex_max, std::int32_t argmax_value, double acc,
                     const std::string& source) {
  ClientEval eval;
  eval.report.metric = Metric::dd;
  eval.report.level = FairnessLevel::value;
  eval.report.source = source;
  AttrTable table;
  table.attr = "SEX";
  table.max_value = sex_max;
  table.argmax_value = argmax_value;
  eval.report.attributes = {table};
  eval.accuracy = acc;
  eval.n = 100;
  return eval;
}

FederatedDataset small_federation() {
  SyntheticSpec spec;
  spec.n_clients = 2;
  spec.rows_min = spec.rows_max = 200;
  spec.base_rate = 0.5;
  spec.attrs = {{"SEX", {1, 2}, {{0.5, 0.5}, {0.15, -0.15}}, {}}};
  spec.feature_dim = 1;
  spec.seed = 5;
  return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("client_stats: empty federation, sizes, true-label DD cross-check") {
  FederatedDataset empty;
  CHECK(client_stats(empty).rows.empty());

  auto fed = small_federation();
  auto table = client_stats(fed);
  REQUIRE(table.rows.size() == 2);
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const auto& row = table.rows[i];
    CHECK(row.client == fed.client_id(i));
    CHECK(row.n_train == fed.splits(i).train.n());
    CHECK(row.n_validation == fed.splits(i).validation.n());
    CHECK(row.n_test == fed.splits(i).test.n());
    REQUIRE(row.label_dd.size() == 1);
    CHECK(row.label_dd[0].first == "SEX");
    CHECK(row.label_dd[0].second.has_value());
  }
}

TEST_CASE("compare: deltas, diagonal cases, totality") {
  std::map<ClientId, ClientEval> local{{"a", make_eval(0.2, 2, 0.8, "local")},
                                       {"b", make_eval(0.1, 2, 0.7, "local")}};
  std::map<ClientId, ClientEval> global{{"a", make_eval(0.3, 8, 0.75, "global")},
                                        {"b", make_eval(0.1, 2, 0.72, "global")}};
  std::map<ClientId, std::optional<BiasTarget>> labels{
      {"a", BiasTarget{"SEX", std::nullopt}}, {"b", std::nullopt}};
  auto report = compare(local, global, labels);
  REQUIRE(report.entries.size() == 2);  // clients x attrs

  const auto& ea = report.entries[0];
  CHECK(ea.client == "a");
  CHECK(*ea.delta == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(*ea.argmax_before == 2);
  CHECK(*ea.argmax_after == 8);  // value shift recorded
  REQUIRE(ea.biased_toward.has_value());
  CHECK(ea.biased_toward->attr == "SEX");

  const auto& eb = report.entries[1];
  CHECK(*eb.delta == 0.0);  // identical reports sit on the diagonal
  CHECK(report.accuracies.at("a") == std::pair<double, double>{0.8, 0.75});

  std::map<ClientId, ClientEval> missing{{"a", make_eval(0.2, 2, 0.8, "local")}};
  CHECK_THROWS_AS(compare(missing, global), ConfigError);
}

TEST_CASE("emit_svg: structure, determinism, point counts") {
  std::map<ClientId, ClientEval> local, global;
  std::map<ClientId, std::optional<BiasTarget>> labels;
  for (int c = 0; c < 5; ++c) {
    const std::string id = "c" + std::to_string(c);
    local[id] = make_eval(0.05 + 0.03 * c, 2, 0.8, "local");
    global[id] = make_eval(0.10 + 0.02 * c, c % 2 ? 2 : 8, 0.75, "global");
    labels[id] = c % 2 ? std::optional<BiasTarget>{} : BiasTarget{"SEX", std::nullopt};
  }
  auto report = compare(local, global, labels);

  auto dir = temp_dir("svg");
  emit_svg(report, PlotKind::scatter, dir / "scatter.svg");
  emit_svg(report, PlotKind::bars, dir / "bars.svg");
  emit_svg(report, PlotKind::value_shift, dir / "shift.svg");

  const std::string scatter = slurp(dir / "scatter.svg");
  CHECK(scatter.find("<svg") != std::string::npos);
  CHECK(scatter.rfind("</svg>\n") == scatter.size() - 7);
  // unit diagonal plus one circle per (client, attr)
  std::size_t circles = 0;
  for (std::size_t pos = scatter.find("<circle"); pos != std::string::npos;
       pos = scatter.find("<circle", pos + 1))
    ++circles;
  CHECK(circles == 5);
  CHECK(scatter.find("stroke-dasharray") != std::string::npos);

  emit_svg(report, PlotKind::scatter, dir / "scatter2.svg");
  CHECK(slurp(dir / "scatter.svg") == slurp(dir / "scatter2.svg"));

  // empty comparison still renders axes-only documents
  ComparisonReport empty;
  empty.metric = Metric::dd;
  emit_svg(empty, PlotKind::scatter, dir / "empty.svg");
  const std::string empty_svg = slurp(dir / "empty.svg");
  CHECK(empty_svg.find("<svg") != std::string::npos);
  CHECK(empty_svg.find("<circle") == std::string::npos);
}

TEST_CASE("comparison report serializes to JSON and CSV") {
  std::map<ClientId, ClientEval> local{{"a", make_eval(0.2, 2, 0.8, "local")}};
  std::map<ClientId, ClientEval> global{{"a", make_eval(0.3, 8, 0.75, "global")}};
  auto report = compare(local, global);
  auto j = report.to_json();
  CHECK(j.at("entries").size() == 1);
  CHECK(j.at("entries")[0].at("delta").get<double>() == doctest::Approx(0.1));

  auto dir = temp_dir("comparison_csv");
  report.write_csv(dir / "comparison.csv");
  const std::string csv_text = slurp(dir / "comparison.csv");
  CHECK(csv_text.find("client,attr,local,global,delta") == 0);
  CHECK(csv_text.find("\na,SEX,0.2,0.3,") != std::string::npos);
}

TEST_CASE("generate_datasheet: required fields, modification rows, determinism") {
  GenerationRecord record;
  record.base_task = "ACSIncome";
  record.year = 2018;
  record.horizon = "1-Year";
  record.states = {"WY", "CA"};
  record.partitioner = "natural_key(ST)";
  record.split_fractions = {0.8, 0.1, 0.1};
  record.seed = 424242;
  Modification mod;
  mod.kind = ModKind::drop;
  mod.attr = "SEX";
  mod.value = 2;
  mod.fraction = 0.1;
  mod.seed = 7;
  mod.clients = {"WY"};
  record.modifications = {mod};
  record.threshold_rule = "dual-model rule, threshold 0.09";
  record.config_json = "{\"seed\": 424242}";

  auto fed = small_federation();
  std::vector<std::pair<ClientId, FairnessReport>> reports;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    auto full = concat({&fed.splits(i).train, &fed.splits(i).validation, &fed.splits(i).test});
    reports.emplace_back(fed.client_id(i),
                         fairness_table(full, {"SEX"}, Metric::dd, FairnessLevel::value));
  }

  const std::string sheet = generate_datasheet(record, reports);
  CHECK(sheet.find("424242") != std::string::npos);      // seed appears
  CHECK(sheet.find("ACSIncome") != std::string::npos);
  CHECK(sheet.find("| WY | drop | 0.1 | SEX | 2 |") != std::string::npos);
  CHECK(sheet.find("dual-model rule") != std::string::npos);
  CHECK(sheet.find("client_00") != std::string::npos);   // fairness summary rows
  CHECK(generate_datasheet(record, reports) == sheet);   // byte-identical regeneration

  GenerationRecord minimal;
  const std::string empty_sheet = generate_datasheet(minimal, {});
  CHECK(empty_sheet.find("none") != std::string::npos);
  CHECK(empty_sheet.find("(no reports)") != std::string::npos);
}

TEST_CASE("emit_report_bars_svg: deterministic, covers clients") {
  auto fed = small_federation();
  std::vector<std::pair<ClientId, FairnessReport>> reports;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    auto full = concat({&fed.splits(i).train, &fed.splits(i).validation, &fed.splits(i).test});
    reports.emplace_back(fed.client_id(i),
                         fairness_table(full, {"SEX"}, Metric::dd, FairnessLevel::attribute));
  }
  auto dir = temp_dir("bars");
  emit_report_bars_svg(reports, dir / "a.svg", "true-label dd per client");
  emit_report_bars_svg(reports, dir / "b.svg", "true-label dd per client");
  CHECK(slurp(dir / "a.svg") == slurp(dir / "b.svg"));
  const std::string svg = slurp(dir / "a.svg");
  std::size_t rects = 0;
  for (std::size_t pos = svg.find("<rect"); pos != std::string::npos;
       pos = svg.find("<rect", pos + 1))
    ++rects;
  CHECK(rects >= 3);  // background + one bar per client (+ legend)
}
