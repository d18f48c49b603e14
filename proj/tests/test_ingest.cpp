#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedfair/error.hpp"
#include "fedfair/ingest.hpp"
#include "helpers.hpp"

using namespace fedfair;
using namespace fedfair::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("fedfair_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("load_csv: well-formed file") {
  auto dir = temp_dir("load_csv");
  std::ofstream(dir / "d.csv") << "SEX,x0,LABEL\n1,0.5,0\n2,1.25,1\n1,-3,0\n";
  auto schema = make_schema({{"SEX", {1, 2}}}, {"x0"});
  auto ds = load_csv(dir / "d.csv", schema);
  CHECK(ds.n() == 3);
  CHECK(ds.categorical("SEX") == std::vector<std::int32_t>{1, 2, 1});
  CHECK(ds.numeric(1) == std::vector<double>{0.5, 1.25, -3});
  CHECK(ds.labels() == std::vector<std::int8_t>{0, 1, 0});
}

TEST_CASE("load_csv: header typo names the column") {
  auto dir = temp_dir("load_csv_typo");
  std::ofstream(dir / "d.csv") << "SXE,x0,LABEL\n1,0.5,0\n";
  auto schema = make_schema({{"SEX", {1, 2}}}, {"x0"});
  CHECK_THROWS_WITH_AS(load_csv(dir / "d.csv", schema), doctest::Contains("SXE"), DataError);
}

TEST_CASE("load_csv: missing value names row and column") {
  auto dir = temp_dir("load_csv_missing");
  std::ofstream(dir / "d.csv") << "SEX,x0,LABEL\n1,,0\n";
  auto schema = make_schema({{"SEX", {1, 2}}}, {"x0"});
  CHECK_THROWS_WITH_AS(load_csv(dir / "d.csv", schema), doctest::Contains("x0"), DataError);
}

TEST_CASE("csv round-trip is byte-identical") {
  SyntheticSpec spec;
  spec.n_clients = 1;
  spec.rows_min = spec.rows_max = 1000;
  spec.attrs = {{"SEX", {1, 2}, {{0.6, 0.4}, {0.1, -0.1}}, {}}};
  spec.feature_dim = 3;
  spec.fractions = {1.0, 0.0, 0.0};
  spec.seed = 11;
  auto fed = generate_synthetic(spec);
  const Dataset& ds = fed.splits(std::size_t{0}).train;

  auto dir = temp_dir("roundtrip");
  write_csv(ds, dir / "a.csv");
  auto reloaded = load_csv(dir / "a.csv", ds.schema_ptr());
  write_csv(reloaded, dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
}

TEST_CASE("apply_remap: binarization and identity") {
  auto schema = make_schema({{"RACE", {1, 2, 3, 4, 5, 6, 7, 8, 9}}});
  auto ds = make_dataset(schema, {{"RACE", {1, 5, 9, 2, 1}}}, {}, {0, 1, 0, 1, 0});

  RemapConfig binarize;
  binarize.columns["RACE"] = {{{1, 1}}, 2};
  auto out = apply_remap(ds, binarize);
  CHECK(out.categorical("RACE") == std::vector<std::int32_t>{1, 2, 2, 2, 1});
  CHECK(out.schema().column("RACE").allowed_values == std::vector<std::int32_t>{1, 2});
  CHECK(validate(out).empty());

  RemapConfig identity;
  identity.columns["RACE"] = {{}, std::nullopt};
  for (auto v : schema->column("RACE").allowed_values) identity.columns["RACE"].map[v] = v;
  auto same = apply_remap(ds, identity);
  CHECK(same.categorical("RACE") == ds.categorical("RACE"));
}

TEST_CASE("apply_remap: five-class value-silo remap conserves counts") {
  auto schema = make_schema({{"RAC1P", {1, 2, 3, 4, 5, 6, 7, 8, 9}}});
  std::vector<std::int32_t> codes;
  std::vector<std::int8_t> labels;
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    codes.push_back(static_cast<std::int32_t>(1 + rng.uniform_int(9)));
    labels.push_back(0);
  }
  auto ds = make_dataset(schema, {{"RAC1P", codes}}, {}, labels);

  // White=1, Black=2, AlaskaIndian(3,4,5)=3, Asian(6)=4, Others(7,8,9)=5
  RemapConfig remap;
  remap.columns["RAC1P"] = {{{1, 1}, {2, 2}, {3, 3}, {4, 3}, {5, 3}, {6, 4}}, 5};
  auto out = apply_remap(ds, remap);

  auto count = [](const std::vector<std::int32_t>& xs, std::int32_t v) {
    return std::count(xs.begin(), xs.end(), v);
  };
  CHECK(count(out.categorical("RAC1P"), 1) == count(codes, 1));
  CHECK(count(out.categorical("RAC1P"), 3) ==
        count(codes, 3) + count(codes, 4) + count(codes, 5));
  CHECK(count(out.categorical("RAC1P"), 5) ==
        count(codes, 7) + count(codes, 8) + count(codes, 9));
  CHECK(out.n() == ds.n());
}

TEST_CASE("apply_remap: unmapped code without default is an error") {
  auto schema = make_schema({{"RACE", {1, 2, 3}}});
  auto ds = make_dataset(schema, {{"RACE", {1, 3}}}, {}, {0, 0});
  RemapConfig remap;
  remap.columns["RACE"] = {{{1, 1}, {2, 2}}, std::nullopt};
  CHECK_THROWS_AS(apply_remap(ds, remap), DataError);
}

TEST_CASE("generate_synthetic: deterministic per seed") {
  SyntheticSpec spec;
  spec.n_clients = 3;
  spec.rows_min = 100;
  spec.rows_max = 200;
  spec.attrs = {{"SEX", {1, 2}, {{0.5, 0.5}, {0.15, -0.15}}, {}}};
  spec.feature_dim = 2;
  spec.seed = 21;
  auto a = generate_synthetic(spec);
  auto b = generate_synthetic(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.client_id(i) == b.client_id(i));
    CHECK(a.splits(i).train.labels() == b.splits(i).train.labels());
    CHECK(a.splits(i).train.numeric(1) == b.splits(i).train.numeric(1));
    CHECK(a.splits(i).train.row_ids() == b.splits(i).train.row_ids());
  }
}

TEST_CASE("generate_synthetic: zero share means zero rows") {
  SyntheticSpec spec;
  spec.n_clients = 1;
  spec.rows_min = spec.rows_max = 300;
  spec.attrs = {{"RACE", {1, 2, 3}, {{0.5, 0.5, 0.0}, {0.0, 0.0, 0.0}}, {}}};
  spec.feature_dim = 0;
  spec.fractions = {1.0, 0.0, 0.0};
  spec.seed = 5;
  auto fed = generate_synthetic(spec);
  CHECK(group_index(fed.splits(std::size_t{0}).train, "RACE", 3).empty());
}

TEST_CASE("generate_synthetic: planted label DD close to the configured gap") {
  // P(Y=1|SEX=1)=0.6, P(Y=1|SEX=2)=0.3 -> true-label DD(SEX) = 0.30 +- 0.02
  SyntheticSpec spec;
  spec.n_clients = 1;
  spec.rows_min = spec.rows_max = 10000;
  spec.base_rate = 0.45;
  spec.attrs = {{"SEX", {1, 2}, {{0.5, 0.5}, {0.15, -0.15}}, {}}};
  spec.feature_dim = 1;
  spec.fractions = {1.0, 0.0, 0.0};
  spec.seed = 17;
  auto fed = generate_synthetic(spec);
  const Dataset& ds = fed.splits(std::size_t{0}).train;

  auto rate = [&](std::int32_t v) {
    auto rows = group_index(ds, "SEX", v);
    std::int64_t pos = 0;
    for (auto r : rows) pos += ds.label(r);
    return static_cast<double>(pos) / static_cast<double>(rows.size());
  };
  CHECK(std::abs(std::abs(rate(1) - rate(2)) - 0.30) < 0.02);
}

TEST_CASE("generate_synthetic: empirical shares within 3pp for n >= 1000") {
  SyntheticSpec spec;
  spec.n_clients = 2;
  spec.rows_min = spec.rows_max = 1000;
  spec.attrs = {{"RACE", {1, 2, 3}, {{0.2, 0.5, 0.3}, {0.0, 0.0, 0.0}}, {}}};
  spec.feature_dim = 0;
  spec.fractions = {1.0, 0.0, 0.0};
  spec.seed = 13;
  auto fed = generate_synthetic(spec);
  for (std::size_t c = 0; c < fed.size(); ++c) {
    const Dataset& ds = fed.splits(c).train;
    const double n = static_cast<double>(ds.n());
    CHECK(std::abs(group_index(ds, "RACE", 1).size() / n - 0.2) < 0.03);
    CHECK(std::abs(group_index(ds, "RACE", 2).size() / n - 0.5) < 0.03);
    CHECK(std::abs(group_index(ds, "RACE", 3).size() / n - 0.3) < 0.03);
  }
}

TEST_CASE("write_csv: empty dataset is a header-only file") {
  auto dir = temp_dir("empty_csv");
  auto schema = make_schema({{"SEX", {1, 2}}}, {"x0"});
  write_csv(Dataset::empty(schema), dir / "empty.csv");
  CHECK(slurp(dir / "empty.csv") == "SEX,x0,LABEL\n");
}

TEST_CASE("write_federation: layout and metadata round-trip") {
  SyntheticSpec spec;
  spec.n_clients = 2;
  spec.rows_min = spec.rows_max = 60;
  spec.attrs = {{"SEX", {1, 2}, {{0.5, 0.5}, {0.1, -0.1}}, {}}};
  spec.feature_dim = 1;
  spec.seed = 31;
  auto fed = generate_synthetic(spec);
  Modification mod;
  mod.kind = ModKind::drop;
  mod.attr = "SEX";
  mod.value = 2;
  mod.fraction = 0.25;
  mod.seed = 77;
  mod.clients = {"client_00"};
  fed.metadata.modifications.push_back(mod);
  fed.metadata.threshold_rule = "test rule";

  auto dir = temp_dir("federation");
  write_federation(fed, dir);
  for (const auto& id : {"client_00", "client_01"})
    for (const auto& part : {"train", "validation", "test"})
      CHECK(fs::exists(dir / (std::string(id) + "_" + part + ".csv")));
  CHECK(fs::exists(dir / "metadata.json"));

  auto reloaded = read_federation(dir);
  CHECK(reloaded.metadata == fed.metadata);
  REQUIRE(reloaded.size() == fed.size());
  for (std::size_t i = 0; i < fed.size(); ++i) {
    CHECK(reloaded.client_id(i) == fed.client_id(i));
    CHECK(reloaded.splits(i).train.labels() == fed.splits(i).train.labels());
    CHECK(reloaded.splits(i).train.numeric(1) == fed.splits(i).train.numeric(1));
  }
}

TEST_CASE("default ACS schemas are self-consistent") {
  for (const auto& schema : {acs_income_schema(), acs_employment_schema()}) {
    CHECK(validate(Dataset::empty(schema)).empty());
    CHECK(schema->is_sensitive("SEX"));
    CHECK(schema->is_sensitive("RAC1P"));
    CHECK(schema->index_of("ST") >= 0);
  }
}

TEST_CASE("largest_remainder_counts apportions exactly") {
  CHECK(largest_remainder_counts({0.5, 0.5}, 3) == std::vector<std::int64_t>{2, 1});
  CHECK(largest_remainder_counts({0.2, 0.5, 0.3}, 10) == std::vector<std::int64_t>{2, 5, 3});
  auto counts = largest_remainder_counts({1.0 / 3, 1.0 / 3, 1.0 / 3}, 100);
  CHECK(counts[0] + counts[1] + counts[2] == 100);
}
