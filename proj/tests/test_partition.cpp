#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "fedfair/error.hpp"
#include "fedfair/ingest.hpp"
#include "fedfair/partition.hpp"
#include "helpers.hpp"

using namespace fedfair;
using namespace fedfair::testing;

namespace {

Dataset random_labeled(std::int64_t n, double positive_rate, std::uint64_t seed) {
  auto schema = make_schema({{"SEX", {1, 2}}}, {"x0"});
  std::vector<std::int32_t> sex;
  std::vector<double> x;
  std::vector<std::int8_t> y;
  Rng rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    sex.push_back(rng.bernoulli(0.5) ? 1 : 2);
    x.push_back(rng.normal());
    y.push_back(rng.bernoulli(positive_rate) ? 1 : 0);
  }
  return make_dataset(schema, {{"SEX", sex}}, {{"x0", x}}, y);
}

std::vector<std::int64_t> sorted_ids(const Dataset& ds) {
  auto ids = ds.row_ids();
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::int64_t> sorted_ids(const std::vector<Dataset>& parts) {
  std::vector<std::int64_t> ids;
  for (const auto& p : parts) ids.insert(ids.end(), p.row_ids().begin(), p.row_ids().end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

double label_share(const Dataset& ds) {
  double pos = 0;
  for (std::int64_t r = 0; r < ds.n(); ++r) pos += ds.label(r);
  return pos / static_cast<double>(ds.n());
}

}  // namespace

TEST_CASE("split_by_key: one client per observed key, rows conserved") {
  auto schema = make_schema({{"ST", {1, 2, 3}}, {"SEX", {1, 2}}});
  auto ds = make_dataset(schema, {{"ST", {2, 1, 2, 3, 1, 2}}, {"SEX", {1, 2, 1, 2, 1, 2}}}, {},
                         {0, 1, 0, 1, 0, 1});
  auto fed = split_by_key(ds, "ST");
  REQUIRE(fed.size() == 3);
  CHECK(fed.client_id(0) == "1");
  CHECK(fed.client_id(1) == "2");
  CHECK(fed.client_id(2) == "3");
  std::int64_t total = 0;
  for (std::size_t i = 0; i < fed.size(); ++i) total += fed.splits(i).train.n();
  CHECK(total == ds.n());

  auto labeled = split_by_key(ds, "ST", {{1, "AL"}, {2, "AK"}, {3, "AZ"}});
  CHECK(labeled.client_id(0) == "AL");
}

TEST_CASE("split_by_key: single key value yields one client with everything") {
  auto schema = make_schema({{"ST", {7}}});
  auto ds = make_dataset(schema, {{"ST", {7, 7, 7}}}, {}, {0, 1, 0});
  auto fed = split_by_key(ds, "ST");
  REQUIRE(fed.size() == 1);
  CHECK(fed.splits(std::size_t{0}).train.n() == 3);
}

TEST_CASE("split_by_key: absent or non-categorical key errors") {
  auto schema = make_schema({{"ST", {1}}}, {"x0"});
  auto ds = make_dataset(schema, {{"ST", {1}}}, {{"x0", {0.0}}}, {0});
  CHECK_THROWS_AS(split_by_key(ds, "NOPE"), ConfigError);
  CHECK_THROWS_AS(split_by_key(ds, "x0"), ConfigError);
}

TEST_CASE("partition_iid: sizes and conservation") {
  auto ds = random_labeled(10, 0.5, 1);
  auto parts = partition_iid(ds, 3, 42);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].n() == 4);
  CHECK(parts[1].n() == 3);
  CHECK(parts[2].n() == 3);
  CHECK(sorted_ids(parts) == sorted_ids(ds));

  auto single = partition_iid(ds, 1, 42);
  CHECK(single[0].n() == 10);
  CHECK(sorted_ids({single[0]}) == sorted_ids(ds));

  CHECK_THROWS_AS(partition_iid(ds, 11, 0), ConfigError);
}

TEST_CASE("partition_iid: label shares near pooled at N=10000, n=4") {
  auto ds = random_labeled(10000, 0.4, 2);
  const double pooled = label_share(ds);
  for (const auto& part : partition_iid(ds, 4, 7))
    CHECK(std::abs(label_share(part) - pooled) < 0.05);
}

TEST_CASE("partition_dirichlet: alpha -> infinity behaves like IID") {
  auto ds = random_labeled(20000, 0.5, 3);
  const double pooled = label_share(ds);
  auto parts = partition_dirichlet(ds, 4, 1e6, 1, 11);
  REQUIRE(parts.size() == 4);
  CHECK(sorted_ids(parts) == sorted_ids(ds));
  for (const auto& part : parts) CHECK(std::abs(label_share(part) - pooled) < 0.02);
}

TEST_CASE("partition_dirichlet: small alpha skews label shares") {
  auto ds = random_labeled(20000, 0.5, 4);
  const double pooled = label_share(ds);
  auto parts = partition_dirichlet(ds, 4, 0.1, 1, 5);
  double max_dev = 0;
  for (const auto& part : parts)
    max_dev = std::max(max_dev, std::abs(label_share(part) - pooled));
  CHECK(max_dev >= 0.20);
  CHECK(sorted_ids(parts) == sorted_ids(ds));
}

TEST_CASE("partition_dirichlet: infeasible min_size errors") {
  auto ds = random_labeled(20, 0.5, 5);
  CHECK_THROWS_WITH_AS(partition_dirichlet(ds, 2, 1.0, 12, 9),
                       doctest::Contains("min_partition_size"), DataError);
}

TEST_CASE("partition_linear: forced sizes and conservation") {
  auto tiny = random_labeled(3, 0.5, 6);
  auto parts = partition_linear(tiny, 2, 1);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].n() == 1);
  CHECK(parts[1].n() == 2);

  auto ds = random_labeled(1000, 0.5, 7);
  auto four = partition_linear(ds, 4, 2);
  CHECK(four[0].n() == 100);
  CHECK(four[1].n() == 200);
  CHECK(four[2].n() == 300);
  CHECK(four[3].n() == 400);
  CHECK(sorted_ids(four) == sorted_ids(ds));

  CHECK_THROWS_AS(partition_linear(tiny, 3, 0), ConfigError);  // needs 6 rows
}

TEST_CASE("split_train_val_test: fractions, residue to train, conservation") {
  auto ds = random_labeled(100, 0.5, 8);
  auto all_train = split_train_val_test(ds, {1.0, 0.0, 0.0}, 3);
  CHECK(all_train.train.n() == 100);
  CHECK(all_train.validation.n() == 0);
  CHECK(all_train.test.n() == 0);

  auto splits = split_train_val_test(ds, {0.8, 0.1, 0.1}, 3);
  CHECK(splits.train.n() == 80);
  CHECK(splits.validation.n() == 10);
  CHECK(splits.test.n() == 10);

  std::vector<std::int64_t> ids;
  for (const Dataset* d : {&splits.train, &splits.validation, &splits.test})
    ids.insert(ids.end(), d->row_ids().begin(), d->row_ids().end());
  std::sort(ids.begin(), ids.end());
  CHECK(ids == sorted_ids(ds));

  CHECK_THROWS_AS(split_train_val_test(ds, {0.5, 0.2, 0.2}, 0), ConfigError);
}

TEST_CASE("assign_device_roles: counts, determinism, coverage") {
  SyntheticSpec spec;
  spec.n_clients = 10;
  spec.rows_min = spec.rows_max = 20;
  spec.attrs = {{"SEX", {1, 2}, {{0.5, 0.5}, {0.0, 0.0}}, {}}};
  spec.feature_dim = 0;
  spec.seed = 1;
  auto fed = generate_synthetic(spec);

  auto roles = assign_device_roles(fed, 0.3, 5);
  CHECK(roles.test_clients.size() == 3);
  CHECK(roles.train_clients.size() == 7);

  auto again = assign_device_roles(fed, 0.3, 5);
  CHECK(roles.test_clients == again.test_clients);

  std::set<ClientId> all;
  for (const auto& id : roles.train_clients) all.insert(id);
  for (const auto& id : roles.test_clients) all.insert(id);
  CHECK(all.size() == 10);

  SyntheticSpec one = spec;
  one.n_clients = 1;
  CHECK_THROWS_AS(assign_device_roles(generate_synthetic(one), 0.3, 0), ConfigError);
}

TEST_CASE("partitioners are deterministic under a fixed seed") {
  auto ds = random_labeled(500, 0.5, 10);
  CHECK(sorted_ids(partition_iid(ds, 5, 77)) == sorted_ids(partition_iid(ds, 5, 77)));
  auto a = partition_dirichlet(ds, 3, 0.5, 1, 88);
  auto b = partition_dirichlet(ds, 3, 0.5, 1, 88);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].row_ids() == b[i].row_ids());
  auto la = partition_linear(ds, 4, 99);
  auto lb = partition_linear(ds, 4, 99);
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].row_ids() == lb[i].row_ids());
}
