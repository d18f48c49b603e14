#include "fedfair/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fedfair/error.hpp"
#include "fedfair/ingest.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

std::int64_t round_half_away(double x) {
  return static_cast<std::int64_t>(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

std::string PartitionConfig::describe() const {
  switch (strategy) {
    case PartitionStrategy::natural_key:
      return "natural_key(" + key_column + ")";
    case PartitionStrategy::iid:
      return "iid(n=" + std::to_string(n) + ")";
    case PartitionStrategy::dirichlet: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "dirichlet(n=%d, alpha=%g, min_size=%lld)", n, alpha,
                    static_cast<long long>(min_partition_size));
      return buf;
    }
    case PartitionStrategy::linear:
      return "linear(n=" + std::to_string(n) + ")";
  }
  return "?";
}

FederatedDataset split_by_key(const Dataset& pooled, const std::string& key_column,
                              const std::map<std::int32_t, std::string>& labels) {
  const Schema& schema = pooled.schema();
  int idx = schema.index_of(key_column);
  if (idx < 0) throw ConfigError("split_by_key: key column '" + key_column + "' absent");
  if (schema.columns[static_cast<std::size_t>(idx)].kind != ColumnKind::categorical)
    throw ConfigError("split_by_key: key column '" + key_column + "' is not categorical");

  const auto& codes = pooled.categorical(idx);
  std::map<std::int32_t, std::vector<std::int64_t>> by_key;
  for (std::size_t r = 0; r < codes.size(); ++r)
    by_key[codes[r]].push_back(static_cast<std::int64_t>(r));

  FederatedDataset fed;
  for (const auto& [code, rows] : by_key) {
    auto it = labels.find(code);
    ClientId id = it != labels.end() ? it->second : std::to_string(code);
    SplitSet splits;
    splits.train = pooled.take(rows);
    splits.validation = Dataset::empty(pooled.schema_ptr());
    splits.test = Dataset::empty(pooled.schema_ptr());
    fed.add_client(std::move(id), std::move(splits));
  }
  return fed;
}

namespace {

std::vector<Dataset> take_chunks(const Dataset& dataset, const std::vector<std::size_t>& order,
                                 const std::vector<std::int64_t>& sizes) {
  std::vector<Dataset> out;
  out.reserve(sizes.size());
  std::size_t pos = 0;
  for (auto size : sizes) {
    std::vector<std::int64_t> rows;
    rows.reserve(static_cast<std::size_t>(size));
    for (std::int64_t i = 0; i < size; ++i)
      rows.push_back(static_cast<std::int64_t>(order[pos++]));
    out.push_back(dataset.take(rows));
  }
  return out;
}

// Symmetric Dirichlet(alpha) over n cells via normalized Gamma draws
// (Marsaglia-Tsang, with the alpha<1 boost).
std::vector<double> dirichlet_draw(int n, double alpha, Rng& rng) {
  auto gamma_draw = [&rng](double shape) {
    double boost = 1.0;
    if (shape < 1.0) {
      boost = std::pow(rng.uniform() + 1e-300, 1.0 / shape);
      shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = rng.normal();
      double v = 1.0 + c * x;
      if (v <= 0) continue;
      v = v * v * v;
      double u = rng.uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v;
      if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v;
    }
  };
  std::vector<double> out(static_cast<std::size_t>(n));
  double total = 0;
  for (auto& v : out) {
    v = gamma_draw(alpha);
    total += v;
  }
  if (total <= 0) {  // degenerate underflow; fall back to uniform
    for (auto& v : out) v = 1.0 / n;
    return out;
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace

std::vector<Dataset> partition_iid(const Dataset& dataset, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("partition_iid: n must be >= 1");
  if (static_cast<std::int64_t>(n) > dataset.n())
    throw ConfigError("partition_iid: n exceeds the number of rows");
  Rng rng(seed);
  auto order = shuffled_indices(static_cast<std::size_t>(dataset.n()), rng);
  const std::int64_t base = dataset.n() / n;
  const std::int64_t extra = dataset.n() % n;
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(n), base);
  for (std::int64_t i = 0; i < extra; ++i) sizes[static_cast<std::size_t>(i)] += 1;
  return take_chunks(dataset, order, sizes);
}

std::vector<Dataset> partition_dirichlet(const Dataset& dataset, int n, double alpha,
                                         std::int64_t min_size, std::uint64_t seed) {
  if (n < 2) throw ConfigError("partition_dirichlet: n must be >= 2");
  if (alpha <= 0) throw ConfigError("partition_dirichlet: alpha must be > 0");
  if (min_size < 1) throw ConfigError("partition_dirichlet: min_partition_size must be >= 1");

  // Row indices per label class, each shuffled once up front.
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::int64_t r = 0; r < dataset.n(); ++r)
    by_class[static_cast<std::size_t>(dataset.label(r))].push_back(static_cast<std::size_t>(r));
  for (auto& rows : by_class) {
    std::vector<std::size_t> idx = shuffled_indices(rows.size(), rng);
    std::vector<std::size_t> shuffled(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) shuffled[i] = rows[idx[i]];
    rows = std::move(shuffled);
  }

  constexpr int kMaxRetries = 100;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::vector<std::vector<std::int64_t>> assigned(static_cast<std::size_t>(n));
    for (const auto& rows : by_class) {
      if (rows.empty()) continue;
      std::vector<double> props = dirichlet_draw(n, alpha, rng);
      std::vector<std::int64_t> counts =
          largest_remainder_counts(props, static_cast<std::int64_t>(rows.size()));
      std::size_t pos = 0;
      for (int p = 0; p < n; ++p)
        for (std::int64_t i = 0; i < counts[static_cast<std::size_t>(p)]; ++i)
          assigned[static_cast<std::size_t>(p)].push_back(
              static_cast<std::int64_t>(rows[pos++]));
    }
    bool feasible = true;
    for (const auto& rows : assigned)
      if (static_cast<std::int64_t>(rows.size()) < min_size) feasible = false;
    if (!feasible) continue;
    std::vector<Dataset> out;
    out.reserve(static_cast<std::size_t>(n));
    for (auto& rows : assigned) {
      std::sort(rows.begin(), rows.end());
      out.push_back(dataset.take(rows));
    }
    return out;
  }
  throw DataError("partition_dirichlet: could not satisfy min_partition_size=" +
                  std::to_string(min_size) + " with n=" + std::to_string(n) + ", N=" +
                  std::to_string(dataset.n()) + " after " + std::to_string(kMaxRetries) +
                  " draws");
}

std::vector<Dataset> partition_linear(const Dataset& dataset, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("partition_linear: n must be >= 1");
  const std::int64_t weight_total = static_cast<std::int64_t>(n) * (n + 1) / 2;
  if (weight_total > dataset.n())
    throw ConfigError("partition_linear: need at least n(n+1)/2 rows");
  Rng rng(seed);
  auto order = shuffled_indices(static_cast<std::size_t>(dataset.n()), rng);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(n));
  std::int64_t used = 0;
  for (int i = 1; i < n; ++i) {
    sizes[static_cast<std::size_t>(i - 1)] = static_cast<std::int64_t>(
        std::floor(static_cast<double>(i) / static_cast<double>(weight_total) *
                   static_cast<double>(dataset.n())));
    used += sizes[static_cast<std::size_t>(i - 1)];
  }
  sizes[static_cast<std::size_t>(n - 1)] = dataset.n() - used;
  return take_chunks(dataset, order, sizes);
}

SplitSet split_train_val_test(const Dataset& dataset, const SplitFractions& fractions,
                              std::uint64_t seed) {
  if (fractions.train < 0 || fractions.validation < 0 || fractions.test < 0)
    throw ConfigError("split_train_val_test: fractions must be >= 0");
  if (std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9)
    throw ConfigError("split_train_val_test: fractions must sum to 1");

  Rng rng(seed);
  auto order = shuffled_indices(static_cast<std::size_t>(dataset.n()), rng);
  std::int64_t n_val = round_half_away(fractions.validation * static_cast<double>(dataset.n()));
  std::int64_t n_test = round_half_away(fractions.test * static_cast<double>(dataset.n()));
  n_val = std::min(n_val, dataset.n());
  n_test = std::min(n_test, dataset.n() - n_val);
  const std::int64_t n_train = dataset.n() - n_val - n_test;

  auto chunks = take_chunks(dataset, order, {n_train, n_val, n_test});
  SplitSet out;
  out.train = std::move(chunks[0]);
  out.validation = std::move(chunks[1]);
  out.test = std::move(chunks[2]);
  return out;
}

DeviceRoles assign_device_roles(const FederatedDataset& fed, double test_client_fraction,
                                std::uint64_t seed) {
  const std::size_t k = fed.size();
  if (k < 2) throw ConfigError("assign_device_roles: need at least two clients");
  if (!(test_client_fraction > 0 && test_client_fraction < 1))
    throw ConfigError("assign_device_roles: fraction must be in (0, 1)");
  std::int64_t n_test = round_half_away(test_client_fraction * static_cast<double>(k));
  n_test = std::max<std::int64_t>(1, std::min<std::int64_t>(n_test, static_cast<std::int64_t>(k) - 1));

  Rng rng(seed);
  auto picks = rng.sample_without_replacement(k, static_cast<std::size_t>(n_test));
  std::vector<bool> is_test(k, false);
  for (auto i : picks) is_test[i] = true;

  DeviceRoles roles;
  for (std::size_t i = 0; i < k; ++i) {
    if (is_test[i])
      roles.test_clients.push_back(fed.client_id(i));
    else
      roles.train_clients.push_back(fed.client_id(i));
  }
  return roles;
}

}  // namespace fedfair
