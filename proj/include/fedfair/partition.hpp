#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedfair/tabular.hpp"

namespace fedfair {

enum class PartitionStrategy { natural_key, iid, dirichlet, linear };

struct PartitionConfig {
  PartitionStrategy strategy = PartitionStrategy::iid;
  std::string key_column;       // natural_key only
  int n = 1;                    // iid / dirichlet / linear
  double alpha = 0.5;           // dirichlet only, > 0
  std::int64_t min_partition_size = 1;
  std::uint64_t seed = 0;

  std::string describe() const;
};

// One client per observed key code, keyed ascending. Optional labels give
// clients human-readable ids (e.g. FIPS code -> state abbreviation); rows
// land in full in the train part of each client's SplitSet.
FederatedDataset split_by_key(const Dataset& pooled, const std::string& key_column,
                              const std::map<std::int32_t, std::string>& labels = {});

// Seeded permutation, then near-equal contiguous chunks (sizes differ by at
// most one; the first N mod n chunks are the larger ones).
std::vector<Dataset> partition_iid(const Dataset& dataset, int n, std::uint64_t seed);

// Label-skewed split: per label class, partition proportions are drawn from
// a symmetric Dirichlet(alpha) and rows are apportioned by largest
// remainder. Resamples (bounded) until every partition has min_size rows.
std::vector<Dataset> partition_dirichlet(const Dataset& dataset, int n, double alpha,
                                         std::int64_t min_size, std::uint64_t seed);

// Partition i (1-indexed) receives share i / (n(n+1)/2) after a seeded
// shuffle; the rounding residue goes to the last partition.
std::vector<Dataset> partition_linear(const Dataset& dataset, int n, std::uint64_t seed);

// Seeded shuffle then contiguous cut. Validation/test sizes are
// round(fraction * N) (half away from zero); the residue goes to train.
SplitSet split_train_val_test(const Dataset& dataset, const SplitFractions& fractions,
                              std::uint64_t seed);

struct DeviceRoles {
  std::vector<ClientId> train_clients;
  std::vector<ClientId> test_clients;
};

// Cross-device grouping: |test| = round(fraction * K), at least one client
// on each side, sampled without replacement.
DeviceRoles assign_device_roles(const FederatedDataset& fed, double test_client_fraction,
                                std::uint64_t seed);

// round(x) half away from zero, the rounding rule used across the library.
std::int64_t round_half_away(double x);

}  // namespace fedfair
