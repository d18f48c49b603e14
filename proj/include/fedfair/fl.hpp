#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedfair/fairness.hpp"
#include "fedfair/models.hpp"
#include "fedfair/tabular.hpp"

namespace fedfair {

struct FLConfig {
  int rounds = 50;        // R
  int local_epochs = 1;   // E
  double client_fraction = 1.0;  // chi
  int batch_size = 32;
  double learning_rate = 0.1;
  double l2_penalty = 1e-4;
  Optimizer optimizer = Optimizer::sgd;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool include_sensitive = true;

  void check() const;
  TrainConfig local_train_config() const;
};

struct FairRegConfig {
  double lambda = 0.5;      // 0 = pure utility, 1 = pure fairness
  double target_dd = 0.05;  // T, reported alongside results
  std::string target_attr;

  void check() const;
};

struct RoundRecord {
  int round = 0;
  std::vector<ClientId> participants;
  std::vector<std::int64_t> sizes;  // n_k per participant
  double train_accuracy = 0;
  std::optional<double> val_accuracy;
  // Hard-prediction DD per sensitive attribute on the pooled validation
  // split (train pool when no validation rows exist). nullopt = undefined.
  std::vector<std::pair<std::string, std::optional<double>>> dd;
};

struct RoundHistory {
  std::optional<FairRegConfig> fair;  // echoed only for lambda > 0 runs
  std::vector<RoundRecord> rounds;

  ordered_json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct FlResult {
  LinearModel model;
  RoundHistory history;
};

// Exact size-weighted mean of parameter vectors.
Eigen::VectorXd aggregate_weighted(const std::vector<Eigen::VectorXd>& params,
                                   const std::vector<std::int64_t>& sizes);

// FedAvg over the federation's train splits. Round 0 starts from seeded
// random parameters; every round samples round(chi*K) clients (min 1)
// without replacement, runs E local epochs from the current global
// parameters and aggregates by train-split size. Each client's batch
// shuffling continues a persistent per-client stream, so a single-client
// federation follows exactly the trajectory of uninterrupted local training.
FlResult run_fedavg(const FederatedDataset& fed, const FLConfig& config);

// FedAvg with a fairness-regularized local objective:
// (1-lambda) * CE + lambda * |soft rate gap| per batch (see FairRegSpec).
// lambda = 0 reproduces run_fedavg bit for bit under a shared seed.
FlResult run_fair_fedavg(const FederatedDataset& fed, const FLConfig& config,
                         const FairRegConfig& fair);

// Centralized baseline: concatenates every client's train split and runs
// train_logistic with the same hyperparameters.
LogisticFit train_pooled(const FederatedDataset& fed, const FLConfig& config);

struct EvalMode {
  enum class Kind { cross_silo, cross_device };
  Kind kind = Kind::cross_silo;
  std::vector<ClientId> test_clients;  // cross_device only

  static EvalMode cross_silo() { return {}; }
  static EvalMode cross_device(std::vector<ClientId> test_clients);
};

struct ClientEval {
  FairnessReport report;
  double accuracy = 0;
  std::int64_t n = 0;
};

// Per-client fairness/accuracy of a global model. Cross-silo evaluates each
// client's own test split; cross-device evaluates the held-out test
// clients' full data.
std::map<ClientId, ClientEval> evaluate_global(const LinearModel& model,
                                               const FederatedDataset& fed, const EvalMode& mode,
                                               const std::vector<std::string>& attrs,
                                               Metric metric, FairnessLevel level);

// ---------------------------------------------------------------------------
// Hyperparameter search over FL runs (grid / seeded random subset)
// ---------------------------------------------------------------------------

struct FlTuneGrid {
  std::vector<double> learning_rates;
  std::vector<int> batch_sizes;
  std::vector<int> local_epochs;
  std::vector<Optimizer> optimizers;
  std::vector<double> lambdas;  // fair runs only
};

struct FlTuneResult {
  FLConfig config;
  std::optional<double> lambda;
  double validation_accuracy = 0;
  std::optional<double> validation_dd;
};

// Maximizes final-round pooled validation accuracy.
FlTuneResult tune_fedavg(const FederatedDataset& fed, const FLConfig& base,
                         const FlTuneGrid& grid, int max_random = 0, std::uint64_t seed = 0);

// Maximizes validation accuracy among candidates whose final validation
// DD(target) stays within fair.target_dd; falls back to the minimum-DD
// candidate when none qualify.
FlTuneResult tune_fair_fedavg(const FederatedDataset& fed, const FLConfig& base,
                              const FairRegConfig& fair, const FlTuneGrid& grid,
                              int max_random = 0, std::uint64_t seed = 0);

}  // namespace fedfair
