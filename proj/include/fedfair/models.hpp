#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fedfair/rng.hpp"
#include "fedfair/tabular.hpp"

namespace fedfair {

using ordered_json = nlohmann::ordered_json;

enum class Optimizer { sgd, momentum };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TreeConfig {
  int n_rounds = 50;
  int max_depth = 3;
  std::int64_t min_child_rows = 1;
  double l2 = 1.0;  // leaf-weight regularizer
};

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 32;
  int epochs = 5;  // E
  double l2_penalty = 1e-4;
  Optimizer optimizer = Optimizer::sgd;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool include_sensitive = true;  // sensitive attributes as model features
  TreeConfig trees;

  void check() const;
};

// One-hot encoding for categoricals (schema order, then allowed-value
// order) plus train-statistics standardization for numerics. The encoding
// is stored with the model; transform rejects schema-mismatched data.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;

  static FeatureEncoder fit(const Dataset& train, bool include_sensitive = true,
                            const std::vector<std::string>& exclude = {});

  Eigen::MatrixXd transform(const Dataset& dataset) const;
  int dim() const { return static_cast<int>(slots_.size()); }
  const std::vector<std::string>& feature_names() const { return names_; }

  ordered_json to_json() const;
  static FeatureEncoder from_json(const ordered_json& j);

 private:
  struct Slot {
    int column = 0;               // schema column index
    ColumnKind kind = ColumnKind::numeric;
    std::int32_t value = 0;       // categorical: the one-hot code
    double mean = 0, sd = 1;      // numeric standardization
  };
  std::vector<Slot> slots_;
  std::vector<std::string> names_;
  Schema schema_;  // fitted schema; transform requires exact equality
};

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0;
  double l2 = 0;  // the penalty the model was trained with
  FeatureEncoder encoder;

  Eigen::VectorXd decision(const Eigen::MatrixXd& X) const;  // X * w + b

  ordered_json to_json() const;
  static LinearModel from_json(const ordered_json& j);
};

struct Predictions {
  Eigen::VectorXd probabilities;  // strictly inside (0, 1)
  std::vector<int> labels;        // 1 iff p >= 0.5
};

// Numerically stable helpers shared by training, prediction and the FL loop.
double stable_sigmoid(double z);

// Mean cross-entropy over the batch plus l2/2 * ||w||^2 (bias unpenalized).
double logistic_loss_raw(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, double l2);

// Exact analytic gradient of logistic_loss_raw; gw/gb are outputs.
void logistic_gradient_raw(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, double l2, Eigen::VectorXd& gw, double& gb);

// Model-level wrappers over the raw forms; gradient layout is
// [weights..., bias].
double logistic_loss(const LinearModel& model, const Dataset& batch);
Eigen::VectorXd logistic_gradient(const LinearModel& model, const Dataset& batch);

// Optional differentiable fairness term for the FL loop: lambda-weighted
// absolute gap between mean sigmoids of the per-batch argmax group and its
// complement (soft demographic disparity surrogate).
struct FairRegSpec {
  double lambda = 0;
  const std::vector<std::int32_t>* groups = nullptr;  // target-attr code per row of X
};

// Mini-batch SGD/momentum epochs over an encoded matrix, in place. Batch
// order comes from shuffle_rng, which the caller owns (the FL engine keeps
// one stream per client so rounds continue the same trajectory as
// uninterrupted local training).
void sgd_epochs(Eigen::VectorXd& w, double& b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const TrainConfig& cfg, int epochs, Rng& shuffle_rng,
                const FairRegSpec* fair = nullptr);

// Seeded parameter init shared by train_logistic and the FL engine.
void init_logistic_params(Eigen::VectorXd& w, double& b, int dim, Rng& rng);

struct LogisticFit {
  LinearModel model;
  double train_loss = 0;
  std::optional<double> validation_loss;
};

// Minimizes L2-regularized cross-entropy by mini-batch gradient descent,
// deterministic per seed. Throws DataError when the train split is empty or
// single-class.
LogisticFit train_logistic(const SplitSet& split, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Gradient-boosted trees (second-order boosting, logistic loss)
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0;
  int left = -1, right = -1;
  double value = 0;  // leaf weight
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const;
};

struct TreeEnsemble {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0;  // log-odds prior
  FeatureEncoder encoder;

  Eigen::VectorXd margin(const Eigen::MatrixXd& X) const;

  ordered_json to_json() const;
  static TreeEnsemble from_json(const ordered_json& j);
};

// Fits trees.n_rounds regression trees to the logistic loss gradients and
// hessians (Newton boosting, exact greedy splits). Same degenerate-data
// errors as train_logistic.
TreeEnsemble train_gbdt(const SplitSet& split, const TrainConfig& config);

Predictions predict(const LinearModel& model, const Dataset& dataset);
Predictions predict(const TreeEnsemble& model, const Dataset& dataset);

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);
double accuracy(const std::vector<int>& preds, const std::vector<std::int8_t>& labels);

// ---------------------------------------------------------------------------
// Hyperparameter search (grid / seeded random subset)
// ---------------------------------------------------------------------------

struct TuneGrid {
  std::vector<double> learning_rates;
  std::vector<int> batch_sizes;
  std::vector<int> epochs;
  std::vector<Optimizer> optimizers;

  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct TuneResult {
  TrainConfig config;
  double validation_accuracy = 0;
};

// Picks the candidate with the highest validation accuracy (first best wins
// on ties; grid order is deterministic). max_random > 0 evaluates only a
// seeded random subset of that size.
TuneResult tune_train_config(const SplitSet& split, const TrainConfig& base, const TuneGrid& grid,
                             int max_random = 0, std::uint64_t seed = 0);

}  // namespace fedfair
