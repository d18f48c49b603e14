#include <doctest.h>

#include <cmath>

#include "fedfair/error.hpp"
#include "fedfair/models.hpp"
#include "helpers.hpp"

using namespace fedfair;
using namespace fedfair::testing;

namespace {

// Two Gaussian blobs, linearly separable when the centers are far apart.
SplitSet blobs(std::int64_t n, double center, std::uint64_t seed, double spread = 0.3,
               double pos_share = 0.5) {
  auto schema = make_schema({}, {"x0", "x1"});
  std::vector<double> x0, x1;
  std::vector<std::int8_t> labels;
  Rng rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    const bool pos = rng.bernoulli(pos_share);
    const double c = pos ? center : -center;
    x0.push_back(c + spread * rng.normal());
    x1.push_back(c + spread * rng.normal());
    labels.push_back(pos ? 1 : 0);
  }
  SplitSet out;
  out.train = make_dataset(schema, {}, {{"x0", x0}, {"x1", x1}}, labels);
  out.validation = Dataset::empty(out.train.schema_ptr());
  out.test = Dataset::empty(out.train.schema_ptr());
  return out;
}

SplitSet xor_dataset(std::int64_t n, std::uint64_t seed) {
  auto schema = make_schema({}, {"x0", "x1"});
  std::vector<double> x0, x1;
  std::vector<std::int8_t> labels;
  Rng rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    const bool a = rng.bernoulli(0.5), b = rng.bernoulli(0.5);
    x0.push_back((a ? 1.0 : -1.0) + 0.15 * rng.normal());
    x1.push_back((b ? 1.0 : -1.0) + 0.15 * rng.normal());
    labels.push_back(a != b ? 1 : 0);
  }
  SplitSet out;
  out.train = make_dataset(schema, {}, {{"x0", x0}, {"x1", x1}}, labels);
  out.validation = Dataset::empty(out.train.schema_ptr());
  out.test = Dataset::empty(out.train.schema_ptr());
  return out;
}

double train_accuracy(const LinearModel& model, const Dataset& train) {
  return accuracy(predict(model, train).labels, train.labels());
}

}  // namespace

TEST_CASE("train_logistic: separable blobs reach 0.99 train accuracy") {
  auto split = blobs(200, 1.5, 1);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.5;
  cfg.l2_penalty = 0;
  cfg.seed = 2;
  auto fit = train_logistic(split, cfg);
  CHECK(train_accuracy(fit.model, split.train) >= 0.99);
}

TEST_CASE("train_logistic: all-zero features predict the base rate") {
  auto schema = make_schema({}, {"x0"});
  std::vector<double> x(300, 0.0);
  std::vector<std::int8_t> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(i < 210 ? 1 : 0);  // 70% positive
  SplitSet split;
  split.train = make_dataset(schema, {}, {{"x0", x}}, labels);
  split.validation = Dataset::empty(split.train.schema_ptr());
  split.test = Dataset::empty(split.train.schema_ptr());
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.5;
  cfg.l2_penalty = 0;
  cfg.batch_size = 300;
  cfg.seed = 3;
  auto fit = train_logistic(split, cfg);
  auto preds = predict(fit.model, split.train);
  CHECK(std::abs(preds.probabilities(0) - 0.7) < 0.02);
  CHECK(accuracy(preds.labels, split.train.labels()) == doctest::Approx(0.7));
}

TEST_CASE("train_logistic: deterministic per seed, bit for bit") {
  auto split = blobs(150, 1.0, 4);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 77;
  auto a = train_logistic(split, cfg);
  auto b = train_logistic(split, cfg);
  REQUIRE(a.model.weights.size() == b.model.weights.size());
  for (Eigen::Index i = 0; i < a.model.weights.size(); ++i)
    CHECK(a.model.weights(i) == b.model.weights(i));
  CHECK(a.model.bias == b.model.bias);
}

TEST_CASE("train_logistic: degenerate single-class data errors") {
  auto schema = make_schema({}, {"x0"});
  SplitSet split;
  split.train = make_dataset(schema, {}, {{"x0", {1.0, 2.0}}}, {1, 1});
  split.validation = Dataset::empty(split.train.schema_ptr());
  split.test = Dataset::empty(split.train.schema_ptr());
  CHECK_THROWS_WITH_AS(train_logistic(split, TrainConfig{}), doctest::Contains("degenerate"),
                       DataError);
  SplitSet empty;
  empty.train = Dataset::empty(schema);
  empty.validation = Dataset::empty(schema);
  empty.test = Dataset::empty(schema);
  CHECK_THROWS_AS(train_logistic(empty, TrainConfig{}), DataError);
}

TEST_CASE("logistic_gradient: near zero at an unregularized optimum") {
  auto split = blobs(300, 0.6, 5, 1.0);  // overlapping blobs, finite optimum
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.learning_rate = 1.0;
  cfg.batch_size = 300;  // full batch
  cfg.l2_penalty = 0;
  cfg.seed = 6;
  auto fit = train_logistic(split, cfg);
  const Eigen::VectorXd g = logistic_gradient(fit.model, split.train);
  CHECK(g.norm() < 1e-6);
}

TEST_CASE("logistic_gradient: matches central finite differences") {
  auto schema = make_schema({{"SEX", {1, 2}}}, {"x0", "x1"});
  Rng rng(8);
  std::vector<std::int32_t> sex;
  std::vector<double> x0, x1;
  std::vector<std::int8_t> labels;
  for (int i = 0; i < 40; ++i) {
    sex.push_back(rng.bernoulli(0.5) ? 1 : 2);
    x0.push_back(rng.normal());
    x1.push_back(rng.normal());
    labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  auto batch = make_dataset(schema, {{"SEX", sex}}, {{"x0", x0}, {"x1", x1}}, labels);

  LinearModel model;
  model.encoder = FeatureEncoder::fit(batch);
  model.l2 = 0.01;
  model.weights.resize(model.encoder.dim());
  for (int i = 0; i < model.encoder.dim(); ++i) model.weights(i) = rng.normal();
  model.bias = rng.normal();

  const Eigen::VectorXd analytic = logistic_gradient(model, batch);
  const double h = 1e-6;
  double max_rel = 0;
  for (int p = 0; p <= model.encoder.dim(); ++p) {
    LinearModel plus = model, minus = model;
    if (p < model.encoder.dim()) {
      plus.weights(p) += h;
      minus.weights(p) -= h;
    } else {
      plus.bias += h;
      minus.bias -= h;
    }
    const double fd = (logistic_loss(plus, batch) - logistic_loss(minus, batch)) / (2 * h);
    const double rel = std::abs(fd - analytic(p)) / std::max(1e-8, std::abs(analytic(p)));
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("logistic_gradient: zero-weight bias gradient is 0.5 - mean(y)") {
  auto schema = make_schema({}, {"x0"});
  auto batch = make_dataset(schema, {}, {{"x0", {1.0, -1.0, 2.0, -2.0}}}, {1, 0, 0, 0});
  LinearModel model;
  model.encoder = FeatureEncoder::fit(batch);
  model.weights = Eigen::VectorXd::Zero(1);
  model.bias = 0;
  model.l2 = 0;
  const Eigen::VectorXd g = logistic_gradient(model, batch);
  CHECK(g(1) == doctest::Approx(0.5 - 0.25).epsilon(1e-12));
}

TEST_CASE("train_gbdt: XOR needs the trees, linear stays near chance") {
  auto split = xor_dataset(600, 9);
  TrainConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.trees.n_rounds = 50;
  cfg.trees.max_depth = 2;
  cfg.trees.min_child_rows = 1;
  cfg.seed = 10;
  auto model = train_gbdt(split, cfg);
  CHECK(accuracy(predict(model, split.train).labels, split.train.labels()) >= 0.95);

  // the best linear rule on XOR caps out at cutting one corner (~0.75)
  TrainConfig lin_cfg;
  lin_cfg.epochs = 60;
  lin_cfg.learning_rate = 0.3;
  lin_cfg.seed = 11;
  auto linear = train_logistic(split, lin_cfg);
  CHECK(train_accuracy(linear.model, split.train) < 0.8);
}

TEST_CASE("train_gbdt: zero rounds predicts the base score everywhere") {
  auto split = blobs(100, 1.0, 12);
  TrainConfig cfg;
  cfg.trees.n_rounds = 0;
  auto model = train_gbdt(split, cfg);
  auto preds = predict(model, split.train);
  for (Eigen::Index i = 1; i < preds.probabilities.size(); ++i)
    CHECK(preds.probabilities(i) == preds.probabilities(0));
}

TEST_CASE("train_gbdt: deeper trees never hurt training accuracy (5 seeds)") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto split = xor_dataset(400, 100 + seed);
    double prev = 0;
    for (int depth = 1; depth <= 3; ++depth) {
      TrainConfig cfg;
      cfg.learning_rate = 0.3;
      cfg.trees.n_rounds = 40;
      cfg.trees.max_depth = depth;
      cfg.seed = seed;
      auto model = train_gbdt(split, cfg);
      const double acc = accuracy(predict(model, split.train).labels, split.train.labels());
      CHECK(acc >= prev - 1e-12);
      prev = acc;
    }
  }
}

TEST_CASE("train_gbdt: deterministic per seed") {
  auto split = xor_dataset(300, 14);
  TrainConfig cfg;
  cfg.trees.n_rounds = 10;
  cfg.trees.max_depth = 3;
  cfg.seed = 123;
  auto a = train_gbdt(split, cfg);
  auto b = train_gbdt(split, cfg);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
    for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
      CHECK(a.trees[t].nodes[n].feature == b.trees[t].nodes[n].feature);
      CHECK(a.trees[t].nodes[n].threshold == b.trees[t].nodes[n].threshold);
      CHECK(a.trees[t].nodes[n].value == b.trees[t].nodes[n].value);
    }
  }
}

TEST_CASE("predict: boundary convention, monotonicity, closed-form sigmoid") {
  auto schema = make_schema({}, {"x0"});
  auto data = make_dataset(schema, {}, {{"x0", {-2.0, -1.0, 0.0, 1.0, 2.0}}}, {0, 0, 0, 1, 1});
  LinearModel model;
  model.encoder = FeatureEncoder::fit(data);
  model.weights = Eigen::VectorXd::Zero(1);
  model.bias = 0;
  auto at_half = predict(model, data);
  for (int label : at_half.labels) CHECK(label == 1);  // p = 0.5 -> label 1

  model.weights(0) = 2.0;
  auto preds = predict(model, data);
  for (Eigen::Index i = 1; i < preds.probabilities.size(); ++i)
    CHECK(preds.probabilities(i) > preds.probabilities(i - 1));

  // hand-computed sigmoid on the standardized first row
  const Eigen::MatrixXd X = model.encoder.transform(data);
  const double z = 2.0 * X(0, 0);
  CHECK(preds.probabilities(0) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));

  // schema mismatch rejected
  auto other_schema = make_schema({}, {"y0"});
  auto other = make_dataset(other_schema, {}, {{"y0", {1.0}}}, {0});
  CHECK_THROWS_AS(predict(model, other), DataError);
}

TEST_CASE("predict: probabilities stay strictly inside (0, 1)") {
  auto schema = make_schema({}, {"x0"});
  auto data = make_dataset(schema, {}, {{"x0", {1000.0, -1000.0}}}, {1, 0});
  LinearModel model;
  model.encoder = FeatureEncoder::fit(data);
  model.weights = Eigen::VectorXd::Constant(1, 500.0);
  model.bias = 0;
  auto preds = predict(model, data);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(preds.probabilities(i) > 0.0);
    CHECK(preds.probabilities(i) < 1.0);
  }
}

TEST_CASE("accuracy: arithmetic and edge cases") {
  CHECK(accuracy({1, 0, 1}, std::vector<int>{1, 0, 1}) == 1.0);
  CHECK(accuracy({0, 1, 0}, std::vector<int>{1, 0, 1}) == 0.0);
  CHECK(accuracy({1, 1, 0, 0}, std::vector<int>{1, 1, 0, 1}) == 0.75);
  CHECK_THROWS_AS(accuracy({1}, std::vector<int>{1, 0}), DataError);
  CHECK_THROWS_AS(accuracy({}, std::vector<int>{}), DataError);
}

TEST_CASE("model JSON round-trips preserve predictions") {
  auto split = blobs(120, 1.0, 15);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 16;
  auto fit = train_logistic(split, cfg);
  auto linear2 = LinearModel::from_json(fit.model.to_json());
  auto p1 = predict(fit.model, split.train);
  auto p2 = predict(linear2, split.train);
  for (Eigen::Index i = 0; i < p1.probabilities.size(); ++i)
    CHECK(p1.probabilities(i) == p2.probabilities(i));

  TrainConfig tree_cfg;
  tree_cfg.trees.n_rounds = 5;
  auto trees = train_gbdt(split, tree_cfg);
  auto trees2 = TreeEnsemble::from_json(trees.to_json());
  auto t1 = predict(trees, split.train);
  auto t2 = predict(trees2, split.train);
  for (Eigen::Index i = 0; i < t1.probabilities.size(); ++i)
    CHECK(t1.probabilities(i) == t2.probabilities(i));
}

TEST_CASE("full-batch descent with small step never increases the loss") {
  auto split = blobs(200, 0.8, 17, 1.0);
  const Eigen::MatrixXd X = FeatureEncoder::fit(split.train).transform(split.train);
  Eigen::VectorXd y(split.train.n());
  for (std::int64_t i = 0; i < split.train.n(); ++i) y(i) = split.train.label(i);

  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.batch_size = static_cast<int>(split.train.n());
  cfg.l2_penalty = 0.01;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
  double b = 0;
  Rng shuffle(1);
  double prev = logistic_loss_raw(w, b, X, y, cfg.l2_penalty);
  for (int epoch = 0; epoch < 25; ++epoch) {
    sgd_epochs(w, b, X, y, cfg, 1, shuffle);
    const double now = logistic_loss_raw(w, b, X, y, cfg.l2_penalty);
    CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("tune_train_config picks the better learning rate") {
  // overlapping, imbalanced blobs: a near-init model (any direction, zero
  // bias) lands well below a trained one, which learns the shifted boundary
  auto split = blobs(800, 0.5, 18, 1.0, 0.2);
  std::vector<std::int64_t> train_rows, val_rows;
  for (std::int64_t i = 0; i < split.train.n(); ++i)
    (i < 600 ? train_rows : val_rows).push_back(i);
  SplitSet carved;
  carved.train = split.train.take(train_rows);
  carved.validation = split.train.take(val_rows);
  carved.test = Dataset::empty(split.train.schema_ptr());

  TrainConfig base;
  base.epochs = 12;
  base.seed = 19;
  TuneGrid grid;
  grid.learning_rates = {1e-6, 0.5};  // tiny rate barely moves from init
  auto best = tune_train_config(carved, base, grid);
  CHECK(best.config.learning_rate == 0.5);
  CHECK(best.validation_accuracy > 0.75);
}
