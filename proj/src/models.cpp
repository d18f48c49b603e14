#include "fedfair/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedfair/error.hpp"
#include "fedfair/ingest.hpp"

namespace fedfair {

const char* to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "momentum"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "momentum") return Optimizer::momentum;
  throw ConfigError("unknown optimizer: " + s);
}

void TrainConfig::check() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (l2_penalty < 0) throw ConfigError("l2_penalty must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must be in [0, 1)");
  if (trees.n_rounds < 0) throw ConfigError("trees.n_rounds must be >= 0");
  if (trees.max_depth < 1) throw ConfigError("trees.max_depth must be >= 1");
  if (trees.min_child_rows < 1) throw ConfigError("trees.min_child_rows must be >= 1");
  if (trees.l2 < 0) throw ConfigError("trees.l2 must be >= 0");
}

// ---------------------------------------------------------------------------
// Feature encoding
// ---------------------------------------------------------------------------

FeatureEncoder FeatureEncoder::fit(const Dataset& train, bool include_sensitive,
                                   const std::vector<std::string>& exclude) {
  FeatureEncoder enc;
  enc.schema_ = train.schema();
  const Schema& schema = train.schema();
  const auto n = static_cast<double>(train.n());

  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    if (std::find(exclude.begin(), exclude.end(), col.name) != exclude.end()) continue;
    if (!include_sensitive && schema.is_sensitive(col.name)) continue;
    if (col.kind == ColumnKind::categorical) {
      for (auto v : col.allowed_values) {
        Slot s;
        s.column = static_cast<int>(c);
        s.kind = ColumnKind::categorical;
        s.value = v;
        enc.slots_.push_back(s);
        enc.names_.push_back(col.name + "=" + std::to_string(v));
      }
    } else {
      Slot s;
      s.column = static_cast<int>(c);
      s.kind = ColumnKind::numeric;
      if (train.n() > 0) {
        const auto& values = train.numeric(static_cast<int>(c));
        double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double var = 0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= n;
        s.mean = mean;
        s.sd = var > 0 ? std::sqrt(var) : 1.0;
      }
      enc.slots_.push_back(s);
      enc.names_.push_back(col.name);
    }
  }
  return enc;
}

Eigen::MatrixXd FeatureEncoder::transform(const Dataset& dataset) const {
  if (!(dataset.schema() == schema_))
    throw DataError("encoder: dataset schema does not match the fitted schema");
  Eigen::MatrixXd X(dataset.n(), dim());
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    const Slot& slot = slots_[s];
    if (slot.kind == ColumnKind::categorical) {
      const auto& codes = dataset.categorical(slot.column);
      for (std::int64_t r = 0; r < dataset.n(); ++r)
        X(r, static_cast<Eigen::Index>(s)) =
            codes[static_cast<std::size_t>(r)] == slot.value ? 1.0 : 0.0;
    } else {
      const auto& values = dataset.numeric(slot.column);
      for (std::int64_t r = 0; r < dataset.n(); ++r)
        X(r, static_cast<Eigen::Index>(s)) =
            (values[static_cast<std::size_t>(r)] - slot.mean) / slot.sd;
    }
  }
  return X;
}

ordered_json FeatureEncoder::to_json() const {
  ordered_json slots = ordered_json::array();
  for (const auto& s : slots_) {
    ordered_json j;
    j["column"] = s.column;
    j["kind"] = s.kind == ColumnKind::numeric ? "numeric" : "categorical";
    j["value"] = s.value;
    j["mean"] = s.mean;
    j["sd"] = s.sd;
    slots.push_back(std::move(j));
  }
  ordered_json j;
  j["schema"] = schema_to_json(schema_);
  j["slots"] = std::move(slots);
  j["feature_names"] = names_;
  return j;
}

FeatureEncoder FeatureEncoder::from_json(const ordered_json& j) {
  FeatureEncoder enc;
  enc.schema_ = schema_from_json(j.at("schema"));
  for (const auto& s : j.at("slots")) {
    Slot slot;
    slot.column = s.at("column").get<int>();
    slot.kind = s.at("kind").get<std::string>() == "numeric" ? ColumnKind::numeric
                                                             : ColumnKind::categorical;
    slot.value = s.at("value").get<std::int32_t>();
    slot.mean = s.at("mean").get<double>();
    slot.sd = s.at("sd").get<double>();
    enc.slots_.push_back(slot);
  }
  enc.names_ = j.at("feature_names").get<std::vector<std::string>>();
  return enc;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

constexpr double kLogitClamp = 30.0;

void check_trainable(const Dataset& train) {
  if (train.n() == 0) throw DataError("training split is empty");
  bool has0 = false, has1 = false;
  for (std::int64_t r = 0; r < train.n(); ++r)
    (train.label(r) ? has1 : has0) = true;
  if (!has0 || !has1)
    throw DataError("degenerate fit: training split contains a single label class");
}

Eigen::VectorXd labels_vector(const Dataset& dataset) {
  Eigen::VectorXd y(dataset.n());
  for (std::int64_t r = 0; r < dataset.n(); ++r) y(r) = dataset.label(r);
  return y;
}

}  // namespace

Eigen::VectorXd LinearModel::decision(const Eigen::MatrixXd& X) const {
  return (X * weights).array() + bias;
}

double logistic_loss_raw(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, double l2) {
  const Eigen::VectorXd z = (X * w).array() + b;
  double loss = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - y(i) * z(i);
  loss /= static_cast<double>(z.size());
  return loss + 0.5 * l2 * w.squaredNorm();
}

void logistic_gradient_raw(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, double l2, Eigen::VectorXd& gw, double& gb) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd s(n);
  const Eigen::VectorXd z = (X * w).array() + b;
  for (Eigen::Index i = 0; i < n; ++i) s(i) = stable_sigmoid(z(i));
  const Eigen::VectorXd d = (s - y) / static_cast<double>(n);
  gw = X.transpose() * d + l2 * w;
  gb = d.sum();
}

double logistic_loss(const LinearModel& model, const Dataset& batch) {
  if (batch.n() == 0) throw DataError("logistic_loss: empty batch");
  return logistic_loss_raw(model.weights, model.bias, model.encoder.transform(batch),
                           labels_vector(batch), model.l2);
}

Eigen::VectorXd logistic_gradient(const LinearModel& model, const Dataset& batch) {
  if (batch.n() == 0) throw DataError("logistic_gradient: empty batch");
  Eigen::VectorXd gw;
  double gb = 0;
  logistic_gradient_raw(model.weights, model.bias, model.encoder.transform(batch),
                        labels_vector(batch), model.l2, gw, gb);
  Eigen::VectorXd out(gw.size() + 1);
  out.head(gw.size()) = gw;
  out(gw.size()) = gb;
  return out;
}

void init_logistic_params(Eigen::VectorXd& w, double& b, int dim, Rng& rng) {
  w.resize(dim);
  for (int j = 0; j < dim; ++j) w(j) = 0.01 * rng.normal();
  b = 0;
}

void sgd_epochs(Eigen::VectorXd& w, double& b, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const TrainConfig& cfg, int epochs, Rng& shuffle_rng, const FairRegSpec* fair) {
  const Eigen::Index n = X.rows();
  const bool use_fair = fair && fair->lambda > 0 && fair->groups;
  if (use_fair && static_cast<Eigen::Index>(fair->groups->size()) != n)
    throw ConfigError("sgd_epochs: fairness group column does not match the batch matrix");

  Eigen::VectorXd velocity_w = Eigen::VectorXd::Zero(w.size());
  double velocity_b = 0;

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  Eigen::VectorXd gw(w.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd Xb(bs, X.cols());
      Eigen::VectorXd yb(bs);
      for (Eigen::Index i = 0; i < bs; ++i) {
        Xb.row(i) = X.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + i)]));
        yb(i) = y(static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + i)]));
      }

      const Eigen::VectorXd z = (Xb * w).array() + b;
      Eigen::VectorXd s(bs);
      for (Eigen::Index i = 0; i < bs; ++i) s(i) = stable_sigmoid(z(i));
      const Eigen::VectorXd d = (s - yb) / static_cast<double>(bs);
      gw.noalias() = Xb.transpose() * d;
      double gb = d.sum();

      if (use_fair) {
        // Per-batch argmax group: the value whose mean sigmoid is farthest
        // from the rest of the batch. Batches without two groups fall back
        // to plain cross-entropy.
        std::vector<std::pair<std::int32_t, std::vector<Eigen::Index>>> groups;
        for (Eigen::Index i = 0; i < bs; ++i) {
          const std::int32_t code =
              (*fair->groups)[order[static_cast<std::size_t>(start + i)]];
          auto it = std::find_if(groups.begin(), groups.end(),
                                 [code](const auto& g) { return g.first == code; });
          if (it == groups.end())
            groups.push_back({code, {i}});
          else
            it->second.push_back(i);
        }
        if (groups.size() >= 2) {
          std::sort(groups.begin(), groups.end(),
                    [](const auto& a, const auto& b2) { return a.first < b2.first; });
          const double total = s.sum();
          double best_gap = 0;
          std::size_t best = 0;
          bool found = false;
          for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& rows = groups[gi].second;
            double in_mean = 0;
            for (auto i : rows) in_mean += s(i);
            const double out_count = static_cast<double>(bs) - static_cast<double>(rows.size());
            const double out_mean = (total - in_mean) / out_count;
            in_mean /= static_cast<double>(rows.size());
            const double gap = std::abs(in_mean - out_mean);
            if (!found || gap > best_gap) {
              best_gap = gap;
              best = gi;
              found = true;
            }
          }
          const auto& rows = groups[best].second;
          const double in_n = static_cast<double>(rows.size());
          const double out_n = static_cast<double>(bs) - in_n;
          double in_mean = 0;
          for (auto i : rows) in_mean += s(i);
          const double out_mean = (s.sum() - in_mean) / out_n;
          in_mean /= in_n;
          const double sign = in_mean > out_mean ? 1.0 : (in_mean < out_mean ? -1.0 : 0.0);

          std::vector<char> in_group(static_cast<std::size_t>(bs), 0);
          for (auto i : rows) in_group[static_cast<std::size_t>(i)] = 1;
          Eigen::VectorXd fair_d(bs);
          for (Eigen::Index i = 0; i < bs; ++i) {
            const double sp = s(i) * (1.0 - s(i));
            fair_d(i) = sign * sp * (in_group[static_cast<std::size_t>(i)] ? 1.0 / in_n : -1.0 / out_n);
          }
          gw = (1.0 - fair->lambda) * gw + fair->lambda * (Xb.transpose() * fair_d);
          gb = (1.0 - fair->lambda) * gb + fair->lambda * fair_d.sum();
        }
      }

      gw += cfg.l2_penalty * w;

      if (cfg.optimizer == Optimizer::momentum) {
        velocity_w = cfg.momentum * velocity_w + gw;
        velocity_b = cfg.momentum * velocity_b + gb;
        w -= cfg.learning_rate * velocity_w;
        b -= cfg.learning_rate * velocity_b;
      } else {
        w -= cfg.learning_rate * gw;
        b -= cfg.learning_rate * gb;
      }
    }
  }
}

LogisticFit train_logistic(const SplitSet& split, const TrainConfig& config) {
  config.check();
  check_trainable(split.train);

  LogisticFit fit;
  fit.model.encoder = FeatureEncoder::fit(split.train, config.include_sensitive);
  fit.model.l2 = config.l2_penalty;

  const Eigen::MatrixXd X = fit.model.encoder.transform(split.train);
  const Eigen::VectorXd y = labels_vector(split.train);

  Rng init_rng(derive_seed(config.seed, "init"));
  init_logistic_params(fit.model.weights, fit.model.bias, fit.model.encoder.dim(), init_rng);

  Rng shuffle_rng(derive_seed(config.seed, "shuffle", std::uint64_t{0}));
  sgd_epochs(fit.model.weights, fit.model.bias, X, y, config, config.epochs, shuffle_rng);

  fit.train_loss = logistic_loss_raw(fit.model.weights, fit.model.bias, X, y, config.l2_penalty);
  if (split.validation.n() > 0)
    fit.validation_loss =
        logistic_loss_raw(fit.model.weights, fit.model.bias,
                          fit.model.encoder.transform(split.validation),
                          labels_vector(split.validation), config.l2_penalty);
  return fit;
}

ordered_json LinearModel::to_json() const {
  ordered_json j;
  j["type"] = "logistic";
  std::vector<double> w(weights.data(), weights.data() + weights.size());
  j["weights"] = w;
  j["bias"] = bias;
  j["l2"] = l2;
  j["encoder"] = encoder.to_json();
  return j;
}

LinearModel LinearModel::from_json(const ordered_json& j) {
  if (j.at("type").get<std::string>() != "logistic")
    throw DataError("LinearModel: wrong model type");
  LinearModel m;
  auto w = j.at("weights").get<std::vector<double>>();
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.bias = j.at("bias").get<double>();
  m.l2 = j.at("l2").get<double>();
  m.encoder = FeatureEncoder::from_json(j.at("encoder"));
  return m;
}

// ---------------------------------------------------------------------------
// Gradient-boosted trees
// ---------------------------------------------------------------------------

double RegressionTree::predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
    node = X(row, nd.feature) < nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

Eigen::VectorXd TreeEnsemble::margin(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_score);
  for (const auto& tree : trees)
    for (Eigen::Index r = 0; r < X.rows(); ++r) out(r) += learning_rate * tree.predict_row(X, r);
  return out;
}

namespace {

struct SplitCandidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0;
  double gain = 0;
};

double leaf_weight(double g, double h, double l2) { return -g / (h + l2); }

double score(double g, double h, double l2) { return g * g / (h + l2); }

// Exact greedy split search over every feature.
SplitCandidate best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad,
                          const Eigen::VectorXd& hess, const std::vector<Eigen::Index>& rows,
                          const TreeConfig& cfg) {
  SplitCandidate best;
  double g_total = 0, h_total = 0;
  for (auto r : rows) {
    g_total += grad(r);
    h_total += hess(r);
  }
  const double parent = score(g_total, h_total, cfg.l2);

  std::vector<std::pair<double, Eigen::Index>> sorted(rows.size());
  for (int f = 0; f < X.cols(); ++f) {
    for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {X(rows[i], f), rows[i]};
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double gl = 0, hl = 0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      gl += grad(sorted[i].second);
      hl += hess(sorted[i].second);
      if (sorted[i].first == sorted[i + 1].first) continue;
      const auto left_n = static_cast<std::int64_t>(i + 1);
      const auto right_n = static_cast<std::int64_t>(sorted.size()) - left_n;
      if (left_n < cfg.min_child_rows || right_n < cfg.min_child_rows) continue;
      const double gain =
          0.5 * (score(gl, hl, cfg.l2) + score(g_total - gl, h_total - hl, cfg.l2) - parent);
      if (!best.valid || gain > best.gain) {
        best.valid = true;
        best.feature = f;
        best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        best.gain = gain;
      }
    }
  }
  if (best.valid && best.gain <= 1e-12) best.valid = false;
  return best;
}

RegressionTree build_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad,
                          const Eigen::VectorXd& hess, const TreeConfig& cfg) {
  RegressionTree tree;
  struct Work {
    int node;
    std::vector<Eigen::Index> rows;
    int depth;
  };
  std::vector<Eigen::Index> all(X.rows());
  std::iota(all.begin(), all.end(), 0);
  tree.nodes.push_back({});
  std::vector<Work> stack{{0, std::move(all), 0}};

  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();

    double g = 0, h = 0;
    for (auto r : work.rows) {
      g += grad(r);
      h += hess(r);
    }

    SplitCandidate split;
    if (work.depth < cfg.max_depth) split = best_split(X, grad, hess, work.rows, cfg);
    if (!split.valid) {
      tree.nodes[static_cast<std::size_t>(work.node)].feature = -1;
      tree.nodes[static_cast<std::size_t>(work.node)].value = leaf_weight(g, h, cfg.l2);
      continue;
    }

    std::vector<Eigen::Index> left, right;
    for (auto r : work.rows)
      (X(r, split.feature) < split.threshold ? left : right).push_back(r);

    const int left_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    const int right_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    auto& node = tree.nodes[static_cast<std::size_t>(work.node)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_index;
    node.right = right_index;

    stack.push_back({right_index, std::move(right), work.depth + 1});
    stack.push_back({left_index, std::move(left), work.depth + 1});
  }
  return tree;
}

}  // namespace

TreeEnsemble train_gbdt(const SplitSet& split, const TrainConfig& config) {
  config.check();
  check_trainable(split.train);

  TreeEnsemble model;
  model.encoder = FeatureEncoder::fit(split.train, config.include_sensitive);
  model.learning_rate = config.learning_rate;

  const Eigen::MatrixXd X = model.encoder.transform(split.train);
  const Eigen::VectorXd y = labels_vector(split.train);
  const double rate = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(rate / (1.0 - rate));

  Eigen::VectorXd margin = Eigen::VectorXd::Constant(X.rows(), model.base_score);
  Eigen::VectorXd grad(X.rows()), hess(X.rows());
  for (int round = 0; round < config.trees.n_rounds; ++round) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double p = stable_sigmoid(margin(i));
      grad(i) = p - y(i);
      hess(i) = std::max(p * (1.0 - p), 1e-16);
    }
    RegressionTree tree = build_tree(X, grad, hess, config.trees);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      margin(i) += model.learning_rate * tree.predict_row(X, i);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

ordered_json TreeEnsemble::to_json() const {
  ordered_json trees_json = ordered_json::array();
  for (const auto& tree : trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& nd : tree.nodes) {
      nodes.push_back(ordered_json{{"feature", nd.feature},
                                   {"threshold", nd.threshold},
                                   {"left", nd.left},
                                   {"right", nd.right},
                                   {"value", nd.value}});
    }
    trees_json.push_back(std::move(nodes));
  }
  ordered_json j;
  j["type"] = "gbdt";
  j["learning_rate"] = learning_rate;
  j["base_score"] = base_score;
  j["trees"] = std::move(trees_json);
  j["encoder"] = encoder.to_json();
  return j;
}

TreeEnsemble TreeEnsemble::from_json(const ordered_json& j) {
  if (j.at("type").get<std::string>() != "gbdt") throw DataError("TreeEnsemble: wrong model type");
  TreeEnsemble m;
  m.learning_rate = j.at("learning_rate").get<double>();
  m.base_score = j.at("base_score").get<double>();
  for (const auto& tj : j.at("trees")) {
    RegressionTree tree;
    for (const auto& nj : tj) {
      TreeNode nd;
      nd.feature = nj.at("feature").get<int>();
      nd.threshold = nj.at("threshold").get<double>();
      nd.left = nj.at("left").get<int>();
      nd.right = nj.at("right").get<int>();
      nd.value = nj.at("value").get<double>();
      tree.nodes.push_back(nd);
    }
    m.trees.push_back(std::move(tree));
  }
  m.encoder = FeatureEncoder::from_json(j.at("encoder"));
  return m;
}

// ---------------------------------------------------------------------------
// Prediction and scoring
// ---------------------------------------------------------------------------

namespace {

Predictions margin_to_predictions(Eigen::VectorXd z) {
  Predictions out;
  out.probabilities.resize(z.size());
  out.labels.resize(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double clamped = std::clamp(z(i), -kLogitClamp, kLogitClamp);
    const double p = stable_sigmoid(clamped);
    out.probabilities(i) = p;
    out.labels[static_cast<std::size_t>(i)] = p >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace

Predictions predict(const LinearModel& model, const Dataset& dataset) {
  return margin_to_predictions(model.decision(model.encoder.transform(dataset)));
}

Predictions predict(const TreeEnsemble& model, const Dataset& dataset) {
  return margin_to_predictions(model.margin(model.encoder.transform(dataset)));
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw DataError("accuracy: size mismatch");
  if (preds.empty()) throw DataError("accuracy: empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if ((preds[i] != 0) == (labels[i] != 0)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double accuracy(const std::vector<int>& preds, const std::vector<std::int8_t>& labels) {
  return accuracy(preds, std::vector<int>(labels.begin(), labels.end()));
}

// ---------------------------------------------------------------------------
// Hyperparameter search
// ---------------------------------------------------------------------------

std::vector<TrainConfig> TuneGrid::expand(const TrainConfig& base) const {
  const auto lrs = learning_rates.empty() ? std::vector<double>{base.learning_rate} : learning_rates;
  const auto batches = batch_sizes.empty() ? std::vector<int>{base.batch_size} : batch_sizes;
  const auto eps = epochs.empty() ? std::vector<int>{base.epochs} : epochs;
  const auto opts = optimizers.empty() ? std::vector<Optimizer>{base.optimizer} : optimizers;
  std::vector<TrainConfig> out;
  for (double lr : lrs)
    for (int bs : batches)
      for (int e : eps)
        for (Optimizer o : opts) {
          TrainConfig c = base;
          c.learning_rate = lr;
          c.batch_size = bs;
          c.epochs = e;
          c.optimizer = o;
          out.push_back(c);
        }
  return out;
}

TuneResult tune_train_config(const SplitSet& split, const TrainConfig& base, const TuneGrid& grid,
                             int max_random, std::uint64_t seed) {
  if (split.validation.n() == 0)
    throw ConfigError("tune_train_config: needs a non-empty validation split");
  std::vector<TrainConfig> candidates = grid.expand(base);
  if (max_random > 0 && static_cast<std::size_t>(max_random) < candidates.size()) {
    Rng rng(derive_seed(seed, "tune_sample"));
    auto picks = rng.sample_without_replacement(candidates.size(),
                                                static_cast<std::size_t>(max_random));
    std::sort(picks.begin(), picks.end());
    std::vector<TrainConfig> subset;
    for (auto i : picks) subset.push_back(candidates[i]);
    candidates = std::move(subset);
  }

  TuneResult best;
  bool first = true;
  std::vector<int> val_labels(split.validation.labels().begin(), split.validation.labels().end());
  for (const auto& candidate : candidates) {
    LogisticFit fit = train_logistic(split, candidate);
    const double acc = accuracy(predict(fit.model, split.validation).labels, val_labels);
    if (first || acc > best.validation_accuracy) {
      best.config = candidate;
      best.validation_accuracy = acc;
      first = false;
    }
  }
  if (first) throw ConfigError("tune_train_config: empty candidate set");
  return best;
}

}  // namespace fedfair
