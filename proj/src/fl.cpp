#include "fedfair/fl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fedfair/csv.hpp"
#include "fedfair/error.hpp"
#include "fedfair/partition.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

void FLConfig::check() const {
  if (rounds < 1) throw ConfigError("fl: rounds must be >= 1");
  if (local_epochs < 1) throw ConfigError("fl: local_epochs must be >= 1");
  if (!(client_fraction > 0 && client_fraction <= 1))
    throw ConfigError("fl: client_fraction must be in (0, 1]");
  local_train_config().check();
}

TrainConfig FLConfig::local_train_config() const {
  TrainConfig cfg;
  cfg.learning_rate = learning_rate;
  cfg.batch_size = batch_size;
  cfg.epochs = local_epochs;
  cfg.l2_penalty = l2_penalty;
  cfg.optimizer = optimizer;
  cfg.momentum = momentum;
  cfg.seed = seed;
  cfg.include_sensitive = include_sensitive;
  return cfg;
}

void FairRegConfig::check() const {
  if (!(lambda >= 0 && lambda <= 1)) throw ConfigError("fair: lambda must be in [0, 1]");
  if (target_dd < 0) throw ConfigError("fair: target_dd must be >= 0");
  if (target_attr.empty()) throw ConfigError("fair: target_attr is required");
}

Eigen::VectorXd aggregate_weighted(const std::vector<Eigen::VectorXd>& params,
                                   const std::vector<std::int64_t>& sizes) {
  if (params.empty()) throw ConfigError("aggregate_weighted: no parameters");
  if (params.size() != sizes.size())
    throw ConfigError("aggregate_weighted: params/sizes length mismatch");
  const Eigen::Index dim = params.front().size();
  double total = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != dim) throw ConfigError("aggregate_weighted: parameter shape mismatch");
    if (sizes[k] <= 0) throw ConfigError("aggregate_weighted: sizes must be > 0");
    total += static_cast<double>(sizes[k]);
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < params.size(); ++k)
    sum += static_cast<double>(sizes[k]) * params[k];
  return sum / total;
}

namespace {

struct ClientState {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::int32_t> fair_groups;  // target-attr codes, fair runs only
  Rng shuffle_stream{0};
  std::int64_t n = 0;
};

struct PooledEval {
  Dataset data;       // validation pool, or train pool when empty
  Eigen::MatrixXd X;  // encoded
  std::vector<int> labels;
  bool is_validation = false;
};

std::vector<int> hard_predictions(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& X) {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  const Eigen::VectorXd z = (X * w).array() + b;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    out[static_cast<std::size_t>(i)] = stable_sigmoid(std::clamp(z(i), -30.0, 30.0)) >= 0.5 ? 1 : 0;
  return out;
}

FlResult run_fl(const FederatedDataset& fed, const FLConfig& config, const FairRegConfig* fair) {
  config.check();
  if (fair) fair->check();
  if (fed.size() == 0) throw DataError("run_fedavg: empty federation");

  std::vector<const Dataset*> train_parts;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    if (fed.splits(i).train.n() > 0) train_parts.push_back(&fed.splits(i).train);
  }
  if (train_parts.empty()) throw DataError("run_fedavg: no client has training rows");
  const Dataset train_pool = concat(train_parts);
  const Schema& schema = train_pool.schema();
  if (fair && !schema.is_sensitive(fair->target_attr))
    throw ConfigError("fair: target '" + fair->target_attr + "' is not a sensitive attribute");

  const bool use_fair = fair && fair->lambda > 0;
  FeatureEncoder encoder = FeatureEncoder::fit(train_pool, config.include_sensitive);
  const TrainConfig local_cfg = config.local_train_config();

  // Per-client caches and persistent shuffle streams.
  std::vector<ClientState> clients(fed.size());
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const Dataset& train = fed.splits(i).train;
    clients[i].n = train.n();
    if (train.n() == 0) continue;
    clients[i].X = encoder.transform(train);
    clients[i].y.resize(train.n());
    for (std::int64_t r = 0; r < train.n(); ++r) clients[i].y(r) = train.label(r);
    if (use_fair) clients[i].fair_groups = train.categorical(fair->target_attr);
    clients[i].shuffle_stream = Rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(i)));
  }

  // Pooled evaluation data for the round history.
  std::vector<const Dataset*> val_parts;
  for (std::size_t i = 0; i < fed.size(); ++i)
    if (fed.splits(i).validation.n() > 0) val_parts.push_back(&fed.splits(i).validation);
  PooledEval eval;
  eval.is_validation = !val_parts.empty();
  eval.data = eval.is_validation ? concat(val_parts) : train_pool;
  eval.X = encoder.transform(eval.data);
  eval.labels.assign(eval.data.labels().begin(), eval.data.labels().end());

  Eigen::MatrixXd train_pool_X = encoder.transform(train_pool);
  std::vector<int> train_pool_labels(train_pool.labels().begin(), train_pool.labels().end());

  // theta_0: seeded random weights, shared derivation with train_logistic.
  Eigen::VectorXd w;
  double b = 0;
  Rng init_rng(derive_seed(config.seed, "init"));
  init_logistic_params(w, b, encoder.dim(), init_rng);

  const std::size_t k_total = fed.size();
  const auto participants_per_round = static_cast<std::size_t>(std::max<std::int64_t>(
      1, round_half_away(config.client_fraction * static_cast<double>(k_total))));

  RoundHistory history;
  if (use_fair) history.fair = *fair;

  for (int round = 0; round < config.rounds; ++round) {
    Rng sample_rng(derive_seed(config.seed, "participants", static_cast<std::uint64_t>(round)));
    std::vector<std::size_t> picked =
        sample_rng.sample_without_replacement(k_total, participants_per_round);
    std::sort(picked.begin(), picked.end());  // ordered reduction over client ordinal

    std::vector<Eigen::VectorXd> thetas;
    std::vector<std::int64_t> sizes;
    RoundRecord record;
    record.round = round;
    for (auto i : picked) {
      record.participants.push_back(fed.client_id(i));
      record.sizes.push_back(clients[i].n);
      if (clients[i].n == 0) continue;  // nothing to train on; contributes nothing

      Eigen::VectorXd local_w = w;
      double local_b = b;
      FairRegSpec reg;
      if (use_fair) {
        reg.lambda = fair->lambda;
        reg.groups = &clients[i].fair_groups;
      }
      sgd_epochs(local_w, local_b, clients[i].X, clients[i].y, local_cfg, config.local_epochs,
                 clients[i].shuffle_stream, use_fair ? &reg : nullptr);

      Eigen::VectorXd theta(local_w.size() + 1);
      theta.head(local_w.size()) = local_w;
      theta(local_w.size()) = local_b;
      thetas.push_back(std::move(theta));
      sizes.push_back(clients[i].n);
    }
    if (!thetas.empty()) {
      const Eigen::VectorXd agg = aggregate_weighted(thetas, sizes);
      w = agg.head(agg.size() - 1);
      b = agg(agg.size() - 1);
    }

    record.train_accuracy =
        accuracy(hard_predictions(w, b, train_pool_X), train_pool_labels);
    const std::vector<int> eval_preds = hard_predictions(w, b, eval.X);
    if (eval.is_validation) record.val_accuracy = accuracy(eval_preds, eval.labels);
    for (const auto& attr : schema.sensitive) {
      std::optional<double> dd;
      try {
        dd = demographic_disparity(eval_preds, eval.data, attr).dd;
      } catch (const DataError&) {
        dd = std::nullopt;
      }
      record.dd.emplace_back(attr, dd);
    }
    history.rounds.push_back(std::move(record));
  }

  FlResult out;
  out.model.weights = std::move(w);
  out.model.bias = b;
  out.model.l2 = config.l2_penalty;
  out.model.encoder = std::move(encoder);
  out.history = std::move(history);
  return out;
}

}  // namespace

FlResult run_fedavg(const FederatedDataset& fed, const FLConfig& config) {
  return run_fl(fed, config, nullptr);
}

FlResult run_fair_fedavg(const FederatedDataset& fed, const FLConfig& config,
                         const FairRegConfig& fair) {
  return run_fl(fed, config, &fair);
}

LogisticFit train_pooled(const FederatedDataset& fed, const FLConfig& config) {
  if (fed.size() == 0) throw DataError("train_pooled: empty federation");
  std::vector<const Dataset*> train_parts, val_parts, test_parts;
  for (std::size_t i = 0; i < fed.size(); ++i) {
    if (fed.splits(i).train.n() > 0) train_parts.push_back(&fed.splits(i).train);
    if (fed.splits(i).validation.n() > 0) val_parts.push_back(&fed.splits(i).validation);
    if (fed.splits(i).test.n() > 0) test_parts.push_back(&fed.splits(i).test);
  }
  if (train_parts.empty()) throw DataError("train_pooled: no training rows");
  const SchemaPtr schema = train_parts.front()->schema_ptr();
  SplitSet pooled;
  pooled.train = concat(train_parts);
  pooled.validation = val_parts.empty() ? Dataset::empty(schema) : concat(val_parts);
  pooled.test = test_parts.empty() ? Dataset::empty(schema) : concat(test_parts);
  return train_logistic(pooled, config.local_train_config());
}

EvalMode EvalMode::cross_device(std::vector<ClientId> test_clients) {
  EvalMode mode;
  mode.kind = Kind::cross_device;
  mode.test_clients = std::move(test_clients);
  return mode;
}

std::map<ClientId, ClientEval> evaluate_global(const LinearModel& model,
                                               const FederatedDataset& fed, const EvalMode& mode,
                                               const std::vector<std::string>& attrs,
                                               Metric metric, FairnessLevel level) {
  std::map<ClientId, ClientEval> out;
  if (mode.kind == EvalMode::Kind::cross_silo) {
    for (std::size_t i = 0; i < fed.size(); ++i) {
      const ClientId& id = fed.client_id(i);
      const Dataset& test = fed.splits(i).test;
      if (test.n() == 0)
        throw DataError("evaluate_global: client '" + id + "' has no test split");
      ClientEval eval;
      auto preds = predict(model, test);
      eval.report = fairness_table(test, preds.labels, attrs, metric, level, "global");
      eval.accuracy = accuracy(preds.labels, test.labels());
      eval.n = test.n();
      out.emplace(id, std::move(eval));
    }
    return out;
  }

  if (mode.test_clients.empty())
    throw ConfigError("evaluate_global: cross_device mode requires assigned test clients");
  for (const auto& id : mode.test_clients) {
    const SplitSet& splits = fed.splits(id);  // throws on unknown client
    std::vector<const Dataset*> parts;
    for (const Dataset* d : {&splits.train, &splits.validation, &splits.test})
      if (d->n() > 0) parts.push_back(d);
    if (parts.empty()) throw DataError("evaluate_global: test client '" + id + "' has no rows");
    const Dataset full = concat(parts);
    ClientEval eval;
    auto preds = predict(model, full);
    eval.report = fairness_table(full, preds.labels, attrs, metric, level, "global");
    eval.accuracy = accuracy(preds.labels, full.labels());
    eval.n = full.n();
    out.emplace(id, std::move(eval));
  }
  return out;
}

// ---------------------------------------------------------------------------
// History serialization
// ---------------------------------------------------------------------------

ordered_json RoundHistory::to_json() const {
  ordered_json j;
  if (fair) {
    j["fair"] = ordered_json{{"lambda", fair->lambda},
                             {"target_dd", fair->target_dd},
                             {"target_attr", fair->target_attr}};
  } else {
    j["fair"] = nullptr;
  }
  ordered_json rounds_json = ordered_json::array();
  for (const auto& r : rounds) {
    ordered_json rj;
    rj["round"] = r.round;
    rj["participants"] = r.participants;
    rj["sizes"] = r.sizes;
    rj["train_accuracy"] = r.train_accuracy;
    rj["val_accuracy"] = r.val_accuracy ? ordered_json(*r.val_accuracy) : ordered_json(nullptr);
    ordered_json dd;
    for (const auto& [attr, value] : r.dd)
      dd[attr] = value ? ordered_json(*value) : ordered_json(nullptr);
    rj["dd"] = std::move(dd);
    rounds_json.push_back(std::move(rj));
  }
  j["rounds"] = std::move(rounds_json);
  return j;
}

void RoundHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> header{"round", "participants", "sizes", "train_accuracy",
                                  "val_accuracy"};
  if (!rounds.empty())
    for (const auto& [attr, value] : rounds.front().dd) header.push_back("dd_" + attr);
  out << csv::join_line(header) << '\n';
  for (const auto& r : rounds) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(r.round));
    std::string participants, sizes;
    for (std::size_t i = 0; i < r.participants.size(); ++i) {
      if (i) {
        participants += ';';
        sizes += ';';
      }
      participants += r.participants[i];
      sizes += std::to_string(r.sizes[i]);
    }
    cells.push_back(participants);
    cells.push_back(sizes);
    cells.push_back(csv::format_double(r.train_accuracy));
    cells.push_back(r.val_accuracy ? csv::format_double(*r.val_accuracy) : "undefined");
    for (const auto& [attr, value] : r.dd)
      cells.push_back(value ? csv::format_double(*value) : "undefined");
    out << csv::join_line(cells) << '\n';
  }
}

// ---------------------------------------------------------------------------
// FL hyperparameter search
// ---------------------------------------------------------------------------

namespace {

std::vector<FLConfig> expand_fl_grid(const FLConfig& base, const FlTuneGrid& grid) {
  const auto lrs =
      grid.learning_rates.empty() ? std::vector<double>{base.learning_rate} : grid.learning_rates;
  const auto batches =
      grid.batch_sizes.empty() ? std::vector<int>{base.batch_size} : grid.batch_sizes;
  const auto eps =
      grid.local_epochs.empty() ? std::vector<int>{base.local_epochs} : grid.local_epochs;
  const auto opts =
      grid.optimizers.empty() ? std::vector<Optimizer>{base.optimizer} : grid.optimizers;
  std::vector<FLConfig> out;
  for (double lr : lrs)
    for (int bs : batches)
      for (int e : eps)
        for (Optimizer o : opts) {
          FLConfig c = base;
          c.learning_rate = lr;
          c.batch_size = bs;
          c.local_epochs = e;
          c.optimizer = o;
          out.push_back(c);
        }
  return out;
}

template <typename T>
std::vector<T> random_subset(std::vector<T> items, int max_random, std::uint64_t seed) {
  if (max_random <= 0 || static_cast<std::size_t>(max_random) >= items.size()) return items;
  Rng rng(derive_seed(seed, "fl_tune_sample"));
  auto picks = rng.sample_without_replacement(items.size(), static_cast<std::size_t>(max_random));
  std::sort(picks.begin(), picks.end());
  std::vector<T> out;
  for (auto i : picks) out.push_back(items[i]);
  return out;
}

double final_val_accuracy(const FlResult& result) {
  if (result.history.rounds.empty() || !result.history.rounds.back().val_accuracy)
    throw ConfigError("fl tuning: federation has no validation rows");
  return *result.history.rounds.back().val_accuracy;
}

std::optional<double> final_dd(const FlResult& result, const std::string& attr) {
  if (result.history.rounds.empty()) return std::nullopt;
  for (const auto& [name, value] : result.history.rounds.back().dd)
    if (name == attr) return value;
  return std::nullopt;
}

}  // namespace

FlTuneResult tune_fedavg(const FederatedDataset& fed, const FLConfig& base,
                         const FlTuneGrid& grid, int max_random, std::uint64_t seed) {
  auto candidates = random_subset(expand_fl_grid(base, grid), max_random, seed);
  FlTuneResult best;
  bool first = true;
  for (const auto& candidate : candidates) {
    const double acc = final_val_accuracy(run_fedavg(fed, candidate));
    if (first || acc > best.validation_accuracy) {
      best.config = candidate;
      best.validation_accuracy = acc;
      first = false;
    }
  }
  if (first) throw ConfigError("tune_fedavg: empty candidate set");
  return best;
}

FlTuneResult tune_fair_fedavg(const FederatedDataset& fed, const FLConfig& base,
                              const FairRegConfig& fair, const FlTuneGrid& grid, int max_random,
                              std::uint64_t seed) {
  const auto lambdas = grid.lambdas.empty() ? std::vector<double>{fair.lambda} : grid.lambdas;
  struct Candidate {
    FLConfig config;
    double lambda;
  };
  std::vector<Candidate> candidates;
  for (const auto& cfg : expand_fl_grid(base, grid))
    for (double lambda : lambdas) candidates.push_back({cfg, lambda});
  candidates = random_subset(std::move(candidates), max_random, seed);

  FlTuneResult best_feasible, best_any;
  bool have_feasible = false, have_any = false;
  for (const auto& candidate : candidates) {
    FairRegConfig f = fair;
    f.lambda = candidate.lambda;
    FlResult result = run_fair_fedavg(fed, candidate.config, f);
    const double acc = final_val_accuracy(result);
    const std::optional<double> dd = final_dd(result, fair.target_attr);
    if (dd && *dd <= fair.target_dd) {
      if (!have_feasible || acc > best_feasible.validation_accuracy) {
        best_feasible = {candidate.config, candidate.lambda, acc, dd};
        have_feasible = true;
      }
    }
    if (dd && (!have_any || *dd < *best_any.validation_dd)) {
      best_any = {candidate.config, candidate.lambda, acc, dd};
      have_any = true;
    }
  }
  if (have_feasible) return best_feasible;
  if (have_any) return best_any;
  throw ConfigError("tune_fair_fedavg: no candidate produced a defined validation DD");
}

}  // namespace fedfair
