#include "fedfair/report.hpp"

#include <fstream>
#include <set>

#include "datasheet_template.hpp"
#include "fedfair/csv.hpp"
#include "fedfair/error.hpp"

namespace fedfair {

namespace {

std::optional<double> safe_label_dd(const Dataset& data, const std::string& attr) {
  try {
    std::vector<int> preds(data.labels().begin(), data.labels().end());
    return demographic_disparity(preds, data, attr).dd;
  } catch (const DataError&) {
    return std::nullopt;
  }
}

std::string opt_str(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : "undefined";
}

}  // namespace

ClientStatsTable client_stats(const FederatedDataset& fed,
                              const std::map<ClientId, ClientEval>* local_evals) {
  ClientStatsTable table;
  if (fed.size() == 0) return table;
  table.attrs = fed.splits(std::size_t{0}).train.schema().sensitive;

  for (std::size_t i = 0; i < fed.size(); ++i) {
    const ClientId& id = fed.client_id(i);
    const SplitSet& splits = fed.splits(i);
    ClientStatsRow row;
    row.client = id;
    row.n_train = splits.train.n();
    row.n_validation = splits.validation.n();
    row.n_test = splits.test.n();

    std::vector<const Dataset*> parts;
    for (const Dataset* d : {&splits.train, &splits.validation, &splits.test})
      if (d->n() > 0) parts.push_back(d);
    if (!parts.empty()) {
      const Dataset full = concat(parts);
      for (const auto& attr : table.attrs) row.label_dd.emplace_back(attr, safe_label_dd(full, attr));
    } else {
      for (const auto& attr : table.attrs) row.label_dd.emplace_back(attr, std::nullopt);
    }

    if (local_evals) {
      auto it = local_evals->find(id);
      if (it != local_evals->end()) {
        row.local_accuracy = it->second.accuracy;
        for (const auto& attr : table.attrs) {
          std::optional<double> dd;
          for (const auto& a : it->second.report.attributes)
            if (a.attr == attr) dd = a.max_value;
          row.local_dd.emplace_back(attr, dd);
        }
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ordered_json ClientStatsTable::to_json() const {
  ordered_json rows_json = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json j;
    j["client"] = row.client;
    j["n_train"] = row.n_train;
    j["n_validation"] = row.n_validation;
    j["n_test"] = row.n_test;
    ordered_json dd;
    for (const auto& [attr, value] : row.label_dd)
      dd[attr] = value ? ordered_json(*value) : ordered_json(nullptr);
    j["label_dd"] = std::move(dd);
    j["local_accuracy"] =
        row.local_accuracy ? ordered_json(*row.local_accuracy) : ordered_json(nullptr);
    ordered_json ldd;
    for (const auto& [attr, value] : row.local_dd)
      ldd[attr] = value ? ordered_json(*value) : ordered_json(nullptr);
    j["local_dd"] = std::move(ldd);
    rows_json.push_back(std::move(j));
  }
  ordered_json out;
  out["attrs"] = attrs;
  out["clients"] = std::move(rows_json);
  return out;
}

void ClientStatsTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> header{"client", "n_train", "n_validation", "n_test"};
  for (const auto& attr : attrs) header.push_back("label_dd_" + attr);
  header.push_back("local_accuracy");
  for (const auto& attr : attrs) header.push_back("local_dd_" + attr);
  out << csv::join_line(header) << '\n';
  for (const auto& row : rows) {
    std::vector<std::string> cells{row.client, std::to_string(row.n_train),
                                   std::to_string(row.n_validation), std::to_string(row.n_test)};
    for (const auto& [attr, value] : row.label_dd) cells.push_back(opt_str(value));
    cells.push_back(row.local_accuracy ? csv::format_double(*row.local_accuracy) : "undefined");
    if (row.local_dd.empty())
      for (std::size_t i = 0; i < attrs.size(); ++i) cells.push_back("undefined");
    else
      for (const auto& [attr, value] : row.local_dd) cells.push_back(opt_str(value));
    out << csv::join_line(cells) << '\n';
  }
}

ComparisonReport compare(const std::map<ClientId, ClientEval>& local_evals,
                         const std::map<ClientId, ClientEval>& global_evals,
                         const std::map<ClientId, std::optional<BiasTarget>>& bias_labels) {
  if (local_evals.empty()) throw ConfigError("compare: no local evaluations");
  if (local_evals.size() != global_evals.size())
    throw ConfigError("compare: local and global evaluations cover different clients");
  for (const auto& [id, eval] : local_evals)
    if (!global_evals.count(id))
      throw ConfigError("compare: client '" + id + "' missing from global evaluations");

  ComparisonReport report;
  const FairnessReport& first = local_evals.begin()->second.report;
  report.metric = first.metric;
  report.level = first.level;
  for (const auto& a : first.attributes) report.attrs.push_back(a.attr);

  for (const auto& [id, local] : local_evals) {
    const ClientEval& global = global_evals.at(id);
    std::optional<BiasTarget> label;
    if (auto it = bias_labels.find(id); it != bias_labels.end()) label = it->second;
    for (const auto& attr : report.attrs) {
      CompareEntry entry;
      entry.client = id;
      entry.attr = attr;
      const AttrTable& la = local.report.attribute(attr);
      const AttrTable& ga = global.report.attribute(attr);
      entry.local_value = la.max_value;
      entry.global_value = ga.max_value;
      if (entry.local_value && entry.global_value)
        entry.delta = *entry.global_value - *entry.local_value;
      entry.argmax_before = la.argmax_value;
      entry.argmax_after = ga.argmax_value;
      entry.biased_toward = label;
      report.entries.push_back(std::move(entry));
    }
    report.accuracies[id] = {local.accuracy, global.accuracy};
  }
  return report;
}

ordered_json ComparisonReport::to_json() const {
  ordered_json entries_json = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json j;
    j["client"] = e.client;
    j["attr"] = e.attr;
    j["local"] = e.local_value ? ordered_json(*e.local_value) : ordered_json(nullptr);
    j["global"] = e.global_value ? ordered_json(*e.global_value) : ordered_json(nullptr);
    j["delta"] = e.delta ? ordered_json(*e.delta) : ordered_json(nullptr);
    j["argmax_before"] =
        e.argmax_before ? ordered_json(*e.argmax_before) : ordered_json(nullptr);
    j["argmax_after"] = e.argmax_after ? ordered_json(*e.argmax_after) : ordered_json(nullptr);
    j["biased_toward"] =
        e.biased_toward ? ordered_json(e.biased_toward->describe()) : ordered_json(nullptr);
    entries_json.push_back(std::move(j));
  }
  ordered_json acc;
  for (const auto& [id, pair] : accuracies)
    acc[id] = ordered_json{{"local", pair.first}, {"global", pair.second}};
  ordered_json out;
  out["metric"] = to_string(metric);
  out["level"] = to_string(level);
  out["attrs"] = attrs;
  out["entries"] = std::move(entries_json);
  out["accuracies"] = std::move(acc);
  return out;
}

void ComparisonReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << csv::join_line({"client", "attr", "local", "global", "delta", "argmax_before",
                         "argmax_after", "biased_toward", "local_accuracy", "global_accuracy"})
      << '\n';
  for (const auto& e : entries) {
    const auto& acc = accuracies.at(e.client);
    std::vector<std::string> cells{
        e.client,
        e.attr,
        opt_str(e.local_value),
        opt_str(e.global_value),
        opt_str(e.delta),
        e.argmax_before ? std::to_string(*e.argmax_before) : "undefined",
        e.argmax_after ? std::to_string(*e.argmax_after) : "undefined",
        e.biased_toward ? e.biased_toward->describe() : "none",
        csv::format_double(acc.first),
        csv::format_double(acc.second)};
    out << csv::join_line(cells) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Datasheet
// ---------------------------------------------------------------------------

namespace {

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  std::set<std::string> used;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = tpl.find("{{", pos);
    if (open == std::string::npos) {
      out += tpl.substr(pos);
      break;
    }
    out += tpl.substr(pos, open - pos);
    const std::size_t close = tpl.find("}}", open);
    if (close == std::string::npos)
      throw ConfigError("datasheet template: unterminated placeholder");
    const std::string key = tpl.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("datasheet template: unknown key '" + key + "'");
    out += it->second;
    used.insert(key);
    pos = close + 2;
  }
  for (const auto& [key, value] : values)
    if (!used.count(key))
      throw ConfigError("datasheet: record field '" + key + "' is not used by the template");
  return out;
}

std::string modifications_table(const std::vector<Modification>& mods) {
  if (mods.empty()) return "none";
  std::string out =
      "| clients | kind | fraction | attribute | value | secondary | splits | seed |\n"
      "|---|---|---|---|---|---|---|---|\n";
  for (const auto& m : mods) {
    std::string clients = "all";
    if (!m.clients.empty()) {
      clients.clear();
      for (std::size_t i = 0; i < m.clients.size(); ++i) {
        if (i) clients += ", ";
        clients += m.clients[i];
      }
    }
    std::string splits;
    for (std::size_t i = 0; i < m.splits.size(); ++i) {
      if (i) splits += ", ";
      splits += to_string(m.splits[i]);
    }
    out += "| " + clients + " | " + (m.kind == ModKind::flip ? "flip" : "drop") + " | " +
           csv::format_double(m.fraction) + " | " + m.attr + " | " + std::to_string(m.value) +
           " | " +
           (m.secondary ? m.secondary->first + "=" + std::to_string(m.secondary->second)
                        : std::string("-")) +
           " | " + splits + " | " + std::to_string(m.seed) + " |\n";
  }
  out.pop_back();  // trailing newline lives in the template
  return out;
}

std::string fairness_summary(const std::vector<std::pair<ClientId, FairnessReport>>& reports) {
  if (reports.empty()) return "(no reports)";
  std::string out =
      "| client | source | metric | level | attribute | max | argmax |\n"
      "|---|---|---|---|---|---|---|\n";
  for (const auto& [client, report] : reports) {
    for (const auto& a : report.attributes) {
      std::string argmax = "-";
      if (a.argmax_pair)
        argmax = "pair (" + std::to_string(a.argmax_pair->first) + ", " +
                 std::to_string(a.argmax_pair->second) + ")";
      if (a.argmax_cell)
        argmax = "cell (y=" + std::to_string(a.argmax_cell->first) + ", z=" +
                 std::to_string(a.argmax_cell->second) + ")";
      if (a.argmax_value) argmax += ", value " + std::to_string(*a.argmax_value);
      out += "| " + client + " | " + report.source + " | " + to_string(report.metric) + " | " +
             to_string(report.level) + " | " + a.attr + " | " +
             (a.max_value ? csv::format_double(*a.max_value) : "undefined") + " | " + argmax +
             " |\n";
    }
  }
  out.pop_back();
  return out;
}

}  // namespace

std::string generate_datasheet(const GenerationRecord& record,
                               const std::vector<std::pair<ClientId, FairnessReport>>& reports) {
  std::map<std::string, std::string> values;
  values["library_version"] = record.library_version;
  values["base_task"] = record.base_task;
  values["year"] = std::to_string(record.year);
  values["horizon"] = record.horizon;
  std::string states = "none";
  if (!record.states.empty()) {
    states.clear();
    for (std::size_t i = 0; i < record.states.size(); ++i) {
      if (i) states += ", ";
      states += record.states[i];
    }
  }
  values["states"] = states;
  values["partitioner"] = record.partitioner;
  values["split_fractions"] = "train=" + csv::format_double(record.split_fractions.train) +
                              ", validation=" + csv::format_double(record.split_fractions.validation) +
                              ", test=" + csv::format_double(record.split_fractions.test);
  values["seed"] = std::to_string(record.seed);
  values["modifications_table"] = modifications_table(record.modifications);
  values["threshold_rule"] = record.threshold_rule.empty() ? "none" : record.threshold_rule;
  values["device_sampling"] = record.device_sampling.empty() ? "none" : record.device_sampling;
  values["config_json"] = record.config_json.empty()
                              ? "(not provided)"
                              : "```json\n" + record.config_json + "\n```";
  values["fairness_summary"] = fairness_summary(reports);
  return render_template(detail::kDatasheetTemplate, values);
}

}  // namespace fedfair
