#include "fedfair/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fedfair/csv.hpp"
#include "fedfair/error.hpp"

namespace fedfair {

const char* to_string(Metric m) { return m == Metric::dd ? "dd" : "eod"; }

const char* to_string(FairnessLevel l) {
  switch (l) {
    case FairnessLevel::attribute: return "attribute";
    case FairnessLevel::value: return "value";
    case FairnessLevel::attribute_value: return "attribute_value";
  }
  return "?";
}

Metric metric_from_string(const std::string& s) {
  if (s == "dd") return Metric::dd;
  if (s == "eod") return Metric::eod;
  throw ConfigError("unknown metric: " + s);
}

FairnessLevel level_from_string(const std::string& s) {
  if (s == "attribute") return FairnessLevel::attribute;
  if (s == "value") return FairnessLevel::value;
  if (s == "attribute_value") return FairnessLevel::attribute_value;
  throw ConfigError("unknown fairness level: " + s);
}

namespace {

// Exact rate-gap from integer counts: |p_i/c_i - p_j/c_j| computed as
// |p_i*c_j - p_j*c_i| / (c_i*c_j). One rounding, reproducible everywhere.
double count_gap(std::int64_t pi, std::int64_t ci, std::int64_t pj, std::int64_t cj) {
  return std::abs(static_cast<double>(pi * cj - pj * ci)) / static_cast<double>(ci * cj);
}

double signed_count_gap(std::int64_t pi, std::int64_t ci, std::int64_t pj, std::int64_t cj) {
  return static_cast<double>(pi * cj - pj * ci) / static_cast<double>(ci * cj);
}

GroupRates build_rates(const std::vector<int>& preds, const std::vector<int>* labels,
                       const Dataset& dataset, const std::string& attr) {
  const Schema& schema = dataset.schema();
  if (!schema.is_sensitive(attr))
    throw ConfigError("'" + attr + "' is not a sensitive attribute");
  if (static_cast<std::int64_t>(preds.size()) != dataset.n())
    throw DataError("prediction count (" + std::to_string(preds.size()) +
                    ") does not match dataset size (" + std::to_string(dataset.n()) + ")");
  if (labels && labels->size() != preds.size())
    throw DataError("label count does not match prediction count");

  const ColumnSchema& col = schema.column(attr);
  const auto& codes = dataset.categorical(attr);

  GroupRates out;
  out.attr = attr;
  out.groups.reserve(col.allowed_values.size());
  for (auto v : col.allowed_values) {
    GroupRate g;
    g.value = v;
    out.groups.push_back(g);
  }
  auto slot = [&](std::int32_t v) -> GroupRate& {
    auto it = std::lower_bound(col.allowed_values.begin(), col.allowed_values.end(), v);
    return out.groups[static_cast<std::size_t>(it - col.allowed_values.begin())];
  };

  for (std::size_t r = 0; r < preds.size(); ++r) {
    GroupRate& g = slot(codes[r]);
    g.count += 1;
    const int p = preds[r] ? 1 : 0;
    g.positives += p;
    if (labels) {
      const int y = (*labels)[r] ? 1 : 0;
      if (y) {
        g.label_pos += 1;
        g.tp += p;
      } else {
        g.label_neg += 1;
        g.fp += p;
      }
    }
  }
  for (auto& g : out.groups) {
    if (g.count > 0)
      g.rate = static_cast<double>(g.positives) / static_cast<double>(g.count);
    else
      out.warnings.push_back("group " + out.attr + "=" + std::to_string(g.value) +
                             " is empty; excluded from maxima");
    if (labels) {
      if (g.label_pos > 0) g.tpr = static_cast<double>(g.tp) / static_cast<double>(g.label_pos);
      if (g.label_neg > 0) g.fpr = static_cast<double>(g.fp) / static_cast<double>(g.label_neg);
    }
  }
  return out;
}

}  // namespace

GroupRates demographic_parity_rates(const std::vector<int>& preds, const Dataset& dataset,
                                    const std::string& attr) {
  return build_rates(preds, nullptr, dataset, attr);
}

DdResult demographic_disparity(const std::vector<int>& preds, const Dataset& dataset,
                               const std::string& attr) {
  DdResult out;
  out.rates = build_rates(preds, nullptr, dataset, attr);
  const auto& groups = out.rates.groups;

  int non_empty = 0;
  for (const auto& g : groups)
    if (g.count > 0) ++non_empty;
  if (non_empty < 2)
    throw DataError("DD undefined for '" + attr + "': fewer than two non-empty groups");

  std::int64_t total = 0, total_pos = 0;
  for (const auto& g : groups) {
    total += g.count;
    total_pos += g.positives;
  }

  bool first = true;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].count == 0) continue;
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      if (groups[j].count == 0) continue;
      const double d =
          count_gap(groups[i].positives, groups[i].count, groups[j].positives, groups[j].count);
      out.pairs.push_back({groups[i].value, groups[j].value, d});
      if (first || d > out.dd) {
        out.dd = d;
        out.argmax = {groups[i].value, groups[j].value};
        first = false;
      }
    }
    // Signed one-vs-rest gap; the complement is everyone outside the group.
    const std::int64_t rc = total - groups[i].count;
    OneVsRest ovr;
    ovr.value = groups[i].value;
    if (rc > 0)
      ovr.diff = signed_count_gap(groups[i].positives, groups[i].count,
                                  total_pos - groups[i].positives, rc);
    out.per_value.push_back(ovr);
  }
  return out;
}

EodResult equalized_odds_difference(const std::vector<int>& preds, const std::vector<int>& labels,
                                    const Dataset& dataset, const std::string& attr) {
  for (int y : labels)
    if (y != 0 && y != 1) throw DataError("equalized_odds_difference: labels must be binary");

  EodResult out;
  out.rates = build_rates(preds, &labels, dataset, attr);
  out.warnings = out.rates.warnings;
  const auto& groups = out.rates.groups;

  std::int64_t all_pos = 0, all_neg = 0, all_tp = 0, all_fp = 0;
  for (const auto& g : groups) {
    all_pos += g.label_pos;
    all_neg += g.label_neg;
    all_tp += g.tp;
    all_fp += g.fp;
  }

  bool found = false;
  for (const auto& g : groups) {
    if (g.count == 0) continue;
    for (int y = 0; y <= 1; ++y) {
      const std::int64_t gc = y ? g.label_pos : g.label_neg;
      const std::int64_t gp = y ? g.tp : g.fp;
      const std::int64_t rc = (y ? all_pos : all_neg) - gc;
      const std::int64_t rp = (y ? all_tp : all_fp) - gp;
      EodCell cell;
      cell.y = y;
      cell.value = g.value;
      if (gc > 0 && rc > 0) {
        cell.gap = count_gap(gp, gc, rp, rc);
        if (!found || *cell.gap > out.eod) {
          out.eod = *cell.gap;
          out.argmax = {y, g.value};
          found = true;
        }
      } else {
        out.warnings.push_back("cell (y=" + std::to_string(y) + ", " + attr + "=" +
                               std::to_string(g.value) +
                               ") undefined: a side lacks label class " + std::to_string(y));
      }
      out.cells.push_back(cell);
    }
  }
  if (!found)
    throw DataError("EOD undefined for '" + attr + "': no (y, z) cell has both sides populated");
  return out;
}

const AttrTable& FairnessReport::attribute(const std::string& name) const {
  for (const auto& a : attributes)
    if (a.attr == name) return a;
  throw ConfigError("report has no attribute '" + name + "'");
}

FairnessReport fairness_table(const Dataset& dataset, const std::vector<int>& preds,
                              const std::vector<std::string>& attrs, Metric metric,
                              FairnessLevel level, const std::string& source) {
  if (attrs.empty()) throw ConfigError("fairness_table: no attributes given");
  FairnessReport report;
  report.metric = metric;
  report.level = level;
  report.source = source;

  for (const auto& attr : attrs) {
    AttrTable table;
    table.attr = attr;
    try {
      if (metric == Metric::dd) {
        DdResult r = demographic_disparity(preds, dataset, attr);
        table.max_value = r.dd;
        table.argmax_pair = r.argmax;
        table.groups = r.rates.groups;
        table.pairs = std::move(r.pairs);
        table.per_value = std::move(r.per_value);
        table.warnings = r.rates.warnings;
        // Value identity: the value with the largest absolute one-vs-rest gap.
        bool first = true;
        double best = 0;
        for (const auto& ovr : table.per_value) {
          if (!ovr.diff) continue;
          const double a = std::abs(*ovr.diff);
          if (first || a > best) {
            best = a;
            table.argmax_value = ovr.value;
            first = false;
          }
        }
      } else {
        std::vector<int> labels(dataset.labels().begin(), dataset.labels().end());
        EodResult r = equalized_odds_difference(preds, labels, dataset, attr);
        table.max_value = r.eod;
        table.argmax_cell = r.argmax;
        table.argmax_value = r.argmax.second;
        table.groups = r.rates.groups;
        table.eod_cells = std::move(r.cells);
        table.warnings = std::move(r.warnings);
      }
    } catch (const DataError& e) {
      table.max_value = std::nullopt;
      table.warnings.push_back(e.what());
    }
    report.attributes.push_back(std::move(table));
  }
  return report;
}

FairnessReport fairness_table(const Dataset& dataset, const std::vector<std::string>& attrs,
                              Metric metric, FairnessLevel level) {
  std::vector<int> preds(dataset.labels().begin(), dataset.labels().end());
  return fairness_table(dataset, preds, attrs, metric, level, "true_labels");
}

std::string BiasTarget::describe() const {
  return value ? attr + "=" + std::to_string(*value) : attr;
}

std::optional<BiasTarget> bias_label(const std::vector<FairnessReport>& reports_by_model,
                                     double threshold) {
  if (reports_by_model.size() < 2)
    throw ConfigError("bias_label: needs reports from at least two models");

  const auto attr_names = [](const FairnessReport& r) {
    std::set<std::string> names;
    for (const auto& a : r.attributes) names.insert(a.attr);
    return names;
  };
  const auto ref_names = attr_names(reports_by_model.front());
  const FairnessLevel level = reports_by_model.front().level;
  for (const auto& r : reports_by_model) {
    if (attr_names(r) != ref_names)
      throw ConfigError("bias_label: reports cover different attribute sets");
    if (r.level != level) throw ConfigError("bias_label: reports have different levels");
  }

  std::optional<BiasTarget> agreed;
  double min_of_max = 0;
  bool first_model = true;
  for (const auto& report : reports_by_model) {
    // Argmax attribute; ties go to the lexicographically lowest name.
    const AttrTable* best = nullptr;
    for (const auto& a : report.attributes) {
      if (!a.max_value) continue;
      if (!best || *a.max_value > *best->max_value ||
          (*a.max_value == *best->max_value && a.attr < best->attr))
        best = &a;
    }
    if (!best) return std::nullopt;  // nothing measurable

    BiasTarget target;
    target.attr = best->attr;
    if (level != FairnessLevel::attribute) {
      if (!best->argmax_value) return std::nullopt;
      target.value = best->argmax_value;
    }
    if (first_model) {
      agreed = target;
      min_of_max = *best->max_value;
      first_model = false;
    } else {
      if (!(target == *agreed)) return std::nullopt;  // models disagree
      min_of_max = std::min(min_of_max, *best->max_value);
    }
  }
  if (!(min_of_max > threshold)) return std::nullopt;
  return agreed;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json opt_num(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json report_to_json(const FairnessReport& report) {
  using json = nlohmann::ordered_json;
  json attrs = json::array();
  const bool with_argmax = report.level != FairnessLevel::attribute;
  const bool with_detail = report.level == FairnessLevel::attribute_value;
  for (const auto& a : report.attributes) {
    json aj;
    aj["attr"] = a.attr;
    aj["max"] = opt_num(a.max_value);
    if (with_argmax) {
      aj["argmax_pair"] = a.argmax_pair ? json::array({a.argmax_pair->first, a.argmax_pair->second})
                                        : json(nullptr);
      aj["argmax_value"] = a.argmax_value ? json(*a.argmax_value) : json(nullptr);
      aj["argmax_cell"] = a.argmax_cell
                              ? json{{"y", a.argmax_cell->first}, {"z", a.argmax_cell->second}}
                              : json(nullptr);
    }
    if (with_detail) {
      json groups = json::array();
      for (const auto& g : a.groups) {
        json gj;
        gj["value"] = g.value;
        gj["count"] = g.count;
        gj["rate"] = opt_num(g.rate);
        if (report.metric == Metric::eod) {
          gj["tpr"] = opt_num(g.tpr);
          gj["fpr"] = opt_num(g.fpr);
        }
        groups.push_back(std::move(gj));
      }
      aj["groups"] = std::move(groups);
      if (report.metric == Metric::dd) {
        json pairs = json::array();
        for (const auto& p : a.pairs)
          pairs.push_back(json{{"zi", p.zi}, {"zj", p.zj}, {"diff", p.diff}});
        aj["pairs"] = std::move(pairs);
        json ovr = json::array();
        for (const auto& v : a.per_value)
          ovr.push_back(json{{"value", v.value}, {"diff", opt_num(v.diff)}});
        aj["one_vs_rest"] = std::move(ovr);
      } else {
        json cells = json::array();
        for (const auto& c : a.eod_cells)
          cells.push_back(json{{"y", c.y}, {"z", c.value}, {"gap", opt_num(c.gap)}});
        aj["cells"] = std::move(cells);
      }
    }
    aj["warnings"] = a.warnings;
    attrs.push_back(std::move(aj));
  }
  json out;
  out["metric"] = to_string(report.metric);
  out["level"] = to_string(report.level);
  out["source"] = report.source;
  out["attributes"] = std::move(attrs);
  return out;
}

void reports_to_csv(const std::vector<std::pair<ClientId, FairnessReport>>& reports,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << csv::join_line({"kind", "client", "source", "metric", "level", "attr", "value_a",
                         "value_b", "y", "count", "rate", "metric_value"})
      << '\n';
  auto num = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : "undefined"; };
  for (const auto& [client, report] : reports) {
    const std::string metric = to_string(report.metric);
    const std::string level = to_string(report.level);
    const bool with_argmax = report.level != FairnessLevel::attribute;
    const bool with_detail = report.level == FairnessLevel::attribute_value;
    for (const auto& a : report.attributes) {
      std::string va, vb, y;
      if (with_argmax) {
        if (a.argmax_pair) {
          va = std::to_string(a.argmax_pair->first);
          vb = std::to_string(a.argmax_pair->second);
        }
        if (a.argmax_cell) {
          y = std::to_string(a.argmax_cell->first);
          va = std::to_string(a.argmax_cell->second);
        }
      }
      out << csv::join_line({"attribute", client, report.source, metric, level, a.attr, va, vb, y,
                             "", "", num(a.max_value)})
          << '\n';
      if (!with_detail) continue;
      if (report.metric == Metric::dd) {
        for (std::size_t i = 0; i < a.groups.size(); ++i) {
          const auto& g = a.groups[i];
          std::optional<double> ovr;
          for (const auto& v : a.per_value)
            if (v.value == g.value) ovr = v.diff;
          out << csv::join_line({"value", client, report.source, metric, level, a.attr,
                                 std::to_string(g.value), "", "", std::to_string(g.count),
                                 num(g.rate), num(ovr)})
              << '\n';
        }
        for (const auto& p : a.pairs)
          out << csv::join_line({"pair", client, report.source, metric, level, a.attr,
                                 std::to_string(p.zi), std::to_string(p.zj), "", "", "",
                                 csv::format_double(p.diff)})
              << '\n';
      } else {
        for (const auto& c : a.eod_cells)
          out << csv::join_line({"cell", client, report.source, metric, level, a.attr,
                                 std::to_string(c.value), "", std::to_string(c.y), "", "",
                                 num(c.gap)})
              << '\n';
      }
    }
  }
}

}  // namespace fedfair
