#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fedfair/rng.hpp"
#include "fedfair/tabular.hpp"

namespace fedfair::testing {

// Quick schema: categorical columns with given allowed values, then numeric
// columns, all categoricals sensitive.
inline SchemaPtr make_schema(
    const std::vector<std::pair<std::string, std::vector<std::int32_t>>>& cats,
    const std::vector<std::string>& nums = {}) {
  auto schema = std::make_shared<Schema>();
  for (const auto& [name, allowed] : cats) {
    ColumnSchema col;
    col.name = name;
    col.kind = ColumnKind::categorical;
    col.allowed_values = allowed;
    schema->columns.push_back(col);
    schema->sensitive.push_back(name);
  }
  for (const auto& name : nums) {
    ColumnSchema col;
    col.name = name;
    col.kind = ColumnKind::numeric;
    schema->columns.push_back(col);
  }
  return schema;
}

inline Dataset make_dataset(SchemaPtr schema,
                            const std::map<std::string, std::vector<std::int32_t>>& cats,
                            const std::map<std::string, std::vector<double>>& nums,
                            const std::vector<std::int8_t>& labels) {
  std::vector<Dataset::ColumnData> columns;
  for (const auto& col : schema->columns) {
    if (col.kind == ColumnKind::categorical)
      columns.emplace_back(cats.at(col.name));
    else
      columns.emplace_back(nums.at(col.name));
  }
  std::vector<std::int64_t> ids(labels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  return Dataset(std::move(schema), std::move(columns), labels, std::move(ids));
}

// ---------------------------------------------------------------------------
// Brute-force fairness oracles, written straight from the definitions and
// independent of the library's group machinery. Rates are plain double
// divisions of integer counts.
// ---------------------------------------------------------------------------

struct OracleDd {
  bool defined = false;
  double dd = 0;
};

inline OracleDd oracle_dd(const std::vector<int>& preds, const std::vector<std::int32_t>& codes) {
  std::map<std::int32_t, std::pair<std::int64_t, std::int64_t>> groups;  // code -> (pos, count)
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& g = groups[codes[i]];
    g.first += preds[i] ? 1 : 0;
    g.second += 1;
  }
  std::vector<double> rates;
  for (const auto& [code, g] : groups)
    if (g.second > 0) rates.push_back(static_cast<double>(g.first) / static_cast<double>(g.second));
  OracleDd out;
  if (rates.size() < 2) return out;
  out.defined = true;
  for (std::size_t i = 0; i < rates.size(); ++i)
    for (std::size_t j = i + 1; j < rates.size(); ++j)
      out.dd = std::max(out.dd, std::abs(rates[i] - rates[j]));
  return out;
}

struct OracleEod {
  bool defined = false;
  double eod = 0;
};

inline OracleEod oracle_eod(const std::vector<int>& preds, const std::vector<int>& labels,
                            const std::vector<std::int32_t>& codes) {
  std::map<std::int32_t, std::array<std::int64_t, 4>> groups;  // (tp, pos, fp, neg)
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& g = groups[codes[i]];
    if (labels[i]) {
      g[0] += preds[i] ? 1 : 0;
      g[1] += 1;
    } else {
      g[2] += preds[i] ? 1 : 0;
      g[3] += 1;
    }
  }
  std::array<std::int64_t, 4> all{0, 0, 0, 0};
  for (const auto& [code, g] : groups)
    for (int k = 0; k < 4; ++k) all[k] += g[k];

  OracleEod out;
  for (const auto& [code, g] : groups) {
    // TPR cell (y = 1)
    const std::int64_t rest_pos = all[1] - g[1];
    if (g[1] > 0 && rest_pos > 0) {
      const double gap = std::abs(static_cast<double>(g[0]) / static_cast<double>(g[1]) -
                                  static_cast<double>(all[0] - g[0]) / static_cast<double>(rest_pos));
      out.eod = std::max(out.eod, gap);
      out.defined = true;
    }
    // FPR cell (y = 0)
    const std::int64_t rest_neg = all[3] - g[3];
    if (g[3] > 0 && rest_neg > 0) {
      const double gap = std::abs(static_cast<double>(g[2]) / static_cast<double>(g[3]) -
                                  static_cast<double>(all[2] - g[2]) / static_cast<double>(rest_neg));
      out.eod = std::max(out.eod, gap);
      out.defined = true;
    }
  }
  return out;
}

}  // namespace fedfair::testing
