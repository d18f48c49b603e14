#include "fedfair/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "fedfair/error.hpp"

namespace fedfair {

int Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return static_cast<int>(i);
  return -1;
}

const ColumnSchema& Schema::column(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) throw ConfigError("unknown column: " + name);
  return columns[static_cast<std::size_t>(i)];
}

bool Schema::is_sensitive(const std::string& name) const {
  return std::find(sensitive.begin(), sensitive.end(), name) != sensitive.end();
}

const char* to_string(SplitPart part) {
  switch (part) {
    case SplitPart::train: return "train";
    case SplitPart::validation: return "validation";
    case SplitPart::test: return "test";
  }
  return "?";
}

SplitPart split_part_from_string(const std::string& s) {
  if (s == "train") return SplitPart::train;
  if (s == "validation") return SplitPart::validation;
  if (s == "test") return SplitPart::test;
  throw ConfigError("unknown split part: " + s);
}

Dataset::Dataset(SchemaPtr schema, std::vector<ColumnData> columns,
                 std::vector<std::int8_t> labels, std::vector<std::int64_t> row_ids)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      row_ids_(std::move(row_ids)) {
  if (!schema_) throw ConfigError("Dataset: null schema");
  if (columns_.size() != schema_->columns.size())
    throw ConfigError("Dataset: column count does not match schema");
  const std::size_t n = labels_.size();
  if (row_ids_.size() != n) throw ConfigError("Dataset: row_ids size mismatch");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const bool is_num = std::holds_alternative<NumericColumn>(columns_[c]);
    const bool want_num = schema_->columns[c].kind == ColumnKind::numeric;
    if (is_num != want_num)
      throw ConfigError("Dataset: column '" + schema_->columns[c].name + "' storage kind mismatch");
    const std::size_t len = is_num ? std::get<NumericColumn>(columns_[c]).size()
                                   : std::get<CategoricalColumn>(columns_[c]).size();
    if (len != n)
      throw ConfigError("Dataset: column '" + schema_->columns[c].name + "' length mismatch");
  }
}

Dataset Dataset::empty(SchemaPtr schema) {
  std::vector<ColumnData> cols;
  cols.reserve(schema->columns.size());
  for (const auto& c : schema->columns) {
    if (c.kind == ColumnKind::numeric)
      cols.emplace_back(NumericColumn{});
    else
      cols.emplace_back(CategoricalColumn{});
  }
  return Dataset(std::move(schema), std::move(cols), {}, {});
}

const Dataset::NumericColumn& Dataset::numeric(int col) const {
  return std::get<NumericColumn>(columns_.at(static_cast<std::size_t>(col)));
}

const Dataset::CategoricalColumn& Dataset::categorical(int col) const {
  return std::get<CategoricalColumn>(columns_.at(static_cast<std::size_t>(col)));
}

const Dataset::CategoricalColumn& Dataset::categorical(const std::string& name) const {
  int i = schema_->index_of(name);
  if (i < 0) throw ConfigError("unknown column: " + name);
  if (schema_->columns[static_cast<std::size_t>(i)].kind != ColumnKind::categorical)
    throw ConfigError("column is not categorical: " + name);
  return categorical(i);
}

Dataset Dataset::take(const std::vector<std::int64_t>& rows) const {
  std::vector<ColumnData> cols;
  cols.reserve(columns_.size());
  for (const auto& col : columns_) {
    if (const auto* num = std::get_if<NumericColumn>(&col)) {
      NumericColumn out;
      out.reserve(rows.size());
      for (auto r : rows) out.push_back((*num)[static_cast<std::size_t>(r)]);
      cols.emplace_back(std::move(out));
    } else {
      const auto& cat = std::get<CategoricalColumn>(col);
      CategoricalColumn out;
      out.reserve(rows.size());
      for (auto r : rows) out.push_back(cat[static_cast<std::size_t>(r)]);
      cols.emplace_back(std::move(out));
    }
  }
  std::vector<std::int8_t> labels;
  std::vector<std::int64_t> ids;
  labels.reserve(rows.size());
  ids.reserve(rows.size());
  for (auto r : rows) {
    labels.push_back(labels_[static_cast<std::size_t>(r)]);
    ids.push_back(row_ids_[static_cast<std::size_t>(r)]);
  }
  return Dataset(schema_, std::move(cols), std::move(labels), std::move(ids));
}

Dataset Dataset::with_labels(std::vector<std::int8_t> labels) const {
  if (labels.size() != labels_.size())
    throw ConfigError("with_labels: label count mismatch");
  return Dataset(schema_, columns_, std::move(labels), row_ids_);
}

Dataset concat(const std::vector<const Dataset*>& parts) {
  if (parts.empty()) throw ConfigError("concat: no parts");
  const SchemaPtr schema = parts.front()->schema_ptr();
  for (const auto* p : parts)
    if (!(p->schema() == *schema)) throw DataError("concat: schema mismatch between parts");

  std::size_t total = 0;
  for (const auto* p : parts) total += static_cast<std::size_t>(p->n());

  std::vector<Dataset::ColumnData> cols;
  for (std::size_t c = 0; c < schema->columns.size(); ++c) {
    if (schema->columns[c].kind == ColumnKind::numeric) {
      Dataset::NumericColumn out;
      out.reserve(total);
      for (const auto* p : parts) {
        const auto& src = p->numeric(static_cast<int>(c));
        out.insert(out.end(), src.begin(), src.end());
      }
      cols.emplace_back(std::move(out));
    } else {
      Dataset::CategoricalColumn out;
      out.reserve(total);
      for (const auto* p : parts) {
        const auto& src = p->categorical(static_cast<int>(c));
        out.insert(out.end(), src.begin(), src.end());
      }
      cols.emplace_back(std::move(out));
    }
  }
  std::vector<std::int8_t> labels;
  std::vector<std::int64_t> ids;
  labels.reserve(total);
  ids.reserve(total);
  for (const auto* p : parts) {
    labels.insert(labels.end(), p->labels().begin(), p->labels().end());
    ids.insert(ids.end(), p->row_ids().begin(), p->row_ids().end());
  }
  return Dataset(schema, std::move(cols), std::move(labels), std::move(ids));
}

const Dataset& SplitSet::part(SplitPart p) const {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::validation: return validation;
    case SplitPart::test: return test;
  }
  throw ConfigError("bad split part");
}

Dataset& SplitSet::part(SplitPart p) {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::validation: return validation;
    case SplitPart::test: return test;
  }
  throw ConfigError("bad split part");
}

void FederatedDataset::add_client(ClientId id, SplitSet splits) {
  if (has_client(id)) throw ConfigError("duplicate client id: " + id);
  if (!entries_.empty()) {
    const Schema& ref = entries_.front().second.train.schema();
    if (!(splits.train.schema() == ref))
      throw DataError("client '" + id + "' does not share the federation schema");
  }
  entries_.emplace_back(std::move(id), std::move(splits));
}

const SplitSet& FederatedDataset::splits(const ClientId& id) const {
  for (const auto& [cid, s] : entries_)
    if (cid == id) return s;
  throw ConfigError("unknown client: " + id);
}

bool FederatedDataset::has_client(const ClientId& id) const {
  for (const auto& [cid, s] : entries_)
    if (cid == id) return true;
  return false;
}

std::vector<ClientId> FederatedDataset::client_ids() const {
  std::vector<ClientId> out;
  out.reserve(entries_.size());
  for (const auto& [cid, s] : entries_) out.push_back(cid);
  return out;
}

std::vector<Violation> validate(const Dataset& dataset) {
  std::vector<Violation> out;
  const Schema& schema = dataset.schema();

  std::unordered_set<std::string> seen;
  for (const auto& col : schema.columns) {
    if (col.name.empty()) out.push_back({-1, col.name, "column name is empty"});
    if (!seen.insert(col.name).second)
      out.push_back({-1, col.name, "duplicate column name"});
    if (col.kind == ColumnKind::categorical && col.allowed_values.empty())
      out.push_back({-1, col.name, "categorical column lists no allowed values"});
    if (col.kind == ColumnKind::numeric && !col.allowed_values.empty())
      out.push_back({-1, col.name, "numeric column lists allowed values"});
    if (col.name == schema.label_name)
      out.push_back({-1, col.name, "column name collides with the label column"});
  }
  for (const auto& attr : schema.sensitive) {
    int i = schema.index_of(attr);
    if (i < 0)
      out.push_back({-1, attr, "sensitive attribute is not a column"});
    else if (schema.columns[static_cast<std::size_t>(i)].kind != ColumnKind::categorical)
      out.push_back({-1, attr, "sensitive attribute is not categorical"});
  }
  if (!out.empty()) return out;  // cell checks are meaningless on a broken schema

  const std::int64_t n = dataset.n();
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    if (col.kind == ColumnKind::categorical) {
      const auto& values = dataset.categorical(static_cast<int>(c));
      for (std::int64_t r = 0; r < n; ++r) {
        if (!std::binary_search(col.allowed_values.begin(), col.allowed_values.end(),
                                values[static_cast<std::size_t>(r)]))
          out.push_back({r, col.name,
                         "code " + std::to_string(values[static_cast<std::size_t>(r)]) +
                             " not in allowed values"});
      }
    } else {
      const auto& values = dataset.numeric(static_cast<int>(c));
      for (std::int64_t r = 0; r < n; ++r)
        if (!std::isfinite(values[static_cast<std::size_t>(r)]))
          out.push_back({r, col.name, "non-finite value"});
    }
  }
  for (std::int64_t r = 0; r < n; ++r) {
    int y = dataset.label(r);
    if (y != 0 && y != 1)
      out.push_back({r, schema.label_name, "label is not binary"});
  }
  std::unordered_set<std::int64_t> ids;
  for (std::int64_t r = 0; r < n; ++r)
    if (!ids.insert(dataset.row_ids()[static_cast<std::size_t>(r)]).second)
      out.push_back({r, "(row_id)", "duplicate row identity"});
  return out;
}

std::vector<std::int64_t> group_index(const Dataset& dataset, const std::string& attr,
                                      std::int32_t value) {
  const Schema& schema = dataset.schema();
  if (!schema.is_sensitive(attr))
    throw ConfigError("group_index: '" + attr + "' is not a sensitive attribute");
  const ColumnSchema& col = schema.column(attr);
  if (!std::binary_search(col.allowed_values.begin(), col.allowed_values.end(), value))
    throw ConfigError("group_index: code " + std::to_string(value) + " not allowed for '" +
                      attr + "'");
  const auto& codes = dataset.categorical(attr);
  std::vector<std::int64_t> out;
  for (std::size_t r = 0; r < codes.size(); ++r)
    if (codes[r] == value) out.push_back(static_cast<std::int64_t>(r));
  return out;
}

IntersectionResult intersect_groups(const Dataset& dataset,
                                    const std::vector<std::string>& attrs) {
  if (attrs.size() < 2)
    throw ConfigError("intersect_groups: need at least two attributes");
  const Schema& schema = dataset.schema();
  for (const auto& a : attrs)
    if (!schema.is_sensitive(a))
      throw ConfigError("intersect_groups: '" + a + "' is not a sensitive attribute");

  // Observed value set per attribute, sorted.
  std::vector<std::vector<std::int32_t>> observed;
  for (const auto& a : attrs) {
    const auto& codes = dataset.categorical(a);
    std::set<std::int32_t> s(codes.begin(), codes.end());
    observed.emplace_back(s.begin(), s.end());
  }

  // Lexicographic enumeration of the product (mixed radix, last attr fastest).
  std::size_t m = observed.empty() ? 0 : 1;
  for (const auto& v : observed) m *= v.size();
  std::vector<std::vector<std::int32_t>> combos;
  combos.reserve(m);
  for (std::size_t code = 0; code < m; ++code) {
    std::vector<std::int32_t> combo(attrs.size());
    std::size_t rest = code;
    for (std::size_t i = attrs.size(); i > 0; --i) {
      const auto& vals = observed[i - 1];
      combo[i - 1] = vals[rest % vals.size()];
      rest /= vals.size();
    }
    combos.push_back(std::move(combo));
  }

  std::string name = attrs[0];
  for (std::size_t i = 1; i < attrs.size(); ++i) name += "_x_" + attrs[i];
  if (schema.index_of(name) >= 0)
    throw ConfigError("intersect_groups: column '" + name + "' already exists");

  // Code per row: index of its combo in the lexicographic enumeration.
  std::vector<const Dataset::CategoricalColumn*> cols;
  for (const auto& a : attrs) cols.push_back(&dataset.categorical(a));
  std::vector<std::int32_t> codes(static_cast<std::size_t>(dataset.n()));
  for (std::size_t r = 0; r < codes.size(); ++r) {
    std::int32_t code = 0;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      const auto& vals = observed[i];
      auto it = std::lower_bound(vals.begin(), vals.end(), (*cols[i])[r]);
      code = code * static_cast<std::int32_t>(vals.size()) +
             static_cast<std::int32_t>(it - vals.begin());
    }
    codes[r] = code;
  }

  auto new_schema = std::make_shared<Schema>(schema);
  ColumnSchema composite;
  composite.name = name;
  composite.kind = ColumnKind::categorical;
  for (std::size_t i = 0; i < combos.size(); ++i)
    composite.allowed_values.push_back(static_cast<std::int32_t>(i));
  new_schema->columns.push_back(composite);
  new_schema->sensitive.push_back(name);

  std::vector<Dataset::ColumnData> data;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].kind == ColumnKind::numeric)
      data.emplace_back(dataset.numeric(static_cast<int>(c)));
    else
      data.emplace_back(dataset.categorical(static_cast<int>(c)));
  }
  data.emplace_back(std::move(codes));

  Dataset out(new_schema, std::move(data), dataset.labels(), dataset.row_ids());
  return IntersectionResult{std::move(out), std::move(name), std::move(combos)};
}

}  // namespace fedfair
