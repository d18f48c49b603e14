#include "fedfair/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fedfair/csv.hpp"
#include "fedfair/error.hpp"
#include "fedfair/partition.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

Dataset load_csv(const fs::path& path, SchemaPtr schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = pos + 1;
  }
  if (lines.empty()) throw DataError(path.string() + ": missing header row");

  const auto header = csv::split_line(lines[0]);
  const std::size_t ncols = schema->columns.size() + 1;
  if (header.size() != ncols)
    throw DataError(path.string() + ": expected " + std::to_string(ncols) + " columns, found " +
                    std::to_string(header.size()));

  // Column order in the file is free; match by name.
  std::vector<int> file_to_schema(header.size(), -1);  // -1 = label column
  std::vector<bool> seen(schema->columns.size(), false);
  bool label_seen = false;
  for (std::size_t h = 0; h < header.size(); ++h) {
    if (header[h] == schema->label_name) {
      if (label_seen) throw DataError(path.string() + ": duplicate label column");
      label_seen = true;
      continue;
    }
    int idx = schema->index_of(header[h]);
    if (idx < 0) throw DataError(path.string() + ": unknown column '" + header[h] + "'");
    if (seen[static_cast<std::size_t>(idx)])
      throw DataError(path.string() + ": duplicate column '" + header[h] + "'");
    seen[static_cast<std::size_t>(idx)] = true;
    file_to_schema[h] = idx;
  }
  if (!label_seen) throw DataError(path.string() + ": missing label column '" + schema->label_name + "'");
  for (std::size_t c = 0; c < seen.size(); ++c)
    if (!seen[c]) throw DataError(path.string() + ": missing column '" + schema->columns[c].name + "'");

  const std::size_t n = lines.size() - 1;
  std::vector<Dataset::ColumnData> columns;
  for (const auto& col : schema->columns) {
    if (col.kind == ColumnKind::numeric)
      columns.emplace_back(Dataset::NumericColumn(n));
    else
      columns.emplace_back(Dataset::CategoricalColumn(n));
  }
  std::vector<std::int8_t> labels(n);
  std::vector<std::int64_t> row_ids(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = csv::split_line(lines[r + 1]);
    if (cells.size() != header.size())
      throw DataError(path.string() + ": row " + std::to_string(r) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t h = 0; h < cells.size(); ++h) {
      const std::string where =
          path.string() + " row " + std::to_string(r) + " column '" + header[h] + "'";
      if (cells[h].empty()) throw DataError("missing value at " + where);
      int idx = file_to_schema[h];
      if (idx < 0) {
        std::int32_t y = csv::parse_int32(cells[h], where);
        if (y != 0 && y != 1) throw DataError("label is not binary at " + where);
        labels[r] = static_cast<std::int8_t>(y);
      } else if (schema->columns[static_cast<std::size_t>(idx)].kind == ColumnKind::numeric) {
        std::get<Dataset::NumericColumn>(columns[static_cast<std::size_t>(idx)])[r] =
            csv::parse_double(cells[h], where);
      } else {
        std::get<Dataset::CategoricalColumn>(columns[static_cast<std::size_t>(idx)])[r] =
            csv::parse_int32(cells[h], where);
      }
    }
    row_ids[r] = static_cast<std::int64_t>(r);
  }
  return Dataset(std::move(schema), std::move(columns), std::move(labels), std::move(row_ids));
}

void write_csv(const Dataset& dataset, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const Schema& schema = dataset.schema();

  std::vector<std::string> cells;
  cells.reserve(schema.columns.size() + 1);
  for (const auto& col : schema.columns) cells.push_back(col.name);
  cells.push_back(schema.label_name);
  out << csv::join_line(cells) << '\n';

  for (std::int64_t r = 0; r < dataset.n(); ++r) {
    cells.clear();
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (schema.columns[c].kind == ColumnKind::numeric)
        cells.push_back(csv::format_double(dataset.numeric(static_cast<int>(c))[static_cast<std::size_t>(r)]));
      else
        cells.push_back(std::to_string(dataset.categorical(static_cast<int>(c))[static_cast<std::size_t>(r)]));
    }
    cells.push_back(std::to_string(dataset.label(r)));
    out << csv::join_line(cells) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Remapping
// ---------------------------------------------------------------------------

Dataset apply_remap(const Dataset& dataset, const RemapConfig& remap) {
  const Schema& schema = dataset.schema();
  for (const auto& [name, rule] : remap.columns) {
    const ColumnSchema& col = schema.column(name);  // throws on unknown name
    if (col.kind != ColumnKind::categorical)
      throw ConfigError("apply_remap: column '" + name + "' is not categorical");
    if (rule.map.empty() && !rule.default_code)
      throw ConfigError("apply_remap: empty remap for column '" + name + "'");
  }

  auto new_schema = std::make_shared<Schema>(schema);
  std::vector<Dataset::ColumnData> columns;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    auto it = col.kind == ColumnKind::categorical ? remap.columns.find(col.name)
                                                  : remap.columns.end();
    if (it == remap.columns.end()) {
      if (col.kind == ColumnKind::numeric)
        columns.emplace_back(dataset.numeric(static_cast<int>(c)));
      else
        columns.emplace_back(dataset.categorical(static_cast<int>(c)));
      continue;
    }
    const ColumnRemap& rule = it->second;
    Dataset::CategoricalColumn codes = dataset.categorical(static_cast<int>(c));
    for (std::size_t r = 0; r < codes.size(); ++r) {
      auto m = rule.map.find(codes[r]);
      if (m != rule.map.end())
        codes[r] = m->second;
      else if (rule.default_code)
        codes[r] = *rule.default_code;
      else
        throw DataError("apply_remap: code " + std::to_string(codes[r]) + " of column '" +
                        col.name + "' has no mapping and no default (row " + std::to_string(r) +
                        ")");
    }
    // New allowed set: image of the old allowed set under the remap.
    std::set<std::int32_t> image;
    for (auto old : col.allowed_values) {
      auto m = rule.map.find(old);
      if (m != rule.map.end())
        image.insert(m->second);
      else if (rule.default_code)
        image.insert(*rule.default_code);
    }
    auto& out_col = new_schema->columns[c];
    out_col.allowed_values.assign(image.begin(), image.end());
    columns.emplace_back(std::move(codes));
  }

  std::vector<std::int8_t> labels = dataset.labels();
  if (remap.label) {
    for (auto& y : labels) {
      auto m = remap.label->map.find(y);
      std::int32_t mapped;
      if (m != remap.label->map.end())
        mapped = m->second;
      else if (remap.label->default_code)
        mapped = *remap.label->default_code;
      else
        throw DataError("apply_remap: label value " + std::to_string(int(y)) + " unmapped");
      if (mapped != 0 && mapped != 1) throw ConfigError("apply_remap: labels must stay binary");
      y = static_cast<std::int8_t>(mapped);
    }
  }
  return Dataset(std::move(new_schema), std::move(columns), std::move(labels),
                 dataset.row_ids());
}

// ---------------------------------------------------------------------------
// Synthetic federation
// ---------------------------------------------------------------------------

const SyntheticGroupSpec& SyntheticAttrSpec::for_client(int client) const {
  auto it = per_client.find(client);
  return it != per_client.end() ? it->second : dflt;
}

double SyntheticSpec::client_base_rate(int client) const {
  auto it = base_rate_per_client.find(client);
  return it != base_rate_per_client.end() ? it->second : base_rate;
}

void SyntheticSpec::check() const {
  if (n_clients < 1) throw ConfigError("synthetic: n_clients must be >= 1");
  if (rows_min < 1 || rows_max < rows_min)
    throw ConfigError("synthetic: need 1 <= rows_min <= rows_max");
  if (feature_dim < 0) throw ConfigError("synthetic: feature_dim must be >= 0");
  if (!(base_rate >= 0 && base_rate <= 1))
    throw ConfigError("synthetic: base_rate must be in [0, 1]");
  for (const auto& [client, rate] : base_rate_per_client) {
    if (client < 0 || client >= n_clients)
      throw ConfigError("synthetic: base_rate override for unknown client " + std::to_string(client));
    if (!(rate >= 0 && rate <= 1)) throw ConfigError("synthetic: per-client base_rate out of [0, 1]");
  }
  std::set<std::string> names;
  for (const auto& attr : attrs) {
    if (attr.name.empty()) throw ConfigError("synthetic: attribute with empty name");
    if (!names.insert(attr.name).second)
      throw ConfigError("synthetic: duplicate attribute '" + attr.name + "'");
    if (attr.values.empty()) throw ConfigError("synthetic: attribute '" + attr.name + "' has no values");
    std::set<std::int32_t> vals(attr.values.begin(), attr.values.end());
    if (vals.size() != attr.values.size())
      throw ConfigError("synthetic: attribute '" + attr.name + "' has duplicate values");
    auto check_group = [&](const SyntheticGroupSpec& g, const std::string& where) {
      if (g.shares.size() != attr.values.size() || g.rate_shifts.size() != attr.values.size())
        throw ConfigError("synthetic: " + where + " of '" + attr.name +
                          "' must list one share and one rate shift per value");
      double sum = 0;
      for (auto s : g.shares) {
        if (s < 0) throw ConfigError("synthetic: negative share in " + where + " of '" + attr.name + "'");
        sum += s;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("synthetic: shares in " + where + " of '" + attr.name + "' must sum to 1");
    };
    check_group(attr.dflt, "defaults");
    for (const auto& [client, g] : attr.per_client) {
      if (client < 0 || client >= n_clients)
        throw ConfigError("synthetic: override for unknown client " + std::to_string(client));
      check_group(g, "client " + std::to_string(client) + " override");
    }
  }
}

std::vector<std::int64_t> largest_remainder_counts(const std::vector<double>& shares,
                                                   std::int64_t n) {
  std::vector<std::int64_t> counts(shares.size());
  std::vector<std::pair<double, std::size_t>> fracs;  // (-frac, index) for stable ordering
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    double exact = shares[i] * static_cast<double>(n);
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += counts[i];
    fracs.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(fracs.begin(), fracs.end());
  for (std::int64_t r = 0; r < n - assigned; ++r)
    counts[fracs[static_cast<std::size_t>(r)].second] += 1;
  return counts;
}

FederatedDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.check();

  auto schema = std::make_shared<Schema>();
  for (const auto& attr : spec.attrs) {
    ColumnSchema col;
    col.name = attr.name;
    col.kind = ColumnKind::categorical;
    col.allowed_values = attr.values;
    std::sort(col.allowed_values.begin(), col.allowed_values.end());
    schema->columns.push_back(std::move(col));
  }
  for (int j = 0; j < spec.feature_dim; ++j) {
    ColumnSchema col;
    col.name = "x" + std::to_string(j);
    col.kind = ColumnKind::numeric;
    schema->columns.push_back(std::move(col));
  }
  schema->label_name = "LABEL";
  for (const auto& attr : spec.attrs) schema->sensitive.push_back(attr.name);

  int width = 2;
  for (int v = spec.n_clients - 1; v >= 100; v /= 10) ++width;

  FederatedDataset fed;
  for (int c = 0; c < spec.n_clients; ++c) {
    Rng rng(derive_seed(spec.seed, "synth", static_cast<std::uint64_t>(c)));
    const std::int64_t n =
        spec.rows_min +
        static_cast<std::int64_t>(
            rng.uniform_int(static_cast<std::uint64_t>(spec.rows_max - spec.rows_min + 1)));

    // Sensitive columns: exact largest-remainder counts, then a shuffle.
    std::vector<Dataset::CategoricalColumn> cat_cols;
    for (const auto& attr : spec.attrs) {
      const SyntheticGroupSpec& group = attr.for_client(c);
      auto counts = largest_remainder_counts(group.shares, n);
      Dataset::CategoricalColumn col;
      col.reserve(static_cast<std::size_t>(n));
      for (std::size_t v = 0; v < attr.values.size(); ++v)
        for (std::int64_t i = 0; i < counts[v]; ++i) col.push_back(attr.values[v]);
      rng.shuffle(col);
      cat_cols.push_back(std::move(col));
    }

    // Labels: Bernoulli in the clamped, shift-adjusted rate of the row's groups.
    const double base = spec.client_base_rate(c);
    std::vector<std::int8_t> labels(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r) {
      double p = base;
      for (std::size_t a = 0; a < spec.attrs.size(); ++a) {
        const auto& attr = spec.attrs[a];
        const auto& group = attr.for_client(c);
        auto it = std::find(attr.values.begin(), attr.values.end(),
                            cat_cols[a][static_cast<std::size_t>(r)]);
        p += group.rate_shifts[static_cast<std::size_t>(it - attr.values.begin())];
      }
      p = std::clamp(p, 0.0, 1.0);
      labels[static_cast<std::size_t>(r)] = rng.bernoulli(p) ? 1 : 0;
    }

    // Numeric features: Gaussians centered at +/- feature_signal by label.
    std::vector<Dataset::NumericColumn> num_cols(static_cast<std::size_t>(spec.feature_dim),
                                                 Dataset::NumericColumn(static_cast<std::size_t>(n)));
    for (std::int64_t r = 0; r < n; ++r) {
      const double mean = spec.feature_signal * (labels[static_cast<std::size_t>(r)] ? 1.0 : -1.0);
      for (int j = 0; j < spec.feature_dim; ++j)
        num_cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)] = mean + rng.normal();
    }

    std::vector<Dataset::ColumnData> columns;
    for (auto& col : cat_cols) columns.emplace_back(std::move(col));
    for (auto& col : num_cols) columns.emplace_back(std::move(col));
    std::vector<std::int64_t> row_ids(static_cast<std::size_t>(n));
    std::iota(row_ids.begin(), row_ids.end(), 0);

    Dataset all(schema, std::move(columns), std::move(labels), std::move(row_ids));
    SplitSet splits = split_train_val_test(
        all, spec.fractions, derive_seed(spec.seed, "synth_split", static_cast<std::uint64_t>(c)));

    char buf[32];
    std::snprintf(buf, sizeof(buf), "client_%0*d", width, c);
    fed.add_client(buf, std::move(splits));
  }

  fed.metadata.base_task = "synthetic";
  fed.metadata.states = fed.client_ids();
  fed.metadata.partitioner = "synthetic(n_clients=" + std::to_string(spec.n_clients) + ")";
  fed.metadata.split_fractions = spec.fractions;
  fed.metadata.seed = spec.seed;
  return fed;
}

// ---------------------------------------------------------------------------
// Federation IO + JSON
// ---------------------------------------------------------------------------

ordered_json schema_to_json(const Schema& schema) {
  ordered_json cols = ordered_json::array();
  for (const auto& col : schema.columns) {
    ordered_json c;
    c["name"] = col.name;
    c["kind"] = col.kind == ColumnKind::numeric ? "numeric" : "categorical";
    if (col.kind == ColumnKind::categorical) c["allowed_values"] = col.allowed_values;
    cols.push_back(std::move(c));
  }
  ordered_json j;
  j["columns"] = std::move(cols);
  j["label"] = schema.label_name;
  j["sensitive"] = schema.sensitive;
  return j;
}

Schema schema_from_json(const ordered_json& j) {
  Schema schema;
  for (const auto& c : j.at("columns")) {
    ColumnSchema col;
    col.name = c.at("name").get<std::string>();
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "numeric")
      col.kind = ColumnKind::numeric;
    else if (kind == "categorical")
      col.kind = ColumnKind::categorical;
    else
      throw ConfigError("schema: unknown column kind '" + kind + "'");
    if (col.kind == ColumnKind::categorical)
      col.allowed_values = c.at("allowed_values").get<std::vector<std::int32_t>>();
    std::sort(col.allowed_values.begin(), col.allowed_values.end());
    schema.columns.push_back(std::move(col));
  }
  schema.label_name = j.at("label").get<std::string>();
  schema.sensitive = j.at("sensitive").get<std::vector<std::string>>();
  return schema;
}

ordered_json modification_to_json(const Modification& m) {
  ordered_json j;
  j["kind"] = m.kind == ModKind::flip ? "flip" : "drop";
  j["attr"] = m.attr;
  j["value"] = m.value;
  if (m.secondary) {
    j["secondary"] = ordered_json{{"attr", m.secondary->first}, {"value", m.secondary->second}};
  } else {
    j["secondary"] = nullptr;
  }
  j["fraction"] = m.fraction;
  ordered_json splits = ordered_json::array();
  for (auto p : m.splits) splits.push_back(to_string(p));
  j["splits"] = std::move(splits);
  j["seed"] = m.seed;
  j["clients"] = m.clients;
  return j;
}

Modification modification_from_json(const ordered_json& j) {
  Modification m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "flip")
    m.kind = ModKind::flip;
  else if (kind == "drop")
    m.kind = ModKind::drop;
  else
    throw ConfigError("modification: unknown kind '" + kind + "'");
  m.attr = j.at("attr").get<std::string>();
  m.value = j.at("value").get<std::int32_t>();
  if (j.contains("secondary") && !j.at("secondary").is_null())
    m.secondary = {j.at("secondary").at("attr").get<std::string>(),
                   j.at("secondary").at("value").get<std::int32_t>()};
  m.fraction = j.at("fraction").get<double>();
  m.splits.clear();
  for (const auto& s : j.at("splits")) m.splits.push_back(split_part_from_string(s.get<std::string>()));
  m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("clients")) m.clients = j.at("clients").get<std::vector<std::string>>();
  return m;
}

ordered_json record_to_json(const GenerationRecord& r) {
  ordered_json j;
  j["base_task"] = r.base_task;
  j["year"] = r.year;
  j["horizon"] = r.horizon;
  j["states"] = r.states;
  j["partitioner"] = r.partitioner;
  j["split_fractions"] = ordered_json{{"train", r.split_fractions.train},
                                      {"validation", r.split_fractions.validation},
                                      {"test", r.split_fractions.test}};
  j["seed"] = r.seed;
  ordered_json mods = ordered_json::array();
  for (const auto& m : r.modifications) mods.push_back(modification_to_json(m));
  j["modifications"] = std::move(mods);
  j["threshold_rule"] = r.threshold_rule;
  j["device_sampling"] = r.device_sampling;
  j["config_json"] = r.config_json;
  j["library_version"] = r.library_version;
  return j;
}

GenerationRecord record_from_json(const ordered_json& j) {
  GenerationRecord r;
  r.base_task = j.at("base_task").get<std::string>();
  r.year = j.at("year").get<int>();
  r.horizon = j.at("horizon").get<std::string>();
  r.states = j.at("states").get<std::vector<std::string>>();
  r.partitioner = j.at("partitioner").get<std::string>();
  r.split_fractions.train = j.at("split_fractions").at("train").get<double>();
  r.split_fractions.validation = j.at("split_fractions").at("validation").get<double>();
  r.split_fractions.test = j.at("split_fractions").at("test").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& m : j.at("modifications")) r.modifications.push_back(modification_from_json(m));
  r.threshold_rule = j.at("threshold_rule").get<std::string>();
  r.device_sampling = j.at("device_sampling").get<std::string>();
  r.config_json = j.at("config_json").get<std::string>();
  r.library_version = j.at("library_version").get<std::string>();
  return r;
}

namespace {

void check_client_filename(const ClientId& id) {
  if (id.empty()) throw DataError("client id is empty");
  for (char ch : id) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
    if (!ok) throw DataError("client id '" + id + "' is not filename-safe");
  }
}

constexpr SplitPart kParts[] = {SplitPart::train, SplitPart::validation, SplitPart::test};

}  // namespace

void write_federation(const FederatedDataset& fed, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < fed.size(); ++i) {
    const ClientId& id = fed.client_id(i);
    check_client_filename(id);
    for (auto part : kParts)
      write_csv(fed.splits(i).part(part), dir / (id + "_" + to_string(part) + ".csv"));
  }

  ordered_json meta;
  meta["format_version"] = 1;
  const Schema& schema =
      fed.size() > 0 ? fed.splits(std::size_t{0}).train.schema() : Schema{};
  meta["schema"] = schema_to_json(schema);
  meta["clients"] = fed.client_ids();
  meta["record"] = record_to_json(fed.metadata);

  std::ofstream out(dir / "metadata.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "metadata.json").string());
  out << meta.dump(2) << '\n';
}

FederatedDataset read_federation(const fs::path& dir) {
  std::ifstream in(dir / "metadata.json", std::ios::binary);
  if (!in) throw DataError("cannot open " + (dir / "metadata.json").string());
  ordered_json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("metadata.json: " + std::string(e.what()));
  }
  if (meta.at("format_version").get<int>() != 1)
    throw DataError("metadata.json: unsupported format_version");

  auto schema = std::make_shared<Schema>(schema_from_json(meta.at("schema")));
  FederatedDataset fed;
  fed.metadata = record_from_json(meta.at("record"));
  for (const auto& idj : meta.at("clients")) {
    const ClientId id = idj.get<std::string>();
    SplitSet splits;
    for (auto part : kParts)
      splits.part(part) = load_csv(dir / (id + "_" + to_string(part) + ".csv"), schema);
    fed.add_client(id, std::move(splits));
  }
  return fed;
}

// ---------------------------------------------------------------------------
// Default ACS schemas
// ---------------------------------------------------------------------------

namespace {

std::vector<std::int32_t> code_range(int lo, int hi) {
  std::vector<std::int32_t> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

// 50 states + DC + Puerto Rico, FIPS codes.
std::vector<std::int32_t> state_codes() {
  return {1,  2,  4,  5,  6,  8,  9,  10, 11, 12, 13, 15, 16, 17, 18, 19, 20, 21,
          22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39,
          40, 41, 42, 44, 45, 46, 47, 48, 49, 50, 51, 53, 54, 55, 56, 72};
}

ColumnSchema numeric_col(std::string name) {
  ColumnSchema c;
  c.name = std::move(name);
  c.kind = ColumnKind::numeric;
  return c;
}

ColumnSchema cat_col(std::string name, std::vector<std::int32_t> allowed) {
  ColumnSchema c;
  c.name = std::move(name);
  c.kind = ColumnKind::categorical;
  c.allowed_values = std::move(allowed);
  return c;
}

}  // namespace

SchemaPtr acs_income_schema() {
  auto s = std::make_shared<Schema>();
  s->columns = {
      numeric_col("AGEP"),
      cat_col("COW", code_range(1, 9)),
      cat_col("SCHL", code_range(1, 24)),
      cat_col("MAR", code_range(1, 5)),
      numeric_col("OCCP"),
      numeric_col("POBP"),
      cat_col("RELP", code_range(0, 17)),
      numeric_col("WKHP"),
      cat_col("SEX", {1, 2}),
      cat_col("RAC1P", code_range(1, 9)),
      cat_col("ST", state_codes()),
  };
  s->label_name = "LABEL";
  s->sensitive = {"SEX", "RAC1P", "MAR"};
  return s;
}

SchemaPtr acs_employment_schema() {
  auto s = std::make_shared<Schema>();
  s->columns = {
      numeric_col("AGEP"),
      cat_col("SCHL", code_range(1, 24)),
      cat_col("MAR", code_range(1, 5)),
      cat_col("RELP", code_range(0, 17)),
      cat_col("DIS", {1, 2}),
      cat_col("ESP", code_range(1, 8)),
      cat_col("CIT", code_range(1, 5)),
      cat_col("MIG", code_range(1, 3)),
      cat_col("MIL", code_range(1, 4)),
      cat_col("ANC", code_range(1, 8)),
      cat_col("NATIVITY", {1, 2}),
      cat_col("DEAR", {1, 2}),
      cat_col("DEYE", {1, 2}),
      cat_col("DREM", {1, 2}),
      cat_col("SEX", {1, 2}),
      cat_col("RAC1P", code_range(1, 9)),
      cat_col("ST", state_codes()),
  };
  s->label_name = "LABEL";
  s->sensitive = {"SEX", "RAC1P", "MAR"};
  return s;
}

}  // namespace fedfair
