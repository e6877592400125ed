#include "searchsig/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "searchsig/error.hpp"
#include "searchsig/json_writer.hpp"
#include "searchsig/text.hpp"

namespace searchsig {

namespace {

void expect_fields(const CsvRow& row, std::size_t n, const fs::path& path) {
  if (row.fields.size() != n) {
    throw Error(ErrorKind::MalformedRow,
                "expected " + std::to_string(n) + " fields, got " + std::to_string(row.fields.size()) + " in " +
                    path.string(),
                row.line);
  }
}

double real_field(const CsvRow& row, std::size_t column, const fs::path& path) {
  auto value = parse_real(trim(row.fields[column]));
  if (!value) {
    throw Error(ErrorKind::MalformedRow, "not a number: '" + std::string(row.fields[column]) + "' in " + path.string(),
                row.line);
  }
  if (!std::isfinite(*value)) throw Error(ErrorKind::NonFiniteValue, "non-finite value in " + path.string(), row.line);
  return *value;
}

std::int64_t int_field(const CsvRow& row, std::size_t column, const fs::path& path) {
  auto value = parse_int64(trim(row.fields[column]));
  if (!value) {
    throw Error(ErrorKind::MalformedRow, "not an integer: '" + std::string(row.fields[column]) + "' in " + path.string(),
                row.line);
  }
  return *value;
}

std::string zip_field(const CsvRow& row, std::size_t column, const fs::path& path) {
  std::string id(trim(row.fields[column]));
  if (!is_zip_code(id)) {
    throw Error(ErrorKind::MalformedRow, "region id '" + id + "' is not a 5-digit code in " + path.string(), row.line,
                id);
  }
  return id;
}

}  // namespace

std::vector<QueryLogRecord> load_query_log(const fs::path& path, const DatasetManifest& manifest) {
  manifest.validate();
  const CsvFile csv = CsvFile::read(path, "region_id,query_text,count");
  struct Keyed {
    QueryLogRecord record;
    std::size_t line;
  };
  std::vector<Keyed> rows;
  rows.reserve(csv.rows().size());
  for (const auto& row : csv.rows()) {
    expect_fields(row, 3, path);
    std::string region = zip_field(row, 0, path);
    std::string query;
    try {
      query = canonical_query(row.fields[1]);
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedRow, e.what(), row.line);
    }
    auto count = parse_int64(trim(row.fields[2]));
    if (!count || *count < 0) {
      throw Error(ErrorKind::NonNumericCount, "count '" + std::string(row.fields[2]) + "' in " + path.string(), row.line);
    }
    rows.push_back({{std::move(region), std::move(query), *count}, row.line});
  }
  std::sort(rows.begin(), rows.end(), [](const Keyed& a, const Keyed& b) {
    if (a.record.region_id != b.record.region_id) return a.record.region_id < b.record.region_id;
    if (a.record.query_text != b.record.query_text) return a.record.query_text < b.record.query_text;
    return a.line < b.line;
  });
  std::vector<QueryLogRecord> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!out.empty() && rows[i].record.region_id == out.back().region_id &&
        rows[i].record.query_text == out.back().query_text) {
      const std::string key = rows[i].record.region_id + "," + rows[i].record.query_text;
      throw Error(ErrorKind::DuplicateKey, key, rows[i].line, key);
    }
    out.push_back(std::move(rows[i].record));
  }
  return out;
}

void write_query_log(const QueryLog& log, const fs::path& path) {
  std::string out = "region_id,query_text,count\n";
  for (const auto& e : log.entries()) {
    out += log.regions()[e.region];
    out += ',';
    out += log.queries()[e.query];
    out += ',';
    out += std::to_string(e.count);
    out += '\n';
  }
  write_text_atomic(path, out);
}

std::string variable_from_path(const fs::path& path) {
  std::string stem = path.stem().string();
  for (std::string_view prefix : {"county_labels_", "labels_"}) {
    if (stem.starts_with(prefix)) return stem.substr(prefix.size());
  }
  return stem;
}

LabelTable load_labels(const fs::path& path, Level level, const RegionHierarchy& hierarchy, std::string variable) {
  const CsvFile csv = CsvFile::read(path, "region_id,value");
  LabelTable table;
  table.variable = variable.empty() ? variable_from_path(path) : std::move(variable);
  table.level = level;
  for (const auto& row : csv.rows()) {
    expect_fields(row, 2, path);
    std::string region(trim(row.fields[0]));
    const bool known = level == Level::zip ? hierarchy.has_zip(region) : hierarchy.has_county(region);
    if (!known) throw Error(ErrorKind::UnknownRegion, "region " + region + " in " + path.string(), row.line, region);
    if (trim(row.fields[1]).empty()) {
      ++table.skipped;
      continue;
    }
    const double value = real_field(row, 1, path);
    if (!table.values.emplace(region, value).second) {
      throw Error(ErrorKind::DuplicateKey, "region " + region, row.line, region);
    }
  }
  return table;
}

void write_labels(const LabelTable& labels, const fs::path& path) {
  std::string out = "region_id,value\n";
  for (const auto& [region, value] : labels.values) out += region + "," + format_real(value) + "\n";
  write_text_atomic(path, out);
}

RegionHierarchy load_geography(const fs::path& path) {
  const CsvFile csv = CsvFile::read(path, "zip_id,county_fips,state_fips,lat,lon,population,land_area_km2");
  std::vector<ZipRecord> zips;
  zips.reserve(csv.rows().size());
  for (const auto& row : csv.rows()) {
    expect_fields(row, 7, path);
    ZipRecord z;
    z.zip_id = zip_field(row, 0, path);
    z.county_fips = std::string(trim(row.fields[1]));
    z.state_fips = std::string(trim(row.fields[2]));
    z.centroid = {real_field(row, 3, path), real_field(row, 4, path)};
    z.population = int_field(row, 5, path);
    z.land_area_km2 = real_field(row, 6, path);
    try {
      // validate each row in isolation so errors carry the line number
      RegionHierarchy({z});
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedRow, e.what(), row.line, z.zip_id);
    }
    zips.push_back(std::move(z));
  }
  return RegionHierarchy(std::move(zips));
}

void write_geography(const RegionHierarchy& hierarchy, const fs::path& path) {
  std::string out = "zip_id,county_fips,state_fips,lat,lon,population,land_area_km2\n";
  for (const auto& z : hierarchy.zips()) {
    out += z.zip_id + "," + z.county_fips + "," + z.state_fips + "," + format_real(z.centroid.lat) + "," +
           format_real(z.centroid.lon) + "," + std::to_string(z.population) + "," + format_real(z.land_area_km2) + "\n";
  }
  write_text_atomic(path, out);
}

std::vector<Overlap> load_overlaps(const fs::path& path) {
  const CsvFile csv = CsvFile::read(path, "zip_id,county_fips,overlap_km2");
  std::vector<Overlap> out;
  out.reserve(csv.rows().size());
  for (const auto& row : csv.rows()) {
    expect_fields(row, 3, path);
    const double area = real_field(row, 2, path);
    if (area < 0.0) throw Error(ErrorKind::MalformedRow, "negative overlap area", row.line);
    out.push_back({zip_field(row, 0, path), std::string(trim(row.fields[1])), area});
  }
  return out;
}

void write_overlaps(std::span<const Overlap> overlaps, const fs::path& path) {
  std::vector<const Overlap*> sorted;
  for (const auto& o : overlaps) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(), [](const Overlap* a, const Overlap* b) {
    return a->zip_id != b->zip_id ? a->zip_id < b->zip_id : a->county_fips < b->county_fips;
  });
  std::string out = "zip_id,county_fips,overlap_km2\n";
  for (const auto* o : sorted) out += o->zip_id + "," + o->county_fips + "," + format_real(o->overlap_km2) + "\n";
  write_text_atomic(path, out);
}

RegionHierarchy load_hierarchy(const fs::path& geography, const fs::path& overlaps) {
  RegionHierarchy base = load_geography(geography);
  if (overlaps.empty()) return base;
  std::vector<std::string> zip_ids;
  for (const auto& z : base.zips()) zip_ids.push_back(z.zip_id);
  const auto rows = load_overlaps(overlaps);
  return base.with_county_mapping(derive_zip_to_county(rows, zip_ids));
}

Vocabulary load_vocabulary(const fs::path& path) {
  const CsvFile csv = CsvFile::read(path, "feature_index,query_text,region_coverage,total_count");
  std::vector<VocabularyEntry> entries;
  for (const auto& row : csv.rows()) {
    expect_fields(row, 4, path);
    if (int_field(row, 0, path) != static_cast<std::int64_t>(entries.size())) {
      throw Error(ErrorKind::MalformedRow, "feature_index out of sequence", row.line);
    }
    std::string query;
    try {
      query = canonical_query(row.fields[1]);
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedRow, e.what(), row.line);
    }
    entries.push_back({std::move(query), int_field(row, 2, path), int_field(row, 3, path)});
  }
  return Vocabulary(std::move(entries));
}

void write_vocabulary(const Vocabulary& vocab, const fs::path& path) {
  std::string out = "feature_index,query_text,region_coverage,total_count\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& e = vocab.entries()[i];
    out += std::to_string(i) + "," + e.query_text + "," + std::to_string(e.region_coverage) + "," +
           std::to_string(e.total_count) + "\n";
  }
  write_text_atomic(path, out);
}

SignatureTable load_signatures(const fs::path& path) {
  const CsvFile csv = CsvFile::read(path, "region_id,status", true);
  const auto& header = csv.header();
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 2] != "f" + std::to_string(j)) {
      throw Error(ErrorKind::MalformedRow, "signature header column " + std::to_string(j + 2) + " is not f" +
                                               std::to_string(j),
                  1);
    }
  }
  std::vector<std::pair<std::string, std::size_t>> order;
  for (std::size_t i = 0; i < csv.rows().size(); ++i) order.emplace_back(std::string(trim(csv.rows()[i].fields[0])), i);
  std::sort(order.begin(), order.end());

  SignatureTable table;
  table.values.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < order.size(); ++r) {
    const CsvRow& row = csv.rows()[order[r].second];
    expect_fields(row, dim + 2, path);
    if (r > 0 && order[r].first == order[r - 1].first) {
      throw Error(ErrorKind::DuplicateKey, "region " + order[r].first, row.line, order[r].first);
    }
    auto status = parse_signature_status(trim(row.fields[1]));
    if (!status) throw Error(ErrorKind::MalformedRow, "unknown status '" + std::string(row.fields[1]) + "'", row.line);
    double total = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = real_field(row, j + 2, path);
      if (v < 0.0) throw Error(ErrorKind::MalformedRow, "negative signature value", row.line);
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
      total += v;
    }
    if (*status != SignatureStatus::absent && total > 0.0) {
      auto values = table.values.row(static_cast<Eigen::Index>(r));
      for (Eigen::Index j = 0; j < values.size(); ++j) values[j] = 100.0 * values[j] / total;
    }
    table.region_ids.push_back(order[r].first);
    table.status.push_back(*status);
  }
  return table;
}

void write_signatures(const SignatureTable& table, const fs::path& path) {
  std::string out = "region_id,status";
  for (Eigen::Index j = 0; j < table.dimension(); ++j) out += ",f" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out += table.region_ids[i];
    out += ',';
    out += to_string(table.status[i]);
    const auto row = table.values.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      out += ',';
      out += format_real(row[j]);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_split(const SplitSpec& split, const fs::path& csv_path, const fs::path& meta_path) {
  std::string out = "zip_id,assignment\n";
  for (const auto& [zip, fold] : split.fold_of) out += zip + "," + assignment_label(fold) + "\n";
  write_text_atomic(csv_path, out);
  std::string meta = "key,value\n";
  meta += "kind," + std::string(to_string(split.kind)) + "\n";
  meta += "seed," + std::to_string(split.seed) + "\n";
  meta += "k_folds," + std::to_string(split.k_folds) + "\n";
  meta += "holdout_frac," + format_real(split.holdout_frac) + "\n";
  meta += "population_filter," + (split.population_filter ? std::to_string(*split.population_filter) : "none") + "\n";
  write_text_atomic(meta_path, meta);
}

SplitSpec load_split(const fs::path& csv_path, const fs::path& meta_path, const RegionHierarchy* hierarchy) {
  SplitSpec split;
  const CsvFile meta = CsvFile::read(meta_path, "key,value");
  for (const auto& row : meta.rows()) {
    expect_fields(row, 2, meta_path);
    const std::string_view key = trim(row.fields[0]);
    const std::string_view value = trim(row.fields[1]);
    if (key == "kind") {
      if (value == "county_holdout") split.kind = SplitKind::county_holdout;
      else if (value == "state_grouped") split.kind = SplitKind::state_grouped;
      else if (value == "custom") split.kind = SplitKind::custom;
      else throw Error(ErrorKind::MalformedRow, "unknown split kind", row.line);
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(ErrorKind::MalformedRow, "bad seed", row.line);
      }
      split.seed = seed;
    } else if (key == "k_folds") {
      split.k_folds = static_cast<int>(int_field(row, 1, meta_path));
    } else if (key == "holdout_frac") {
      split.holdout_frac = real_field(row, 1, meta_path);
    } else if (key == "population_filter") {
      if (value != "none") split.population_filter = int_field(row, 1, meta_path);
    } else {
      throw Error(ErrorKind::MalformedRow, "unknown split_meta key '" + std::string(key) + "'", row.line);
    }
  }
  const CsvFile csv = CsvFile::read(csv_path, "zip_id,assignment");
  for (const auto& row : csv.rows()) {
    expect_fields(row, 2, csv_path);
    std::string zip = zip_field(row, 0, csv_path);
    auto fold = parse_assignment(trim(row.fields[1]));
    if (!fold || (*fold != kTestFold && *fold >= split.k_folds)) {
      throw Error(ErrorKind::MalformedRow, "bad assignment '" + std::string(row.fields[1]) + "'", row.line);
    }
    if (hierarchy && !hierarchy->has_zip(zip)) {
      throw Error(ErrorKind::UnknownRegion, "zip " + zip + " in " + csv_path.string(), row.line, zip);
    }
    if (!split.fold_of.emplace(zip, *fold).second) throw Error(ErrorKind::DuplicateKey, "zip " + zip, row.line, zip);
  }
  if (hierarchy) {
    for (const auto& [zip, fold] : split.fold_of) {
      if (fold == kTestFold) split.holdout_counties.insert(hierarchy->zip(zip).county_fips);
    }
    if (split.kind == SplitKind::state_grouped) {
      std::vector<std::set<std::string>> groups(static_cast<std::size_t>(split.k_folds));
      for (const auto& [zip, fold] : split.fold_of) {
        groups[static_cast<std::size_t>(fold)].insert(hierarchy->zip(zip).state_fips);
      }
      for (const auto& g : groups) split.state_groups.emplace_back(g.begin(), g.end());
    }
  }
  return split;
}

std::string serialize_report(const EvalReport& report) {
  if (report.per_fold_r2.empty()) {
    throw Error(ErrorKind::IncompleteReport, "report " + report.variable + "/" + report.model + " has no folds");
  }
  if (report.variable.empty() || report.model.empty()) {
    throw Error(ErrorKind::IncompleteReport, "report without variable or model");
  }
  JsonWriter w;
  w.begin_object();
  w.field("task", to_string(report.task));
  w.field("variable", report.variable);
  w.field("model", report.model);
  w.optional_field("filter", report.filter);
  w.field("seed", report.seed);
  w.optional_field("lambda", report.lambda);
  w.field("per_fold", std::span<const double>(report.per_fold_r2));
  w.optional_field("test_r2", report.test_r2);
  w.field("n_train", report.n_train);
  w.field("n_test", report.n_test);
  w.optional_field("runtime_s", report.runtime_s);
  if (report.axis) {
    w.field("axis", *report.axis);
    w.optional_field("axis_value", report.axis_value);
  }
  w.end_object();
  return w.str();
}

void write_report(const EvalReport& report, const fs::path& path) { write_text_atomic(path, serialize_report(report)); }

EvalReport parse_report(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRow, std::string("report is not valid JSON: ") + e.what());
  }
  auto opt_real = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  try {
    EvalReport r;
    auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorKind::MalformedRow, "unknown task in report");
    r.task = *task;
    r.variable = j.at("variable").get<std::string>();
    r.model = j.at("model").get<std::string>();
    if (!j.at("filter").is_null()) r.filter = j.at("filter").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.lambda = opt_real("lambda");
    for (const auto& v : j.at("per_fold")) r.per_fold_r2.push_back(v.is_null() ? std::nan("") : v.get<double>());
    r.test_r2 = opt_real("test_r2");
    r.n_train = j.at("n_train").get<std::size_t>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.runtime_s = opt_real("runtime_s");
    if (j.contains("axis")) {
      r.axis = j.at("axis").get<std::string>();
      r.axis_value = opt_real("axis_value");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRow, std::string("report field error: ") + e.what());
  }
}

EvalReport load_report(const fs::path& path) { return parse_report(read_text(path)); }

namespace {

std::vector<double> to_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string serialize_model(const RidgeModel<double>& model) {
  JsonWriter w;
  w.begin_object();
  w.field("model", "topsearch_ridge");
  w.field("lambda", model.lambda);
  w.field("intercept", model.intercept);
  const auto weights = to_std(model.weights);
  const auto means = to_std(model.feature_means);
  const auto scales = to_std(model.feature_scales);
  w.field("weights", std::span<const double>(weights));
  w.field("feature_means", std::span<const double>(means));
  w.field("feature_scales", std::span<const double>(scales));
  w.end_object();
  return w.str();
}

std::string serialize_model(const IdwModel& model) {
  JsonWriter w;
  w.begin_object();
  w.field("model", "idw");
  w.field("power", model.params().power);
  w.field("neighbors", model.params().neighbors);
  w.field("epsilon_km", model.params().epsilon_km);
  w.field("n_sites", model.sites().size());
  w.end_object();
  return w.str();
}

std::string serialize_model(const MedianModel& model) {
  JsonWriter w;
  w.begin_object();
  w.field("model", "hier_median");
  w.field("national_median", model.national_median());
  w.begin_object("state_median");
  for (const auto& [k, v] : model.state_median()) w.field(k, v);
  w.end_object();
  w.begin_object("county_median");
  for (const auto& [k, v] : model.county_median()) w.field(k, v);
  w.end_object();
  w.end_object();
  return w.str();
}

}  // namespace searchsig
