#include "searchsig/tables.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "searchsig/error.hpp"
#include "searchsig/text.hpp"

namespace searchsig {

void DatasetManifest::validate() const {
  if (vocab_size < 1) throw Error(ErrorKind::InvalidArgument, "vocab_size must be >= 1");
  if (per_region_top < 1) throw Error(ErrorKind::InvalidArgument, "per_region_top must be >= 1");
  if (min_count < 0) throw Error(ErrorKind::InvalidArgument, "min_count must be >= 0");
  if (!(sparsity_threshold > 0.0 && sparsity_threshold < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "sparsity_threshold must lie in (0, 1)");
  }
}

bool is_zip_code(std::string_view id) {
  return id.size() == 5 && std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string canonical_query(std::string_view raw) {
  std::string query = to_lower(trim(raw));
  if (query.empty()) throw Error(ErrorKind::MalformedRow, "empty query text");
  if (query.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorKind::MalformedRow, "query text contains a delimiter", std::nullopt, query);
  }
  return query;
}

QueryLog::QueryLog(std::vector<std::string> regions, std::vector<std::string> queries,
                   std::vector<Entry> entries)
    : regions_(std::move(regions)), queries_(std::move(queries)), entries_(std::move(entries)) {
  if (std::adjacent_find(regions_.begin(), regions_.end(), std::greater_equal<>()) != regions_.end() ||
      std::adjacent_find(queries_.begin(), queries_.end(), std::greater_equal<>()) != queries_.end()) {
    throw Error(ErrorKind::InvalidArgument, "query log dictionaries must be strictly increasing");
  }
  for (const auto& e : entries_) {
    if (e.region >= regions_.size() || e.query >= queries_.size()) {
      throw Error(ErrorKind::InvalidArgument, "query log entry index out of range");
    }
  }
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.region, a.query) < std::tie(b.region, b.query);
  });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].region == entries_[i - 1].region && entries_[i].query == entries_[i - 1].query) {
      const auto& r = regions_[entries_[i].region];
      const auto& q = queries_[entries_[i].query];
      throw Error(ErrorKind::DuplicateKey, r + "," + q, std::nullopt, r + "," + q);
    }
  }
  index_regions();
}

void QueryLog::index_regions() {
  region_offsets_.assign(regions_.size() + 1, 0);
  for (const auto& e : entries_) ++region_offsets_[e.region + 1];
  for (std::size_t r = 0; r < regions_.size(); ++r) region_offsets_[r + 1] += region_offsets_[r];
}

QueryLog QueryLog::from_records(std::span<const QueryLogRecord> records) {
  std::vector<std::string> regions;
  std::vector<std::string> queries;
  std::vector<std::pair<std::string, std::string>> keys;
  keys.reserve(records.size());
  for (const auto& rec : records) {
    if (!is_zip_code(rec.region_id)) {
      throw Error(ErrorKind::MalformedRow, "region_id must be 5 digits", std::nullopt, rec.region_id);
    }
    if (rec.count < 0 || rec.count > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorKind::NonNumericCount, "count out of range", std::nullopt, rec.region_id);
    }
    keys.emplace_back(rec.region_id, canonical_query(rec.query_text));
    regions.push_back(rec.region_id);
    queries.push_back(keys.back().second);
  }
  std::sort(regions.begin(), regions.end());
  regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
  std::sort(queries.begin(), queries.end());
  queries.erase(std::unique(queries.begin(), queries.end()), queries.end());

  std::vector<Entry> entries;
  entries.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto r = std::lower_bound(regions.begin(), regions.end(), keys[i].first) - regions.begin();
    const auto q = std::lower_bound(queries.begin(), queries.end(), keys[i].second) - queries.begin();
    entries.push_back(Entry{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(q),
                            static_cast<std::uint32_t>(records[i].count)});
  }
  return QueryLog(std::move(regions), std::move(queries), std::move(entries));
}

std::span<const QueryLog::Entry> QueryLog::region_entries(std::size_t region) const {
  return std::span<const Entry>(entries_).subspan(region_offsets_[region],
                                                  region_offsets_[region + 1] - region_offsets_[region]);
}

std::optional<std::size_t> QueryLog::region_index(std::string_view region_id) const {
  auto it = std::lower_bound(regions_.begin(), regions_.end(), region_id);
  if (it == regions_.end() || *it != region_id) return std::nullopt;
  return static_cast<std::size_t>(it - regions_.begin());
}

std::optional<std::size_t> QueryLog::query_index(std::string_view query) const {
  auto it = std::lower_bound(queries_.begin(), queries_.end(), query);
  if (it == queries_.end() || *it != query) return std::nullopt;
  return static_cast<std::size_t>(it - queries_.begin());
}

std::vector<QueryLogRecord> QueryLog::records() const {
  std::vector<QueryLogRecord> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({regions_[e.region], queries_[e.query], e.count});
  return out;
}

bool operator==(const QueryLog& a, const QueryLog& b) {
  if (a.regions_ != b.regions_ || a.queries_ != b.queries_ || a.entries_.size() != b.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.region != y.region || x.query != y.query || x.count != y.count) return false;
  }
  return true;
}

std::string_view to_string(Level level) { return level == Level::zip ? "zip" : "county"; }

}  // namespace searchsig
