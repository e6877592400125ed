#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace searchsig {

/// One (region, query) count from a query log.
struct QueryLogRecord {
  std::string region_id;   // 5-digit zip / ZCTA code
  std::string query_text;  // trimmed, lower-case
  std::int64_t count = 0;

  friend bool operator==(const QueryLogRecord&, const QueryLogRecord&) = default;
};

/// Dataset-level constants for signature construction.
struct DatasetManifest {
  std::string time_window = "unspecified";
  int vocab_size = 1000;
  int per_region_top = 500;
  std::int64_t min_count = 20;
  double sparsity_threshold = 0.98;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless V >= 1, K_top >= 1, C_min >= 0 and
  /// 0 < sparsity_threshold < 1.
  void validate() const;
};

bool is_zip_code(std::string_view id);
/// Trim + lower-case. Throws MalformedRow on an empty result or on
/// characters that would break the unquoted CSV format.
std::string canonical_query(std::string_view raw);

/// Interned, canonically ordered query log. Region and query dictionaries
/// are sorted, so index order equals lexicographic order, and entries are
/// ordered by (region, query). This keeps a 28K-region x 1K-query log at
/// 12 bytes per entry.
class QueryLog {
 public:
  struct Entry {
    std::uint32_t region;
    std::uint32_t query;
    std::uint32_t count;
  };

  QueryLog() = default;
  /// `regions` and `queries` must be strictly increasing; entries may be in
  /// any order and are sorted here. Duplicate (region, query) pairs throw.
  QueryLog(std::vector<std::string> regions, std::vector<std::string> queries, std::vector<Entry> entries);

  /// Validates and canonicalizes; throws DuplicateKey on repeated pairs.
  static QueryLog from_records(std::span<const QueryLogRecord> records);

  const std::vector<std::string>& regions() const { return regions_; }
  const std::vector<std::string>& queries() const { return queries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::span<const Entry> region_entries(std::size_t region) const;
  std::optional<std::size_t> region_index(std::string_view region_id) const;
  std::optional<std::size_t> query_index(std::string_view query) const;
  std::size_t size() const { return entries_.size(); }

  std::vector<QueryLogRecord> records() const;

  friend bool operator==(const QueryLog&, const QueryLog&);

 private:
  void index_regions();

  std::vector<std::string> regions_;
  std::vector<std::string> queries_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> region_offsets_;  // size regions_+1
};

enum class Level { zip, county };
std::string_view to_string(Level level);

/// One variable at one geographic level. Values are finite; missing cells
/// are simply absent from `values` and tallied in `skipped`.
struct LabelTable {
  std::string variable;
  Level level = Level::zip;
  std::string unit;
  std::map<std::string, double> values;
  std::size_t skipped = 0;

  friend bool operator==(const LabelTable&, const LabelTable&) = default;
};

}  // namespace searchsig
