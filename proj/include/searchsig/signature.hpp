#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "searchsig/numeric.hpp"
#include "searchsig/spatial.hpp"
#include "searchsig/tables.hpp"

namespace searchsig {

struct VocabularyEntry {
  std::string query_text;
  std::int64_t region_coverage = 0;  // regions whose top set contains the query
  std::int64_t total_count = 0;      // summed over the full log

  friend bool operator==(const VocabularyEntry&, const VocabularyEntry&) = default;
};

/// Ranked feature axes. The feature index of an entry is its position.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws InvalidArgument unless entries are unique and ordered by
  /// descending coverage, descending total count, ascending text.
  explicit Vocabulary(std::vector<VocabularyEntry> entries);

  const std::vector<VocabularyEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<std::size_t> index_of(std::string_view query) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<VocabularyEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Strict-weak order used for vocabulary ranking.
bool ranks_before(const VocabularyEntry& a, const VocabularyEntry& b);

enum class SignatureStatus { observed, median_filled, absent };
std::string_view to_string(SignatureStatus status);
std::optional<SignatureStatus> parse_signature_status(std::string_view text);

struct SearchSignature {
  std::string region_id;
  Vector<double> values;  // percentages; sums to 100 unless absent
  SignatureStatus status = SignatureStatus::absent;
};

/// Signatures for a set of regions, one row per region, rows in ascending
/// region_id order.
struct SignatureTable {
  std::vector<std::string> region_ids;
  RowMatrix<double> values;
  std::vector<SignatureStatus> status;

  std::size_t rows() const { return region_ids.size(); }
  Eigen::Index dimension() const { return values.cols(); }
  std::optional<std::size_t> index_of(std::string_view region_id) const;
  bool usable(std::size_t row) const { return status[row] != SignatureStatus::absent; }
  SearchSignature row(std::size_t index) const;
};

/// Per-region top-query sets as ascending indices into QueryLog::queries().
struct TopSets {
  std::vector<std::vector<std::uint32_t>> per_region;  // aligned with QueryLog::regions()
};

/// Keep queries with count >= min_count, rank by descending count then
/// ascending text, keep the first k_top.
TopSets top_queries_per_region(const QueryLog& log, int k_top, std::int64_t min_count);
std::map<std::string, std::set<std::string>> top_sets_as_text(const TopSets& sets, const QueryLog& log);

/// Coverage over top sets, total counts over the full log, ranked and
/// truncated to `vocab_size`. Throws EmptyInput when no region has a top set.
Vocabulary build_vocabulary(const TopSets& sets, const QueryLog& log, int vocab_size);

/// Convenience: top sets + vocabulary with the manifest's constants.
Vocabulary build_vocabulary(const QueryLog& log, const DatasetManifest& manifest);

/// raw[i] = count of vocabulary query i; values = 100 * raw / sum(raw).
SearchSignature vectorize_region(std::string region_id, std::span<const QueryLogRecord> slice,
                                 const Vocabulary& vocab);

/// Signatures for `region_ids` (sorted on output); regions without log rows
/// get absent zero vectors.
SignatureTable vectorize(const QueryLog& log, const Vocabulary& vocab, std::vector<std::string> region_ids);

double zero_fraction(const Eigen::Ref<const Vector<double>>& values);

/// True when the signature is usable: zero fraction <= threshold.
bool sparsity_filter(const SearchSignature& signature, double threshold);

/// Demotes observed rows failing sparsity_filter to absent (values zeroed).
/// Returns the number of demoted rows.
std::size_t apply_sparsity_filter(SignatureTable& table, double threshold);

struct FillStats {
  std::size_t from_county = 0;
  std::size_t from_state = 0;
  std::size_t from_national = 0;
  std::size_t still_absent = 0;  // all-zero medians
};

/// Fills absent rows with per-feature medians of the observed rows of the
/// parent county, falling back to the state and then the nation, then
/// rescales to sum 100.
FillStats median_fill(SignatureTable& table, const RegionHierarchy& hierarchy);

/// Unweighted mean of non-absent member signatures per county, for every
/// county with at least one zip in the table. Throws EmptyCounty when such a
/// county has no usable member.
SignatureTable aggregate_to_county(const SignatureTable& zip_table, const RegionHierarchy& hierarchy);

/// First `dimension` vocabulary-ranked features, not rescaled.
SignatureTable truncate_features(const SignatureTable& table, int dimension);

/// The whole signature pipeline for zip regions: vectorize, sparsity filter,
/// median fill.
SignatureTable build_signatures(const QueryLog& log, const Vocabulary& vocab, const RegionHierarchy& hierarchy,
                                double sparsity_threshold, FillStats* fill_stats = nullptr);

}  // namespace searchsig
