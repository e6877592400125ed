#include "searchsig/signature.hpp"

#include <algorithm>
#include <tuple>

#include "searchsig/error.hpp"

namespace searchsig {

bool ranks_before(const VocabularyEntry& a, const VocabularyEntry& b) {
  if (a.region_coverage != b.region_coverage) return a.region_coverage > b.region_coverage;
  if (a.total_count != b.total_count) return a.total_count > b.total_count;
  return a.query_text < b.query_text;
}

Vocabulary::Vocabulary(std::vector<VocabularyEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0 && !ranks_before(entries_[i - 1], entries_[i])) {
      throw Error(ErrorKind::InvalidArgument, "vocabulary out of rank order at index " + std::to_string(i),
                  std::nullopt, entries_[i].query_text);
    }
    if (!index_.emplace(entries_[i].query_text, i).second) {
      throw Error(ErrorKind::DuplicateKey, "query " + entries_[i].query_text, std::nullopt, entries_[i].query_text);
    }
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view query) const {
  auto it = index_.find(query);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(SignatureStatus status) {
  switch (status) {
    case SignatureStatus::observed: return "observed";
    case SignatureStatus::median_filled: return "median_filled";
    case SignatureStatus::absent: return "absent";
  }
  return "absent";
}

std::optional<SignatureStatus> parse_signature_status(std::string_view text) {
  if (text == "observed") return SignatureStatus::observed;
  if (text == "median_filled") return SignatureStatus::median_filled;
  if (text == "absent") return SignatureStatus::absent;
  return std::nullopt;
}

std::optional<std::size_t> SignatureTable::index_of(std::string_view region_id) const {
  auto it = std::lower_bound(region_ids.begin(), region_ids.end(), region_id);
  if (it == region_ids.end() || *it != region_id) return std::nullopt;
  return static_cast<std::size_t>(it - region_ids.begin());
}

SearchSignature SignatureTable::row(std::size_t index) const {
  return SearchSignature{region_ids[index], values.row(static_cast<Eigen::Index>(index)).transpose(), status[index]};
}

TopSets top_queries_per_region(const QueryLog& log, int k_top, std::int64_t min_count) {
  if (k_top < 1) throw Error(ErrorKind::InvalidArgument, "k_top must be >= 1");
  if (min_count < 0) throw Error(ErrorKind::InvalidArgument, "min_count must be >= 0");
  TopSets sets;
  sets.per_region.resize(log.regions().size());
  std::vector<QueryLog::Entry> candidates;
  for (std::size_t r = 0; r < log.regions().size(); ++r) {
    candidates.clear();
    for (const auto& e : log.region_entries(r)) {
      if (static_cast<std::int64_t>(e.count) >= min_count) candidates.push_back(e);
    }
    const std::size_t keep = std::min(candidates.size(), static_cast<std::size_t>(k_top));
    // query index order is lexicographic order
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [](const QueryLog::Entry& a, const QueryLog::Entry& b) {
                        return a.count != b.count ? a.count > b.count : a.query < b.query;
                      });
    auto& out = sets.per_region[r];
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(candidates[i].query);
    std::sort(out.begin(), out.end());
  }
  return sets;
}

std::map<std::string, std::set<std::string>> top_sets_as_text(const TopSets& sets, const QueryLog& log) {
  std::map<std::string, std::set<std::string>> out;
  for (std::size_t r = 0; r < sets.per_region.size(); ++r) {
    auto& bucket = out[log.regions()[r]];
    for (auto q : sets.per_region[r]) bucket.insert(log.queries()[q]);
  }
  return out;
}

Vocabulary build_vocabulary(const TopSets& sets, const QueryLog& log, int vocab_size) {
  if (vocab_size < 1) throw Error(ErrorKind::InvalidArgument, "vocab_size must be >= 1");
  const std::size_t n_queries = log.queries().size();
  std::vector<std::int64_t> coverage(n_queries, 0);
  std::vector<std::int64_t> totals(n_queries, 0);
  for (const auto& set : sets.per_region) {
    for (auto q : set) ++coverage[q];
  }
  for (const auto& e : log.entries()) totals[e.query] += e.count;

  std::vector<VocabularyEntry> entries;
  for (std::size_t q = 0; q < n_queries; ++q) {
    if (coverage[q] > 0) entries.push_back({log.queries()[q], coverage[q], totals[q]});
  }
  if (entries.empty()) throw Error(ErrorKind::EmptyInput, "no region has a non-empty top-query set");
  const std::size_t keep = std::min(entries.size(), static_cast<std::size_t>(vocab_size));
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(), ranks_before);
  entries.resize(keep);
  return Vocabulary(std::move(entries));
}

Vocabulary build_vocabulary(const QueryLog& log, const DatasetManifest& manifest) {
  manifest.validate();
  return build_vocabulary(top_queries_per_region(log, manifest.per_region_top, manifest.min_count), log,
                          manifest.vocab_size);
}

namespace {

// Normalizes raw counts in place; returns the resulting status.
SignatureStatus normalize_counts(Eigen::Ref<Vector<double>> raw) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < raw.size(); ++i) total += raw[i];
  if (total <= 0.0) return SignatureStatus::absent;
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = 100.0 * raw[i] / total;
  return SignatureStatus::observed;
}

void rescale_to_100(Eigen::Ref<Vector<double>> v) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) total += v[i];
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 100.0 * v[i] / total;
}

}  // namespace

SearchSignature vectorize_region(std::string region_id, std::span<const QueryLogRecord> slice,
                                 const Vocabulary& vocab) {
  if (vocab.empty()) throw Error(ErrorKind::EmptyInput, "empty vocabulary");
  Vector<double> raw = Vector<double>::Zero(static_cast<Eigen::Index>(vocab.size()));
  for (const auto& rec : slice) {
    if (rec.region_id != region_id) {
      throw Error(ErrorKind::InvalidArgument, "record for another region in slice", std::nullopt, rec.region_id);
    }
    if (auto f = vocab.index_of(canonical_query(rec.query_text))) raw[static_cast<Eigen::Index>(*f)] += double(rec.count);
  }
  SearchSignature sig{std::move(region_id), std::move(raw), SignatureStatus::absent};
  sig.status = normalize_counts(sig.values);
  return sig;
}

SignatureTable vectorize(const QueryLog& log, const Vocabulary& vocab, std::vector<std::string> region_ids) {
  if (vocab.empty()) throw Error(ErrorKind::EmptyInput, "empty vocabulary");
  std::sort(region_ids.begin(), region_ids.end());
  region_ids.erase(std::unique(region_ids.begin(), region_ids.end()), region_ids.end());

  std::vector<std::int32_t> feature_of(log.queries().size(), -1);
  for (std::size_t f = 0; f < vocab.size(); ++f) {
    if (auto q = log.query_index(vocab.entries()[f].query_text)) feature_of[*q] = static_cast<std::int32_t>(f);
  }

  SignatureTable table;
  const auto n = static_cast<Eigen::Index>(region_ids.size());
  const auto d = static_cast<Eigen::Index>(vocab.size());
  table.values = RowMatrix<double>::Zero(n, d);
  table.status.assign(region_ids.size(), SignatureStatus::absent);
  Vector<double> raw(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto r = log.region_index(region_ids[static_cast<std::size_t>(i)]);
    if (!r) continue;
    raw.setZero();
    for (const auto& e : log.region_entries(*r)) {
      if (feature_of[e.query] >= 0) raw[feature_of[e.query]] += double(e.count);
    }
    table.status[static_cast<std::size_t>(i)] = normalize_counts(raw);
    if (table.status[static_cast<std::size_t>(i)] == SignatureStatus::observed) table.values.row(i) = raw.transpose();
  }
  table.region_ids = std::move(region_ids);
  return table;
}

double zero_fraction(const Eigen::Ref<const Vector<double>>& values) {
  if (values.size() == 0) return 1.0;
  return static_cast<double>((values.array() == 0.0).count()) / static_cast<double>(values.size());
}

bool sparsity_filter(const SearchSignature& signature, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::InvalidArgument, "threshold must lie in (0, 1)");
  return !(zero_fraction(signature.values) > threshold);
}

std::size_t apply_sparsity_filter(SignatureTable& table, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::InvalidArgument, "threshold must lie in (0, 1)");
  std::size_t demoted = 0;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    if (table.status[i] != SignatureStatus::observed) continue;
    const auto row = static_cast<Eigen::Index>(i);
    if (zero_fraction(table.values.row(row).transpose()) > threshold) {
      table.status[i] = SignatureStatus::absent;
      table.values.row(row).setZero();
      ++demoted;
    }
  }
  return demoted;
}

namespace {

Vector<double> feature_medians(const SignatureTable& table, const std::vector<std::size_t>& rows) {
  const Eigen::Index d = table.dimension();
  Vector<double> out(d);
  std::vector<double> column(rows.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < rows.size(); ++k) column[k] = table.values(static_cast<Eigen::Index>(rows[k]), j);
    out[j] = median_inplace(std::span<double>(column));
  }
  return out;
}

}  // namespace

FillStats median_fill(SignatureTable& table, const RegionHierarchy& hierarchy) {
  std::map<std::string, std::vector<std::size_t>> county_rows;
  std::map<std::string, std::vector<std::size_t>> state_rows;
  std::vector<std::size_t> national_rows;
  std::vector<const ZipRecord*> zip_of(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    zip_of[i] = &hierarchy.zip(table.region_ids[i]);
    if (table.status[i] != SignatureStatus::observed) continue;
    county_rows[zip_of[i]->county_fips].push_back(i);
    state_rows[zip_of[i]->state_fips].push_back(i);
    national_rows.push_back(i);
  }

  std::map<std::string, Vector<double>> county_cache;
  std::map<std::string, Vector<double>> state_cache;
  std::optional<Vector<double>> national_cache;
  FillStats stats;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    if (table.status[i] != SignatureStatus::absent) continue;
    const ZipRecord& zip = *zip_of[i];
    const Vector<double>* candidate = nullptr;
    if (auto it = county_rows.find(zip.county_fips); it != county_rows.end()) {
      auto [c, fresh] = county_cache.try_emplace(zip.county_fips);
      if (fresh) c->second = feature_medians(table, it->second);
      candidate = &c->second;
      ++stats.from_county;
    } else if (auto st = state_rows.find(zip.state_fips); st != state_rows.end()) {
      auto [c, fresh] = state_cache.try_emplace(zip.state_fips);
      if (fresh) c->second = feature_medians(table, st->second);
      candidate = &c->second;
      ++stats.from_state;
    } else {
      if (national_rows.empty()) {
        throw Error(ErrorKind::NoObservedSignatures, "no observed signatures to fill " + zip.zip_id);
      }
      if (!national_cache) national_cache = feature_medians(table, national_rows);
      candidate = &*national_cache;
      ++stats.from_national;
    }
    if (candidate->sum() <= 0.0) {
      ++stats.still_absent;
      continue;
    }
    Vector<double> filled = *candidate;
    rescale_to_100(filled);
    table.values.row(static_cast<Eigen::Index>(i)) = filled.transpose();
    table.status[i] = SignatureStatus::median_filled;
  }
  return stats;
}

SignatureTable aggregate_to_county(const SignatureTable& zip_table, const RegionHierarchy& hierarchy) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < zip_table.rows(); ++i) {
    members[hierarchy.zip(zip_table.region_ids[i]).county_fips].push_back(i);
  }
  SignatureTable out;
  const Eigen::Index d = zip_table.dimension();
  out.values.resize(static_cast<Eigen::Index>(members.size()), d);
  Eigen::Index row = 0;
  for (const auto& [county, rows] : members) {
    Vector<double> sum = Vector<double>::Zero(d);
    std::size_t used = 0;
    for (std::size_t i : rows) {
      if (!zip_table.usable(i)) continue;
      sum += zip_table.values.row(static_cast<Eigen::Index>(i)).transpose();
      ++used;
    }
    if (used == 0) throw Error(ErrorKind::EmptyCounty, "county " + county + " has no usable signature", std::nullopt, county);
    out.values.row(row++) = (sum / static_cast<double>(used)).transpose();
    out.region_ids.push_back(county);
    out.status.push_back(SignatureStatus::observed);
  }
  return out;
}

SignatureTable truncate_features(const SignatureTable& table, int dimension) {
  if (dimension < 1 || dimension > table.dimension()) {
    throw Error(ErrorKind::BadDimension, "dimension " + std::to_string(dimension) + " outside [1, " +
                                             std::to_string(table.dimension()) + "]");
  }
  SignatureTable out;
  out.region_ids = table.region_ids;
  out.status = table.status;
  out.values = table.values.leftCols(dimension);
  return out;
}

SignatureTable build_signatures(const QueryLog& log, const Vocabulary& vocab, const RegionHierarchy& hierarchy,
                                double sparsity_threshold, FillStats* fill_stats) {
  std::vector<std::string> ids;
  ids.reserve(hierarchy.zips().size());
  for (const auto& z : hierarchy.zips()) ids.push_back(z.zip_id);
  SignatureTable table = vectorize(log, vocab, std::move(ids));
  apply_sparsity_filter(table, sparsity_threshold);
  const FillStats stats = median_fill(table, hierarchy);
  if (fill_stats) *fill_stats = stats;
  return table;
}

}  // namespace searchsig
