#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "searchsig/eval.hpp"
#include "searchsig/models.hpp"
#include "searchsig/signature.hpp"
#include "searchsig/spatial.hpp"
#include "searchsig/tables.hpp"

namespace searchsig {

namespace fs = std::filesystem;

// Query logs: `region_id,query_text,count`.
/// Validated records in canonical (region_id, query_text) order. Counts
/// below the manifest's min_count are kept.
std::vector<QueryLogRecord> load_query_log(const fs::path& path, const DatasetManifest& manifest);
void write_query_log(const QueryLog& log, const fs::path& path);

// Labels: `region_id,value`.
/// An empty `variable` is taken from the file name (`labels_<name>.csv`,
/// `county_labels_<name>.csv`). Empty value cells are skipped and counted.
LabelTable load_labels(const fs::path& path, Level level, const RegionHierarchy& hierarchy,
                       std::string variable = {});
void write_labels(const LabelTable& labels, const fs::path& path);
std::string variable_from_path(const fs::path& path);

// Geography: `zip_id,county_fips,state_fips,lat,lon,population,land_area_km2`.
RegionHierarchy load_geography(const fs::path& path);
void write_geography(const RegionHierarchy& hierarchy, const fs::path& path);

// Overlaps: `zip_id,county_fips,overlap_km2`.
std::vector<Overlap> load_overlaps(const fs::path& path);
void write_overlaps(std::span<const Overlap> overlaps, const fs::path& path);

/// Geography with counties re-derived from the overlap table.
RegionHierarchy load_hierarchy(const fs::path& geography, const fs::path& overlaps);

// Vocabulary: `feature_index,query_text,region_coverage,total_count`.
Vocabulary load_vocabulary(const fs::path& path);
void write_vocabulary(const Vocabulary& vocab, const fs::path& path);

// Signatures: `region_id,status,f0,...,f{V-1}`.
/// Non-absent rows are rescaled to sum 100 after parsing, undoing the
/// rounding of the 6-digit text format.
SignatureTable load_signatures(const fs::path& path);
void write_signatures(const SignatureTable& table, const fs::path& path);

// Splits: `zip_id,assignment` plus a `key,value` sidecar.
void write_split(const SplitSpec& split, const fs::path& csv_path, const fs::path& meta_path);
/// When `hierarchy` is given, holdout counties and state groups are
/// reconstructed from it.
SplitSpec load_split(const fs::path& csv_path, const fs::path& meta_path, const RegionHierarchy* hierarchy = nullptr);

// Reports.
/// Fixed key order: task, variable, model, filter, seed, lambda, per_fold,
/// test_r2, n_train, n_test, runtime_s (then axis, axis_value for
/// ablations). Throws IncompleteReport on an empty per-fold list.
std::string serialize_report(const EvalReport& report);
void write_report(const EvalReport& report, const fs::path& path);
EvalReport parse_report(std::string_view text);
EvalReport load_report(const fs::path& path);

// Model artifacts.
std::string serialize_model(const RidgeModel<double>& model);
std::string serialize_model(const IdwModel& model);
std::string serialize_model(const MedianModel& model);

}  // namespace searchsig
