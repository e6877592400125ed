#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace searchsig {

struct LatLon {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]
};

inline constexpr double kEarthRadiusKm = 6371.0088;

/// Great-circle distance (haversine form).
double haversine_km(LatLon a, LatLon b);

struct ZipRecord {
  std::string zip_id;
  std::string county_fips;
  std::string state_fips;
  LatLon centroid;
  std::int64_t population = 0;
  double land_area_km2 = 1.0;

  friend bool operator==(const ZipRecord& a, const ZipRecord& b) {
    return a.zip_id == b.zip_id && a.county_fips == b.county_fips && a.state_fips == b.state_fips &&
           a.centroid.lat == b.centroid.lat && a.centroid.lon == b.centroid.lon &&
           a.population == b.population && a.land_area_km2 == b.land_area_km2;
  }
};

struct Overlap {
  std::string zip_id;
  std::string county_fips;
  double overlap_km2 = 0.0;
};

/// Zips -> counties -> states. Immutable once built; zips are held in
/// ascending zip_id order and counties/states in ascending FIPS order.
class RegionHierarchy {
 public:
  RegionHierarchy() = default;
  /// Validates coordinates, population, area, uniqueness of zip ids and that
  /// every county lies in exactly one state.
  explicit RegionHierarchy(std::vector<ZipRecord> zips);

  const std::vector<ZipRecord>& zips() const { return zips_; }
  const std::vector<std::string>& counties() const { return counties_; }
  const std::vector<std::string>& states() const { return states_; }

  std::optional<std::size_t> zip_index(std::string_view zip_id) const;
  bool has_zip(std::string_view zip_id) const { return zip_index(zip_id).has_value(); }
  bool has_county(std::string_view county) const;
  bool has_state(std::string_view state) const;
  /// Throws UnknownRegion.
  const ZipRecord& zip(std::string_view zip_id) const;
  const std::string& state_of_county(std::string_view county) const;
  /// Indices into zips(), ascending.
  const std::vector<std::size_t>& zips_in_county(std::string_view county) const;
  std::vector<std::string> counties_in_state(std::string_view state) const;

  /// Copy with each zip's county replaced from `zip_to_county`. Zips missing
  /// from the map keep their county.
  RegionHierarchy with_county_mapping(const std::map<std::string, std::string>& zip_to_county) const;

  friend bool operator==(const RegionHierarchy& a, const RegionHierarchy& b) { return a.zips_ == b.zips_; }

 private:
  std::vector<ZipRecord> zips_;
  std::vector<std::string> counties_;
  std::vector<std::string> states_;
  std::map<std::string, std::string, std::less<>> county_state_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> county_zips_;
};

/// Argmax of overlap area per zip; ties go to the smaller county FIPS.
/// `required_zips` lists zips that must be covered (NoOverlap otherwise).
std::map<std::string, std::string> derive_zip_to_county(std::span<const Overlap> overlaps,
                                                        std::span<const std::string> required_zips = {});

inline constexpr int kTestFold = -1;

std::string assignment_label(int fold);  // "TEST" or "F<k>"
std::optional<int> parse_assignment(std::string_view label);

enum class SplitKind { county_holdout, state_grouped, custom };
std::string_view to_string(SplitKind kind);

/// Fold assignment for a set of zips. Folds are 0..k_folds-1; kTestFold
/// marks the holdout.
struct SplitSpec {
  SplitKind kind = SplitKind::custom;
  std::uint64_t seed = 0;
  int k_folds = 0;
  double holdout_frac = 0.0;
  std::optional<std::int64_t> population_filter;
  std::set<std::string> holdout_counties;
  std::map<std::string, int> fold_of;
  /// For state-grouped splits: the states dealt to each fold.
  std::vector<std::vector<std::string>> state_groups;

  std::vector<std::string> zips_with(int assignment) const;
  std::vector<std::string> zips_without(int assignment) const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// County-blocked holdout: counties are shuffled with `seed`, the first
/// floor(holdout_frac * N) become TEST and the rest are dealt round-robin
/// into folds 0..k_folds-1. Every zip inherits its county's assignment.
SplitSpec county_holdout_split(const RegionHierarchy& hierarchy, std::uint64_t seed, double holdout_frac,
                               int k_folds);

/// County-blocked folds over an explicit county subset (no TEST). Used for
/// tuning folds inside training regions.
SplitSpec county_folds(const RegionHierarchy& hierarchy, std::span<const std::string> counties,
                       std::uint64_t seed, int k_folds);

/// States shuffled with `seed` and dealt round-robin into k_folds groups.
SplitSpec state_grouped_folds(const RegionHierarchy& hierarchy, std::uint64_t seed, int k_folds);

/// Zips with population strictly greater than `threshold`.
std::set<std::string> population_filter(const RegionHierarchy& hierarchy, std::int64_t threshold);

/// Copy of `split` keeping only zips in `eligible`.
SplitSpec restrict_split(const SplitSpec& split, const std::set<std::string>& eligible);

/// Throws InvalidArgument if two zips of one county carry different
/// assignments.
void check_county_coherence(const SplitSpec& split, const RegionHierarchy& hierarchy);

}  // namespace searchsig
