#include "searchsig/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "searchsig/error.hpp"
#include "searchsig/rng.hpp"

namespace searchsig {

double haversine_km(LatLon a, LatLon b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double phi1 = a.lat * kDeg;
  const double phi2 = b.lat * kDeg;
  const double dphi = (b.lat - a.lat) * kDeg;
  const double dlambda = (b.lon - a.lon) * kDeg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

RegionHierarchy::RegionHierarchy(std::vector<ZipRecord> zips) : zips_(std::move(zips)) {
  std::sort(zips_.begin(), zips_.end(), [](const ZipRecord& a, const ZipRecord& b) { return a.zip_id < b.zip_id; });
  for (std::size_t i = 0; i < zips_.size(); ++i) {
    const auto& z = zips_[i];
    if (i > 0 && zips_[i - 1].zip_id == z.zip_id) {
      throw Error(ErrorKind::DuplicateKey, "zip " + z.zip_id, std::nullopt, z.zip_id);
    }
    if (!(z.centroid.lat >= -90.0 && z.centroid.lat <= 90.0 && z.centroid.lon >= -180.0 &&
          z.centroid.lon <= 180.0)) {
      throw Error(ErrorKind::InvalidArgument, "centroid out of range for zip " + z.zip_id, std::nullopt, z.zip_id);
    }
    if (z.population < 0) throw Error(ErrorKind::InvalidArgument, "negative population", std::nullopt, z.zip_id);
    if (!(z.land_area_km2 > 0.0) || !std::isfinite(z.land_area_km2)) {
      throw Error(ErrorKind::InvalidArgument, "land area must be positive", std::nullopt, z.zip_id);
    }
    if (z.county_fips.empty() || z.state_fips.empty()) {
      throw Error(ErrorKind::InvalidArgument, "zip without county or state", std::nullopt, z.zip_id);
    }
    auto [it, inserted] = county_state_.emplace(z.county_fips, z.state_fips);
    if (!inserted && it->second != z.state_fips) {
      throw Error(ErrorKind::InvalidArgument, "county " + z.county_fips + " spans states " + it->second + " and " +
                                                  z.state_fips,
                  std::nullopt, z.county_fips);
    }
    county_zips_[z.county_fips].push_back(i);
  }
  for (const auto& [county, state] : county_state_) {
    counties_.push_back(county);
    states_.push_back(state);
  }
  std::sort(states_.begin(), states_.end());
  states_.erase(std::unique(states_.begin(), states_.end()), states_.end());
}

std::optional<std::size_t> RegionHierarchy::zip_index(std::string_view zip_id) const {
  auto it = std::lower_bound(zips_.begin(), zips_.end(), zip_id,
                             [](const ZipRecord& z, std::string_view id) { return z.zip_id < id; });
  if (it == zips_.end() || it->zip_id != zip_id) return std::nullopt;
  return static_cast<std::size_t>(it - zips_.begin());
}

bool RegionHierarchy::has_county(std::string_view county) const { return county_state_.contains(county); }

bool RegionHierarchy::has_state(std::string_view state) const {
  return std::binary_search(states_.begin(), states_.end(), state);
}

const ZipRecord& RegionHierarchy::zip(std::string_view zip_id) const {
  auto index = zip_index(zip_id);
  if (!index) throw Error(ErrorKind::UnknownRegion, std::string(zip_id), std::nullopt, std::string(zip_id));
  return zips_[*index];
}

const std::string& RegionHierarchy::state_of_county(std::string_view county) const {
  auto it = county_state_.find(county);
  if (it == county_state_.end()) {
    throw Error(ErrorKind::UnknownRegion, "county " + std::string(county), std::nullopt, std::string(county));
  }
  return it->second;
}

const std::vector<std::size_t>& RegionHierarchy::zips_in_county(std::string_view county) const {
  auto it = county_zips_.find(county);
  if (it == county_zips_.end()) {
    throw Error(ErrorKind::UnknownRegion, "county " + std::string(county), std::nullopt, std::string(county));
  }
  return it->second;
}

std::vector<std::string> RegionHierarchy::counties_in_state(std::string_view state) const {
  std::vector<std::string> out;
  for (const auto& [county, s] : county_state_) {
    if (s == state) out.push_back(county);
  }
  return out;
}

RegionHierarchy RegionHierarchy::with_county_mapping(const std::map<std::string, std::string>& zip_to_county) const {
  std::vector<ZipRecord> zips = zips_;
  for (auto& z : zips) {
    if (auto it = zip_to_county.find(z.zip_id); it != zip_to_county.end()) z.county_fips = it->second;
  }
  return RegionHierarchy(std::move(zips));
}

std::map<std::string, std::string> derive_zip_to_county(std::span<const Overlap> overlaps,
                                                        std::span<const std::string> required_zips) {
  struct Best {
    std::string county;
    double area = 0.0;
  };
  std::map<std::string, Best> best;
  for (const auto& o : overlaps) {
    if (!(o.overlap_km2 > 0.0)) continue;
    auto [it, inserted] = best.try_emplace(o.zip_id, Best{o.county_fips, o.overlap_km2});
    if (inserted) continue;
    Best& b = it->second;
    if (o.overlap_km2 > b.area || (o.overlap_km2 == b.area && o.county_fips < b.county)) {
      b = Best{o.county_fips, o.overlap_km2};
    }
  }
  for (const auto& zip : required_zips) {
    if (!best.contains(zip)) throw Error(ErrorKind::NoOverlap, "zip " + zip, std::nullopt, zip);
  }
  std::map<std::string, std::string> out;
  for (auto& [zip, b] : best) out.emplace(zip, std::move(b.county));
  return out;
}

std::string assignment_label(int fold) { return fold == kTestFold ? "TEST" : "F" + std::to_string(fold); }

std::optional<int> parse_assignment(std::string_view label) {
  if (label == "TEST") return kTestFold;
  if (label.size() < 2 || label.front() != 'F') return std::nullopt;
  int fold = 0;
  for (char c : label.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    fold = fold * 10 + (c - '0');
    if (fold > 1'000'000) return std::nullopt;
  }
  return fold;
}

std::string_view to_string(SplitKind kind) {
  switch (kind) {
    case SplitKind::county_holdout: return "county_holdout";
    case SplitKind::state_grouped: return "state_grouped";
    case SplitKind::custom: return "custom";
  }
  return "custom";
}

std::vector<std::string> SplitSpec::zips_with(int assignment) const {
  std::vector<std::string> out;
  for (const auto& [zip, fold] : fold_of) {
    if (fold == assignment) out.push_back(zip);
  }
  return out;
}

std::vector<std::string> SplitSpec::zips_without(int assignment) const {
  std::vector<std::string> out;
  for (const auto& [zip, fold] : fold_of) {
    if (fold != assignment) out.push_back(zip);
  }
  return out;
}

namespace {

void assign_counties(SplitSpec& split, const RegionHierarchy& hierarchy, const std::map<std::string, int>& county_fold) {
  for (const auto& [county, fold] : county_fold) {
    for (std::size_t idx : hierarchy.zips_in_county(county)) split.fold_of[hierarchy.zips()[idx].zip_id] = fold;
  }
}

}  // namespace

SplitSpec county_holdout_split(const RegionHierarchy& hierarchy, std::uint64_t seed, double holdout_frac,
                               int k_folds) {
  if (!(holdout_frac > 0.0 && holdout_frac < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "holdout_frac must lie in (0, 1)");
  }
  if (k_folds < 2) throw Error(ErrorKind::InvalidArgument, "k_folds must be >= 2");
  std::vector<std::string> counties = hierarchy.counties();
  const std::size_t n = counties.size();
  const auto n_test = static_cast<std::size_t>(std::floor(holdout_frac * static_cast<double>(n) + 1e-9));
  if (n < static_cast<std::size_t>(k_folds) + 1 || n - n_test < static_cast<std::size_t>(k_folds)) {
    throw Error(ErrorKind::TooFewCounties,
                std::to_string(n) + " counties cannot fill " + std::to_string(k_folds) + " folds plus a holdout");
  }
  Rng rng(seed);
  shuffle(counties, rng);

  SplitSpec split;
  split.kind = SplitKind::county_holdout;
  split.seed = seed;
  split.k_folds = k_folds;
  split.holdout_frac = holdout_frac;
  std::map<std::string, int> county_fold;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_test) {
      county_fold[counties[i]] = kTestFold;
      split.holdout_counties.insert(counties[i]);
    } else {
      county_fold[counties[i]] = static_cast<int>((i - n_test) % static_cast<std::size_t>(k_folds));
    }
  }
  assign_counties(split, hierarchy, county_fold);
  return split;
}

SplitSpec county_folds(const RegionHierarchy& hierarchy, std::span<const std::string> counties_in,
                       std::uint64_t seed, int k_folds) {
  if (k_folds < 2) throw Error(ErrorKind::InvalidArgument, "k_folds must be >= 2");
  std::vector<std::string> counties(counties_in.begin(), counties_in.end());
  std::sort(counties.begin(), counties.end());
  counties.erase(std::unique(counties.begin(), counties.end()), counties.end());
  if (counties.size() < static_cast<std::size_t>(k_folds)) {
    throw Error(ErrorKind::TooFewCounties,
                std::to_string(counties.size()) + " counties cannot fill " + std::to_string(k_folds) + " folds");
  }
  Rng rng(seed);
  shuffle(counties, rng);
  SplitSpec split;
  split.kind = SplitKind::custom;
  split.seed = seed;
  split.k_folds = k_folds;
  std::map<std::string, int> county_fold;
  for (std::size_t i = 0; i < counties.size(); ++i) {
    county_fold[counties[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
  }
  assign_counties(split, hierarchy, county_fold);
  return split;
}

SplitSpec state_grouped_folds(const RegionHierarchy& hierarchy, std::uint64_t seed, int k_folds) {
  std::vector<std::string> states = hierarchy.states();
  if (k_folds < 2 || static_cast<std::size_t>(k_folds) > states.size()) {
    throw Error(ErrorKind::TooFewStates,
                std::to_string(states.size()) + " states cannot fill " + std::to_string(k_folds) + " folds");
  }
  Rng rng(seed);
  shuffle(states, rng);
  SplitSpec split;
  split.kind = SplitKind::state_grouped;
  split.seed = seed;
  split.k_folds = k_folds;
  split.state_groups.resize(static_cast<std::size_t>(k_folds));
  std::map<std::string, int> state_fold;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto fold = static_cast<int>(i % static_cast<std::size_t>(k_folds));
    state_fold[states[i]] = fold;
    split.state_groups[static_cast<std::size_t>(fold)].push_back(states[i]);
  }
  for (auto& group : split.state_groups) std::sort(group.begin(), group.end());
  for (const auto& z : hierarchy.zips()) split.fold_of[z.zip_id] = state_fold.at(z.state_fips);
  return split;
}

std::set<std::string> population_filter(const RegionHierarchy& hierarchy, std::int64_t threshold) {
  if (threshold < 0) throw Error(ErrorKind::InvalidArgument, "population threshold must be >= 0");
  std::set<std::string> out;
  for (const auto& z : hierarchy.zips()) {
    if (z.population > threshold) out.insert(z.zip_id);
  }
  return out;
}

SplitSpec restrict_split(const SplitSpec& split, const std::set<std::string>& eligible) {
  SplitSpec out = split;
  std::erase_if(out.fold_of, [&](const auto& kv) { return !eligible.contains(kv.first); });
  return out;
}

void check_county_coherence(const SplitSpec& split, const RegionHierarchy& hierarchy) {
  std::map<std::string, int> county_fold;
  for (const auto& [zip, fold] : split.fold_of) {
    const auto& county = hierarchy.zip(zip).county_fips;
    auto [it, inserted] = county_fold.emplace(county, fold);
    if (!inserted && it->second != fold) {
      throw Error(ErrorKind::InvalidArgument, "county " + county + " split across assignments", std::nullopt, county);
    }
  }
}

}  // namespace searchsig
