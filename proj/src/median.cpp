#include "searchsig/models/median.hpp"

#include <vector>

#include "searchsig/error.hpp"
#include "searchsig/numeric.hpp"

namespace searchsig {

MedianModel::MedianModel(std::map<std::string, double> county_median, std::map<std::string, double> state_median,
                         double national_median, const RegionHierarchy& hierarchy)
    : county_(std::move(county_median)),
      state_(std::move(state_median)),
      national_(national_median),
      hierarchy_(&hierarchy) {}

double MedianModel::predict(std::string_view zip_id) const {
  const ZipRecord& zip = hierarchy_->zip(zip_id);
  if (auto it = county_.find(zip.county_fips); it != county_.end()) return it->second;
  if (auto it = state_.find(zip.state_fips); it != state_.end()) return it->second;
  return national_;
}

MedianModel median_fit(const LabelTable& labels, const RegionHierarchy& hierarchy) {
  if (labels.values.empty()) throw Error(ErrorKind::NoLabels, "no labeled training zips for " + labels.variable);
  std::map<std::string, std::vector<double>> by_county;
  std::map<std::string, std::vector<double>> by_state;
  std::vector<double> all;
  for (const auto& [zip_id, value] : labels.values) {
    const ZipRecord& zip = hierarchy.zip(zip_id);
    by_county[zip.county_fips].push_back(value);
    by_state[zip.state_fips].push_back(value);
    all.push_back(value);
  }
  std::map<std::string, double> county;
  std::map<std::string, double> state;
  for (auto& [key, values] : by_county) county.emplace(key, median_inplace(std::span<double>(values)));
  for (auto& [key, values] : by_state) state.emplace(key, median_inplace(std::span<double>(values)));
  const double national = median_inplace(std::span<double>(all));
  return MedianModel(std::move(county), std::move(state), national, hierarchy);
}

}  // namespace searchsig
