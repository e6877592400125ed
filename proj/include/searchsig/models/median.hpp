#pragma once

#include <map>
#include <string>
#include <string_view>

#include "searchsig/spatial.hpp"
#include "searchsig/tables.hpp"

namespace searchsig {

/// Hierarchical median imputation: county median of labeled training zips,
/// else state median, else national median.
class MedianModel {
 public:
  MedianModel(std::map<std::string, double> county_median, std::map<std::string, double> state_median,
              double national_median, const RegionHierarchy& hierarchy);

  double predict(std::string_view zip_id) const;

  const std::map<std::string, double>& county_median() const { return county_; }
  const std::map<std::string, double>& state_median() const { return state_; }
  double national_median() const { return national_; }

 private:
  std::map<std::string, double> county_;
  std::map<std::string, double> state_;
  double national_;
  const RegionHierarchy* hierarchy_;
};

/// `labels` must hold only training zips. Throws NoLabels when empty and
/// UnknownRegion for zips missing from the hierarchy. The hierarchy must
/// outlive the model.
MedianModel median_fit(const LabelTable& labels, const RegionHierarchy& hierarchy);

}  // namespace searchsig
