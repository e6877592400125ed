#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "searchsig/numeric.hpp"
#include "searchsig/spatial.hpp"

namespace searchsig {

struct IdwSite {
  std::string region_id;
  LatLon location;
  double value = 0.0;
};

struct IdwParams {
  double power = 2.0;
  int neighbors = 12;
  double epsilon_km = 1e-6;

  void validate() const;
};

/// Shepard interpolation over the k nearest sites (haversine distance,
/// ties to the smaller region_id). A query within epsilon of its nearest
/// site returns that site's value.
class IdwModel {
 public:
  IdwModel(std::vector<IdwSite> sites, IdwParams params = {});

  double predict(LatLon query) const;
  Vector<double> predict(std::span<const LatLon> queries) const;

  const std::vector<IdwSite>& sites() const { return sites_; }
  const IdwParams& params() const { return params_; }

  struct Neighbor {
    std::size_t site;
    double distance_km;
  };
  /// The k nearest sites in (distance, region_id) order.
  std::vector<Neighbor> nearest(LatLon query) const;

 private:
  std::vector<IdwSite> sites_;  // ascending region_id
  IdwParams params_;
  std::vector<std::array<double, 3>> unit_;  // unit vectors for candidate ranking
};

}  // namespace searchsig
