#include "searchsig/models/idw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "searchsig/error.hpp"

namespace searchsig {

namespace {

std::array<double, 3> unit_vector(LatLon p) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double phi = p.lat * kDeg;
  const double lambda = p.lon * kDeg;
  return {std::cos(phi) * std::cos(lambda), std::cos(phi) * std::sin(lambda), std::sin(phi)};
}

}  // namespace

void IdwParams::validate() const {
  if (!(power > 0.0)) throw Error(ErrorKind::InvalidArgument, "IDW power must be > 0");
  if (neighbors < 1) throw Error(ErrorKind::InvalidArgument, "IDW neighbors must be >= 1");
  if (!(epsilon_km > 0.0)) throw Error(ErrorKind::InvalidArgument, "IDW epsilon must be > 0");
}

IdwModel::IdwModel(std::vector<IdwSite> sites, IdwParams params) : sites_(std::move(sites)), params_(params) {
  params_.validate();
  if (sites_.empty()) throw Error(ErrorKind::NoSites, "IDW model needs at least one site");
  std::sort(sites_.begin(), sites_.end(), [](const IdwSite& a, const IdwSite& b) { return a.region_id < b.region_id; });
  unit_.reserve(sites_.size());
  for (const auto& s : sites_) {
    if (!std::isfinite(s.value)) throw Error(ErrorKind::NonFiniteInput, "non-finite IDW site value", std::nullopt, s.region_id);
    unit_.push_back(unit_vector(s.location));
  }
}

std::vector<IdwModel::Neighbor> IdwModel::nearest(LatLon query) const {
  // Rank by chord length (monotone in great-circle distance), then measure
  // the survivors with haversine.
  const auto q = unit_vector(query);
  std::vector<std::pair<double, std::size_t>> chord(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const double dx = unit_[i][0] - q[0];
    const double dy = unit_[i][1] - q[1];
    const double dz = unit_[i][2] - q[2];
    chord[i] = {dx * dx + dy * dy + dz * dz, i};
  }
  const std::size_t k = std::min(sites_.size(), static_cast<std::size_t>(params_.neighbors));
  // Pull a few extra candidates so haversine can settle near-ties.
  const std::size_t pool = std::min(sites_.size(), k + 4);
  std::partial_sort(chord.begin(), chord.begin() + static_cast<std::ptrdiff_t>(pool), chord.end());
  std::vector<Neighbor> out;
  out.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    out.push_back({chord[i].second, haversine_km(query, sites_[chord[i].second].location)});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance_km != b.distance_km ? a.distance_km < b.distance_km : a.site < b.site;
  });
  out.resize(k);
  return out;
}

double IdwModel::predict(LatLon query) const {
  const auto neighbors = nearest(query);
  if (neighbors.front().distance_km < params_.epsilon_km) return sites_[neighbors.front().site].value;
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& nb : neighbors) {
    const double w = std::pow(nb.distance_km, -params_.power);
    weighted += w * sites_[nb.site].value;
    total += w;
  }
  return weighted / total;
}

Vector<double> IdwModel::predict(std::span<const LatLon> queries) const {
  Vector<double> out(static_cast<Eigen::Index>(queries.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) out[static_cast<Eigen::Index>(i)] = predict(queries[i]);
  return out;
}

}  // namespace searchsig
