#include "searchsig/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "searchsig/error.hpp"
#include "searchsig/io.hpp"
#include "searchsig/json_writer.hpp"
#include "searchsig/rng.hpp"
#include "searchsig/text.hpp"

namespace searchsig {

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::linear_in_signature: return "linear_in_signature";
    case LabelKind::spatial_smooth: return "spatial_smooth";
    case LabelKind::state_shifted: return "state_shifted";
    case LabelKind::noise: return "noise";
  }
  return "noise";
}

std::optional<LabelKind> parse_label_kind(std::string_view text) {
  for (LabelKind k : {LabelKind::linear_in_signature, LabelKind::spatial_smooth, LabelKind::state_shifted,
                      LabelKind::noise}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

namespace {

// Contiguous-US state FIPS codes; Texas and Florida first so that small
// worlds still contain the default extrapolation source states.
constexpr std::array<const char*, 49> kStateFips = {
    "48", "12", "01", "04", "05", "06", "08", "09", "10", "11", "13", "16", "17", "18", "19", "20", "21",
    "22", "23", "24", "25", "26", "27", "28", "29", "30", "31", "32", "33", "34", "35", "36", "37", "38",
    "39", "40", "41", "42", "44", "45", "46", "47", "49", "50", "51", "53", "54", "55", "56"};

constexpr double kLatMin = 25.0, kLatMax = 49.0, kLonMin = -124.0, kLonMax = -67.0;

// Rng stream layout under the world seed.
constexpr std::uint64_t kGeoStream = 1;
constexpr std::uint64_t kFieldStream = 2;
constexpr std::uint64_t kQueryStream = 3;
constexpr std::uint64_t kAbsentStream = 4;
constexpr std::uint64_t kZipStreamBase = 1'000'000;

void invalid(const std::string& detail) { throw Error(ErrorKind::SpecInvalid, detail); }

double quantize(double x) { return *parse_real(format_real(x)); }

std::array<double, 3> embed_km(LatLon p) {
  const double lat = p.lat * std::numbers::pi / 180.0;
  const double lon = p.lon * std::numbers::pi / 180.0;
  return {kEarthRadiusKm * std::cos(lat) * std::cos(lon), kEarthRadiusKm * std::cos(lat) * std::sin(lon),
          kEarthRadiusKm * std::sin(lat)};
}

// Random Fourier features for a squared-exponential kernel on the 3-D
// embedding; chord distance tracks great-circle distance at these scales.
class RandomField {
 public:
  RandomField(Rng rng, double length_scale_km, double amplitude, int features)
      : amplitude_(amplitude), scale_(std::sqrt(2.0 / features)) {
    omega_.resize(static_cast<std::size_t>(features));
    phase_.resize(static_cast<std::size_t>(features));
    for (int m = 0; m < features; ++m) {
      for (double& w : omega_[static_cast<std::size_t>(m)]) w = rng.normal() / length_scale_km;
      phase_[static_cast<std::size_t>(m)] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }

  double operator()(const std::array<double, 3>& x) const {
    double sum = 0.0;
    for (std::size_t m = 0; m < omega_.size(); ++m) {
      sum += std::cos(omega_[m][0] * x[0] + omega_[m][1] * x[1] + omega_[m][2] * x[2] + phase_[m]);
    }
    return amplitude_ * scale_ * sum;
  }

 private:
  double amplitude_;
  double scale_;
  std::vector<std::array<double, 3>> omega_;
  std::vector<double> phase_;
};

std::int64_t poisson(double lambda, Rng& rng) {
  if (lambda <= 0.0) return 0;
  if (lambda < 30.0) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = rng.uniform();
    while (p > limit) {
      ++k;
      p *= rng.uniform();
    }
    return k;
  }
  return std::max<std::int64_t>(0, std::llround(lambda + std::sqrt(lambda) * rng.normal()));
}

double population_variance(const Vector<double>& v) {
  return v.size() == 0 ? 0.0 : (v.array() - v.mean()).square().mean();
}

std::string query_text(int q) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "q%05d", q);
  return buf;
}

struct Geography {
  std::vector<ZipRecord> zips;
  std::vector<Overlap> overlaps;
};

Geography make_geography(const SynthWorldSpec& spec) {
  Rng rng(spec.seed, kGeoStream);
  const int s_count = spec.n_states;
  const int cols = static_cast<int>(std::ceil(std::sqrt(s_count * 1.9)));
  const int rows = (s_count + cols - 1) / cols;
  const double dlon = (kLonMax - kLonMin) / cols;
  const double dlat = (kLatMax - kLatMin) / rows;

  struct County {
    std::string fips;
    int state;
    LatLon center;
    double spread_deg;
  };
  std::vector<std::vector<int>> counties_of_state(static_cast<std::size_t>(s_count));
  for (int c = 0; c < spec.n_counties; ++c) counties_of_state[static_cast<std::size_t>(c % s_count)].push_back(c);
  std::vector<County> counties(static_cast<std::size_t>(spec.n_counties));
  for (int s = 0; s < s_count; ++s) {
    const double lat0 = kLatMin + (s / cols) * dlat;
    const double lon0 = kLonMin + (s % cols) * dlon;
    const auto& members = counties_of_state[static_cast<std::size_t>(s)];
    const double spread = 0.5 * std::sqrt(dlat * dlon / static_cast<double>(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) {
      char fips[16];
      std::snprintf(fips, sizeof fips, "%s%03d", kStateFips[static_cast<std::size_t>(s)], static_cast<int>(2 * k + 1));
      const LatLon center{lat0 + dlat * rng.uniform(0.05, 0.95), lon0 + dlon * rng.uniform(0.05, 0.95)};
      counties[static_cast<std::size_t>(members[k])] = {fips, s, center, spread};
    }
  }

  std::vector<int> county_of_zip(static_cast<std::size_t>(spec.n_zips));
  for (int z = 0; z < spec.n_zips; ++z) {
    county_of_zip[static_cast<std::size_t>(z)] =
        z < spec.n_counties ? z : static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_counties)));
  }
  // Number zips so that ids ascend with (state, county).
  std::vector<int> order(static_cast<std::size_t>(spec.n_zips));
  for (int z = 0; z < spec.n_zips; ++z) order[static_cast<std::size_t>(z)] = z;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return counties[static_cast<std::size_t>(county_of_zip[static_cast<std::size_t>(a)])].fips <
           counties[static_cast<std::size_t>(county_of_zip[static_cast<std::size_t>(b)])].fips;
  });
  const int stride = std::clamp(98000 / spec.n_zips, 1, 3);

  Geography geo;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const County& county = counties[static_cast<std::size_t>(county_of_zip[static_cast<std::size_t>(order[i])])];
    const double lat0 = kLatMin + (county.state / cols) * dlat;
    const double lon0 = kLonMin + (county.state % cols) * dlon;
    ZipRecord z;
    char id[16];
    std::snprintf(id, sizeof id, "%05d", 1000 + static_cast<int>(i) * stride);
    z.zip_id = id;
    z.county_fips = county.fips;
    z.state_fips = kStateFips[static_cast<std::size_t>(county.state)];
    z.centroid.lat = quantize(std::clamp(county.center.lat + county.spread_deg * rng.normal(), lat0, lat0 + dlat));
    z.centroid.lon = quantize(std::clamp(county.center.lon + county.spread_deg * rng.normal(), lon0, lon0 + dlon));
    z.population = std::max<std::int64_t>(
        1, std::llround(std::exp(spec.population_log_mean + spec.population_log_sd * rng.normal())));
    z.land_area_km2 = quantize(std::exp(std::log(80.0) + rng.normal()));

    const auto& siblings = counties_of_state[static_cast<std::size_t>(county.state)];
    if (siblings.size() > 1 && rng.uniform() < spec.secondary_overlap_rate) {
      const double share = rng.uniform(0.05, 0.4);
      std::string other;
      do {
        other = counties[static_cast<std::size_t>(siblings[rng.below(siblings.size())])].fips;
      } while (other == county.fips);
      geo.overlaps.push_back({z.zip_id, county.fips, quantize(z.land_area_km2 * (1.0 - share))});
      geo.overlaps.push_back({z.zip_id, other, quantize(z.land_area_km2 * share)});
    } else {
      geo.overlaps.push_back({z.zip_id, county.fips, z.land_area_km2});
    }
    geo.zips.push_back(std::move(z));
  }
  return geo;
}

}  // namespace

void SynthWorldSpec::validate() const {
  if (n_states < 1) invalid("n_states must be >= 1");
  if (n_states > static_cast<int>(kStateFips.size())) invalid("n_states must be <= 49");
  if (n_counties < n_states) invalid("n_counties must be >= n_states");
  if (n_zips < n_counties) invalid("n_zips must be >= n_counties");
  if (n_counties > 499 * n_states) invalid("too many counties per state");
  if (n_zips > 98000) invalid("n_zips must be <= 98000");
  if (n_queries < 1) invalid("n_queries must be >= 1");
  if (random_features < 1) invalid("random_features must be >= 1");
  for (const auto& f : factors) {
    if (!(f.length_scale_km > 0.0)) invalid("factor length scale must be > 0");
    if (!(f.amplitude >= 0.0) || !(f.weight >= 0.0)) invalid("factor amplitude and weight must be >= 0");
  }
  if (!(zipf_exponent >= 0.0)) invalid("zipf_exponent must be >= 0");
  if (!(idiosyncratic_sd >= 0.0)) invalid("idiosyncratic_sd must be >= 0");
  if (!(volume_min >= 1.0) || !(volume_max >= volume_min)) invalid("volume range must satisfy 1 <= min <= max");
  if (log_floor < 1) invalid("log_floor must be >= 1");
  if (!(absent_rate >= 0.0 && absent_rate < 1.0)) invalid("absent_rate must lie in [0, 1)");
  if (!(secondary_overlap_rate >= 0.0 && secondary_overlap_rate <= 1.0)) invalid("secondary_overlap_rate must lie in [0, 1]");
  if (!(population_log_sd >= 0.0) || !std::isfinite(population_log_mean)) invalid("bad population parameters");
  std::set<std::string> names;
  for (const auto& l : labels) {
    if (l.name.empty() || l.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_") != std::string::npos) {
      invalid("label name '" + l.name + "' must be non-empty [a-z0-9_]");
    }
    if (!names.insert(l.name).second) invalid("duplicate label name " + l.name);
    if (!(l.noise_sigma >= 0.0)) invalid("noise sigma must be >= 0");
    if (l.target_r2 && !(*l.target_r2 > 0.0 && *l.target_r2 <= 1.0)) invalid("target_r2 must lie in (0, 1]");
    if (!(l.length_scale_km > 0.0)) invalid("label length scale must be > 0");
    if (!(l.state_shift_sd >= 0.0)) invalid("state_shift_sd must be >= 0");
  }
  try {
    manifest.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
}

SynthWorld generate_world(const SynthWorldSpec& spec) {
  spec.validate();
  SynthWorld world;
  world.oracle.seed = spec.seed;
  world.oracle.factors = spec.factors;

  Geography geo = make_geography(spec);
  world.overlaps = std::move(geo.overlaps);
  world.hierarchy = RegionHierarchy(std::move(geo.zips));
  const auto& zips = world.hierarchy.zips();
  const std::size_t n = zips.size();

  std::vector<std::array<double, 3>> embedded(n);
  for (std::size_t i = 0; i < n; ++i) embedded[i] = embed_km(zips[i].centroid);

  // Latent factors at every zip.
  const Rng field_root(spec.seed, kFieldStream);
  world.oracle.latent.assign(spec.factors.size(), std::vector<double>(n));
  for (std::size_t f = 0; f < spec.factors.size(); ++f) {
    const RandomField field(field_root.split(f), spec.factors[f].length_scale_km, spec.factors[f].amplitude,
                            spec.random_features);
    for (std::size_t i = 0; i < n; ++i) world.oracle.latent[f][i] = field(embedded[i]);
  }

  // Query propensities: Zipf base plus factor loadings.
  const auto q_count = static_cast<std::size_t>(spec.n_queries);
  const auto f_count = spec.factors.size();
  Rng query_rng(spec.seed, kQueryStream);
  std::vector<double> base(q_count);
  Matrix<double> loadings(static_cast<Eigen::Index>(q_count), static_cast<Eigen::Index>(f_count));
  for (std::size_t q = 0; q < q_count; ++q) {
    base[q] = -spec.zipf_exponent * std::log(static_cast<double>(q + 1));
    for (std::size_t f = 0; f < f_count; ++f) {
      loadings(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(f)) = spec.factors[f].weight * query_rng.normal();
    }
  }

  // Zips with no log rows at all.
  std::vector<std::size_t> shuffled(n);
  for (std::size_t i = 0; i < n; ++i) shuffled[i] = i;
  Rng absent_rng(spec.seed, kAbsentStream);
  shuffle(shuffled, absent_rng);
  std::vector<bool> absent(n, false);
  const auto n_absent = static_cast<std::size_t>(std::llround(spec.absent_rate * static_cast<double>(n)));
  for (std::size_t k = 0; k < n_absent; ++k) absent[shuffled[k]] = true;

  std::vector<std::string> region_ids;
  std::vector<QueryLog::Entry> entries;
  std::vector<bool> query_used(q_count, false);
  std::vector<double> logits(q_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (absent[i]) continue;
    Rng rng = Rng(spec.seed).split(kZipStreamBase + i);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < q_count; ++q) {
      double v = base[q] + spec.idiosyncratic_sd * rng.normal();
      for (std::size_t f = 0; f < f_count; ++f) {
        v += loadings(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(f)) * world.oracle.latent[f][i];
      }
      logits[q] = v;
      peak = std::max(peak, v);
    }
    double norm = 0.0;
    for (double& v : logits) {
      v = std::exp(v - peak);
      norm += v;
    }
    const double volume = std::exp(rng.uniform(std::log(spec.volume_min), std::log(spec.volume_max)));
    const auto region = static_cast<std::uint32_t>(region_ids.size());
    bool any = false;
    for (std::size_t q = 0; q < q_count; ++q) {
      const std::int64_t count = poisson(volume * logits[q] / norm, rng);
      if (count < spec.log_floor) continue;
      entries.push_back({region, static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(count)});
      query_used[q] = true;
      any = true;
    }
    if (any) region_ids.push_back(zips[i].zip_id);
    else absent[i] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (absent[i]) world.oracle.absent_zips.push_back(zips[i].zip_id);
  }
  // Compact the query dictionary to the queries that occur.
  std::vector<std::uint32_t> remap(q_count, 0);
  std::vector<std::string> queries;
  for (std::size_t q = 0; q < q_count; ++q) {
    if (!query_used[q]) continue;
    remap[q] = static_cast<std::uint32_t>(queries.size());
    queries.push_back(query_text(static_cast<int>(q)));
  }
  for (auto& e : entries) e.query = remap[e.query];
  world.log = QueryLog(std::move(region_ids), std::move(queries), std::move(entries));

  if (spec.labels.empty()) return world;

  world.vocabulary = build_vocabulary(world.log, spec.manifest);
  world.signatures = build_signatures(world.log, world.vocabulary, world.hierarchy, spec.manifest.sparsity_threshold);
  const SignatureTable& sigs = world.signatures;

  std::vector<std::size_t> rows;  // usable signature rows, zip order
  for (std::size_t r = 0; r < sigs.rows(); ++r) {
    if (sigs.usable(r)) rows.push_back(r);
  }
  if (rows.size() < 2) throw Error(ErrorKind::DegenerateData, "fewer than two usable signatures for labels");
  const auto m = static_cast<Eigen::Index>(rows.size());
  Matrix<double> x(m, sigs.dimension());
  for (Eigen::Index k = 0; k < m; ++k) x.row(k) = sigs.values.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]));
  std::vector<std::size_t> zip_of_row(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) zip_of_row[k] = *world.hierarchy.zip_index(sigs.region_ids[rows[k]]);

  for (const LabelSpec& label : spec.labels) {
    Rng rng(label.coefficient_seed, mix64(spec.seed));
    LabelOracle oracle;
    oracle.name = label.name;
    oracle.kind = label.kind;
    Vector<double> signal = Vector<double>::Zero(m);

    if (label.kind == LabelKind::linear_in_signature || label.kind == LabelKind::state_shifted) {
      const Eigen::RowVectorXd mean = x.colwise().mean();
      const Eigen::RowVectorXd sd = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt();
      Vector<double> beta(x.cols());
      for (Eigen::Index j = 0; j < x.cols(); ++j) beta[j] = sd[j] > 0.0 ? rng.normal() / sd[j] : 0.0;
      signal = x * beta;
      const double v = population_variance(signal);
      if (!(v > 0.0)) throw Error(ErrorKind::DegenerateData, "signature-driven label " + label.name + " is constant");
      const double c = signal.mean();
      const double scale = 1.0 / std::sqrt(v);
      signal = (signal.array() - c) * scale;
      beta *= scale;
      oracle.coefficients.assign(beta.data(), beta.data() + beta.size());
      oracle.intercept = -c * scale;
      if (label.kind == LabelKind::state_shifted) {
        for (const auto& s : world.hierarchy.states()) oracle.state_shifts[s] = label.state_shift_sd * rng.normal();
        for (Eigen::Index k = 0; k < m; ++k) {
          signal[k] += oracle.state_shifts.at(zips[zip_of_row[static_cast<std::size_t>(k)]].state_fips);
        }
      }
    } else if (label.kind == LabelKind::spatial_smooth) {
      const RandomField field(rng.split(1), label.length_scale_km, 1.0, spec.random_features);
      for (Eigen::Index k = 0; k < m; ++k) signal[k] = field(embedded[zip_of_row[static_cast<std::size_t>(k)]]);
      const double v = population_variance(signal);
      if (!(v > 0.0)) throw Error(ErrorKind::DegenerateData, "spatial label " + label.name + " is constant");
      signal = (signal.array() - signal.mean()) / std::sqrt(v);
    }

    oracle.signal_variance = population_variance(signal);
    double sigma = label.noise_sigma;
    if (label.target_r2) sigma = std::sqrt(oracle.signal_variance * (1.0 - *label.target_r2) / *label.target_r2);
    oracle.noise_sigma = sigma;
    Rng noise_rng = rng.split(2);
    Vector<double> y = signal;
    if (sigma > 0.0) {
      for (Eigen::Index k = 0; k < m; ++k) y[k] += sigma * noise_rng.normal();
    }
    const double var_y = population_variance(y);
    oracle.best_r2 = var_y > 0.0 ? 1.0 - sigma * sigma / var_y : 0.0;

    LabelTable zip_table{label.name, Level::zip, "", {}, 0};
    std::map<std::string, std::pair<double, int>> county_sum;
    for (Eigen::Index k = 0; k < m; ++k) {
      const ZipRecord& z = zips[zip_of_row[static_cast<std::size_t>(k)]];
      zip_table.values.emplace(z.zip_id, y[k]);
      auto& acc = county_sum[z.county_fips];
      acc.first += y[k];
      acc.second += 1;
    }
    LabelTable county_table{label.name, Level::county, "", {}, 0};
    for (const auto& [county, acc] : county_sum) county_table.values.emplace(county, acc.first / acc.second);
    world.zip_labels.emplace(label.name, std::move(zip_table));
    world.county_labels.emplace(label.name, std::move(county_table));
    world.oracle.labels.push_back(std::move(oracle));
  }
  return world;
}

std::string serialize_oracle(const SynthOracle& oracle) {
  JsonWriter w;
  w.begin_object();
  w.field("seed", oracle.seed);
  w.field("absent_zips", std::span<const std::string>(oracle.absent_zips));
  w.begin_array("latent_factors");
  for (std::size_t f = 0; f < oracle.factors.size(); ++f) {
    w.begin_object();
    w.field("length_scale_km", oracle.factors[f].length_scale_km);
    w.field("amplitude", oracle.factors[f].amplitude);
    w.field("weight", oracle.factors[f].weight);
    if (f < oracle.latent.size()) w.field("values", std::span<const double>(oracle.latent[f]));
    w.end_object();
  }
  w.end_array();
  w.begin_array("labels");
  for (const auto& l : oracle.labels) {
    w.begin_object();
    w.field("name", l.name);
    w.field("kind", to_string(l.kind));
    w.field("noise_sigma", l.noise_sigma);
    w.field("signal_variance", l.signal_variance);
    w.field("best_r2", l.best_r2);
    w.field("intercept", l.intercept);
    w.field("coefficients", std::span<const double>(l.coefficients));
    w.begin_object("state_shifts");
    for (const auto& [state, shift] : l.state_shifts) w.field(state, shift);
    w.end_object();
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

void write_world(const SynthWorld& world, const std::filesystem::path& dir) {
  write_geography(world.hierarchy, dir / "geography.csv");
  write_overlaps(world.overlaps, dir / "overlaps.csv");
  write_query_log(world.log, dir / "query_log.csv");
  for (const auto& [name, table] : world.zip_labels) write_labels(table, dir / ("labels_" + name + ".csv"));
  for (const auto& [name, table] : world.county_labels) write_labels(table, dir / ("county_labels_" + name + ".csv"));
  write_text_atomic(dir / "oracle.json", serialize_oracle(world.oracle));
}

namespace {

struct SmallLog {
  std::vector<std::string> regions;
  std::vector<std::string> queries;
  std::map<std::pair<std::string, std::string>, std::int64_t> counts;
};

SmallLog small_log(std::span<const QueryLogRecord> records) {
  SmallLog log;
  std::set<std::string> regions;
  std::set<std::string> queries;
  for (const auto& r : records) {
    regions.insert(r.region_id);
    queries.insert(r.query_text);
    log.counts[{r.region_id, r.query_text}] += r.count;
  }
  if (regions.size() > 10 || queries.size() > 50) {
    throw Error(ErrorKind::TooLarge, std::to_string(regions.size()) + " regions, " + std::to_string(queries.size()) +
                                         " queries; the oracle handles at most 10 and 50");
  }
  log.regions.assign(regions.begin(), regions.end());
  log.queries.assign(queries.begin(), queries.end());
  return log;
}

}  // namespace

Vocabulary oracle_vocabulary(std::span<const QueryLogRecord> records, int k_top, std::int64_t min_count,
                             int vocab_size) {
  const SmallLog log = small_log(records);
  auto count = [&](const std::string& r, const std::string& q) -> std::int64_t {
    auto it = log.counts.find({r, q});
    return it == log.counts.end() ? 0 : it->second;
  };
  std::map<std::string, std::int64_t> coverage;
  std::map<std::string, std::int64_t> total;
  for (const auto& q : log.queries) {
    for (const auto& r : log.regions) total[q] += count(r, q);
  }
  for (const auto& r : log.regions) {
    for (const auto& q : log.queries) {
      const std::int64_t c = count(r, q);
      if (!log.counts.contains({r, q}) || c < min_count) continue;
      int beaten_by = 0;
      for (const auto& other : log.queries) {
        const std::int64_t oc = count(r, other);
        if (!log.counts.contains({r, other}) || oc < min_count || other == q) continue;
        if (oc > c || (oc == c && other < q)) ++beaten_by;
      }
      if (beaten_by < k_top) ++coverage[q];
    }
  }
  std::vector<VocabularyEntry> slots(coverage.size());
  std::size_t kept = 0;
  for (const auto& [q, cov] : coverage) {
    std::size_t rank = 0;
    for (const auto& [other, other_cov] : coverage) {
      if (other == q) continue;
      if (other_cov > cov || (other_cov == cov && total[other] > total[q]) ||
          (other_cov == cov && total[other] == total[q] && other < q)) {
        ++rank;
      }
    }
    if (rank < static_cast<std::size_t>(vocab_size)) {
      slots[rank] = {q, cov, total[q]};
      ++kept;
    }
  }
  slots.resize(kept);
  if (slots.empty()) throw Error(ErrorKind::EmptyInput, "no query reaches any region's top set");
  return Vocabulary(std::move(slots));
}

Vocabulary oracle_vocabulary(const SynthWorld& world, const DatasetManifest& manifest) {
  const auto records = world.log.records();
  return oracle_vocabulary(records, manifest.per_region_top, manifest.min_count, manifest.vocab_size);
}

std::map<std::string, std::vector<double>> oracle_signatures(std::span<const QueryLogRecord> records,
                                                             const Vocabulary& vocab) {
  const SmallLog log = small_log(records);
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : log.regions) {
    std::vector<double> raw(vocab.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      for (const auto& rec : records) {
        if (rec.region_id == r && rec.query_text == vocab.entries()[i].query_text) raw[i] += static_cast<double>(rec.count);
      }
      sum += raw[i];
    }
    if (sum == 0.0) {
      out[r] = {};
      continue;
    }
    for (double& v : raw) v = 100.0 * v / sum;
    out[r] = std::move(raw);
  }
  return out;
}

}  // namespace searchsig
