#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "searchsig/rng.hpp"
#include "searchsig/synth.hpp"
#include "support.hpp"

using namespace searchsig;
using testing::error_kind;

namespace {

SynthWorldSpec small_spec(std::uint64_t seed) {
  SynthWorldSpec spec;
  spec.seed = seed;
  spec.n_states = 10;
  spec.n_counties = 100;
  spec.n_zips = 2000;
  spec.n_queries = 300;
  spec.manifest.vocab_size = 40;
  spec.manifest.per_region_top = 100;
  spec.labels = {{"exact", LabelKind::linear_in_signature, 1, 0.0}, {"smooth", LabelKind::spatial_smooth, 2, 0.0}};
  return spec;
}

const LabelOracle& oracle_for(const SynthWorld& w, const std::string& name) {
  for (const auto& l : w.oracle.labels) {
    if (l.name == name) return l;
  }
  throw std::runtime_error("no oracle for " + name);
}

}  // namespace

TEST_CASE("worlds are deterministic byte for byte") {
  SynthWorldSpec spec = small_spec(3);
  spec.n_zips = 400;
  testing::TempDir a("synth_a"), b("synth_b");
  write_world(generate_world(spec), a.path());
  write_world(generate_world(spec), b.path());
  const auto files = testing::snapshot(a.path());
  CHECK(files == testing::snapshot(b.path()));
  for (const char* name : {"geography.csv", "overlaps.csv", "query_log.csv", "labels_exact.csv",
                           "county_labels_exact.csv", "oracle.json"}) {
    CHECK(files.contains(name));
  }
  spec.seed = 4;
  testing::TempDir c("synth_c");
  write_world(generate_world(spec), c.path());
  CHECK(testing::snapshot(c.path()) != files);
}

TEST_CASE("hierarchy shape and absent rate") {
  const SynthWorld w = generate_world(small_spec(5));
  CHECK(w.hierarchy.zips().size() == 2000);
  CHECK(w.hierarchy.counties().size() == 100);
  CHECK(w.hierarchy.states().size() == 10);
  const double absent = 1.0 - static_cast<double>(w.log.regions().size()) / 2000.0;
  CHECK(std::abs(absent - 0.02) <= 0.01);
  CHECK(w.oracle.absent_zips.size() == 2000 - w.log.regions().size());
  for (const auto& z : w.oracle.absent_zips) CHECK_FALSE(w.log.region_index(z).has_value());
}

TEST_CASE("noiseless linear labels are exactly linear in signatures") {
  const SynthWorld w = generate_world(small_spec(6));
  const LabelOracle& o = oracle_for(w, "exact");
  CHECK(o.best_r2 == 1.0);
  CHECK(o.noise_sigma == 0.0);

  const LabelTable& labels = w.zip_labels.at("exact");
  const auto n = static_cast<Eigen::Index>(labels.values.size());
  Matrix<double> design(n, w.signatures.dimension() + 1);
  Vector<double> y(n);
  Eigen::Index k = 0;
  for (const auto& [zip, value] : labels.values) {
    const auto row = static_cast<Eigen::Index>(*w.signatures.index_of(zip));
    design(k, 0) = 1.0;
    design.row(k).tail(w.signatures.dimension()) = w.signatures.values.row(row);
    y[k++] = value;
  }
  const Vector<double> beta = design.colPivHouseholderQr().solve(y);
  CHECK((design * beta - y).cwiseAbs().maxCoeff() < 1e-8);

  // the recorded coefficients reproduce the labels
  Vector<double> coef = Eigen::Map<const Vector<double>>(o.coefficients.data(), static_cast<Eigen::Index>(o.coefficients.size()));
  const Vector<double> direct = (design.rightCols(w.signatures.dimension()) * coef).array() + o.intercept;
  CHECK((direct - y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("county labels are unweighted means of member zips") {
  const SynthWorld w = generate_world(small_spec(7));
  for (const auto& [name, zip_table] : w.zip_labels) {
    const LabelTable& county = w.county_labels.at(name);
    std::map<std::string, std::vector<double>> members;
    for (const auto& [zip, v] : zip_table.values) members[w.hierarchy.zip(zip).county_fips].push_back(v);
    CHECK(members.size() == county.values.size());
    for (const auto& [fips, values] : members) {
      double sum = 0.0;
      for (double v : values) sum += v;
      CHECK(county.values.at(fips) == sum / static_cast<double>(values.size()));
    }
  }
}

TEST_CASE("target R2 calibrates the noise level") {
  SynthWorldSpec spec = small_spec(8);
  spec.n_zips = 5000;
  spec.n_counties = 400;
  spec.labels = {{"noisy", LabelKind::linear_in_signature, 9, 0.0, 0.8}};
  const SynthWorld w = generate_world(spec);
  const LabelOracle& o = oracle_for(w, "noisy");
  CHECK(std::abs(o.best_r2 - 0.8) <= 0.02);

  // independent estimate from the realized residuals
  const LabelTable& labels = w.zip_labels.at("noisy");
  std::vector<double> y, noise;
  for (const auto& [zip, value] : labels.values) {
    const auto row = static_cast<Eigen::Index>(*w.signatures.index_of(zip));
    double signal = o.intercept;
    for (std::size_t j = 0; j < o.coefficients.size(); ++j)
      signal += o.coefficients[j] * w.signatures.values(row, static_cast<Eigen::Index>(j));
    y.push_back(value);
    noise.push_back(value - signal);
  }
  auto variance = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size());
  };
  CHECK(std::abs(1.0 - variance(noise) / variance(y) - 0.8) <= 0.02);
}

TEST_CASE("state-shifted and noise labels") {
  SynthWorldSpec spec = small_spec(9);
  spec.labels = {{"shifted", LabelKind::state_shifted, 1, 0.0}, {"pure_noise", LabelKind::noise, 2, 1.0}};
  const SynthWorld w = generate_world(spec);
  CHECK(oracle_for(w, "shifted").state_shifts.size() == 10);
  const LabelOracle& noise = oracle_for(w, "pure_noise");
  CHECK(noise.signal_variance == 0.0);
  CHECK(std::abs(noise.best_r2) < 0.02);
}

TEST_CASE("spec validation") {
  auto invalid = [](auto mutate) {
    SynthWorldSpec spec = small_spec(1);
    mutate(spec);
    return error_kind([&] { generate_world(spec); }) == ErrorKind::SpecInvalid;
  };
  CHECK(invalid([](SynthWorldSpec& s) { s.n_counties = s.n_zips + 1; }));
  CHECK(invalid([](SynthWorldSpec& s) { s.n_states = 0; }));
  CHECK(invalid([](SynthWorldSpec& s) { s.n_states = 50; }));
  CHECK(invalid([](SynthWorldSpec& s) { s.labels[0].noise_sigma = -1.0; }));
  CHECK(invalid([](SynthWorldSpec& s) { s.factors[0].weight = -0.1; }));
  CHECK(invalid([](SynthWorldSpec& s) { s.labels.push_back(s.labels[0]); }));
  CHECK(invalid([](SynthWorldSpec& s) { s.manifest.vocab_size = 0; }));
}

TEST_CASE("oracle vocabulary") {
  const std::vector<QueryLogRecord> toy = {{"00001", "q1", 5}, {"00001", "q2", 4}, {"00001", "q3", 1},
                                           {"00002", "q1", 3}, {"00002", "q2", 2}, {"00002", "q3", 2},
                                           {"00003", "q2", 2}, {"00003", "q4", 9}};
  std::vector<std::string> order;
  const Vocabulary toy_vocab = oracle_vocabulary(toy, 2, 2, 3);
  for (const auto& e : toy_vocab.entries()) order.push_back(e.query_text);
  CHECK(order == std::vector<std::string>{"q2", "q1", "q4"});

  const std::vector<QueryLogRecord> single = {{"00001", "b", 3}, {"00001", "a", 3}, {"00001", "c", 9}};
  order.clear();
  const Vocabulary single_vocab = oracle_vocabulary(single, 10, 0, 10);
  for (const auto& e : single_vocab.entries()) order.push_back(e.query_text);
  CHECK(order == std::vector<std::string>{"c", "a", "b"});

  std::vector<QueryLogRecord> regions;
  for (int r = 0; r < 11; ++r) regions.push_back({std::to_string(10000 + r), "q", 1});
  CHECK(error_kind([&] { oracle_vocabulary(regions, 5, 0, 5); }) == ErrorKind::TooLarge);
  std::vector<QueryLogRecord> queries;
  for (int q = 0; q < 51; ++q) queries.push_back({"00001", "q" + std::to_string(q), 1});
  CHECK(error_kind([&] { oracle_vocabulary(queries, 5, 0, 5); }) == ErrorKind::TooLarge);
}

TEST_CASE("oracle agrees with the pipeline on tiny generated worlds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthWorldSpec spec;
    spec.seed = seed;
    spec.n_states = 2;
    spec.n_counties = 4;
    spec.n_zips = 10;
    spec.n_queries = 50;
    spec.volume_min = 50;
    spec.volume_max = 500;
    spec.absent_rate = 0.1;
    DatasetManifest m;
    m.vocab_size = 8;
    m.per_region_top = 5;
    m.min_count = 2;
    const SynthWorld w = generate_world(spec);
    const Vocabulary vocab = build_vocabulary(w.log, m);
    CHECK(oracle_vocabulary(w, m) == vocab);
    const auto records = w.log.records();
    const auto expect = oracle_signatures(records, vocab);
    const SignatureTable t = vectorize(w.log, vocab, w.log.regions());
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto& e = expect.at(t.region_ids[r]);
      if (e.empty()) {
        CHECK(t.status[r] == SignatureStatus::absent);
        continue;
      }
      for (std::size_t j = 0; j < e.size(); ++j)
        CHECK(t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) == e[j]);
    }
  }
}
