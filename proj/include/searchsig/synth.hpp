#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "searchsig/signature.hpp"
#include "searchsig/spatial.hpp"
#include "searchsig/tables.hpp"

namespace searchsig {

enum class LabelKind { linear_in_signature, spatial_smooth, state_shifted, noise };
std::string_view to_string(LabelKind kind);
std::optional<LabelKind> parse_label_kind(std::string_view text);

/// One latent spatial factor: a squared-exponential random field.
struct LatentFactorSpec {
  double length_scale_km = 400.0;
  double amplitude = 1.0;
  double weight = 0.6;  // scale of the query loadings on this factor
};

struct LabelSpec {
  std::string name;
  LabelKind kind = LabelKind::linear_in_signature;
  std::uint64_t coefficient_seed = 1;
  double noise_sigma = 0.0;
  /// When set, noise_sigma is derived so that 1 - sigma^2 / Var(y) hits it.
  std::optional<double> target_r2;
  double length_scale_km = 300.0;  // spatial_smooth only
  double state_shift_sd = 1.0;     // state_shifted only, in signal-sd units
};

struct SynthWorldSpec {
  std::uint64_t seed = 0;
  int n_states = 49;
  int n_counties = 400;
  int n_zips = 2000;

  std::vector<LatentFactorSpec> factors = {{900.0, 1.0, 0.6}, {450.0, 1.0, 0.6}, {220.0, 1.0, 0.6}, {110.0, 1.0, 0.6}};
  int random_features = 128;  // per field

  int n_queries = 1500;         // query universe
  double zipf_exponent = 0.8;   // base propensity ~ rank^-s
  double idiosyncratic_sd = 0.3;
  double volume_min = 20000.0;  // expected queries per zip, log-uniform
  double volume_max = 200000.0;
  std::int64_t log_floor = 1;   // counts below this are not logged
  double absent_rate = 0.02;    // zips with no log rows at all
  double secondary_overlap_rate = 0.2;

  double population_log_mean = 8.5;
  double population_log_sd = 1.2;

  std::vector<LabelSpec> labels;
  /// Signature constants used to compute signature-driven labels.
  DatasetManifest manifest;

  /// Throws SpecInvalid.
  void validate() const;
};

struct LabelOracle {
  std::string name;
  LabelKind kind = LabelKind::linear_in_signature;
  double noise_sigma = 0.0;
  double signal_variance = 0.0;
  double best_r2 = 0.0;  // 1 - sigma^2 / Var(y) on the generated population
  double intercept = 0.0;
  std::vector<double> coefficients;  // per feature, raw signature units
  std::map<std::string, double> state_shifts;
};

struct SynthOracle {
  std::uint64_t seed = 0;
  std::vector<std::string> absent_zips;
  std::vector<LatentFactorSpec> factors;
  std::vector<std::vector<double>> latent;  // per factor, aligned with hierarchy zips
  std::vector<LabelOracle> labels;
};

struct SynthWorld {
  RegionHierarchy hierarchy;
  std::vector<Overlap> overlaps;
  QueryLog log;
  /// Pipeline vocabulary and signatures; empty when the spec has no labels.
  Vocabulary vocabulary;
  SignatureTable signatures;
  std::map<std::string, LabelTable> zip_labels;
  std::map<std::string, LabelTable> county_labels;
  SynthOracle oracle;
};

SynthWorld generate_world(const SynthWorldSpec& spec);

/// Writes geography, overlaps, query log, label tables and oracle.json.
void write_world(const SynthWorld& world, const std::filesystem::path& dir);
std::string serialize_oracle(const SynthOracle& oracle);

/// Exhaustive-enumeration vocabulary for small logs. Every rank is found by
/// counting the entries that beat it. Throws TooLarge beyond 10 regions or
/// 50 distinct queries.
Vocabulary oracle_vocabulary(std::span<const QueryLogRecord> records, int k_top, std::int64_t min_count,
                             int vocab_size);
Vocabulary oracle_vocabulary(const SynthWorld& world, const DatasetManifest& manifest);

/// Per-region signatures by direct lookup, same guards as oracle_vocabulary.
/// Regions without in-vocabulary counts map to an empty vector.
std::map<std::string, std::vector<double>> oracle_signatures(std::span<const QueryLogRecord> records,
                                                             const Vocabulary& vocab);

}  // namespace searchsig
