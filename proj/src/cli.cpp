#include "searchsig/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>

#include "searchsig/error.hpp"
#include "searchsig/harness.hpp"
#include "searchsig/io.hpp"
#include "searchsig/json_writer.hpp"
#include "searchsig/synth.hpp"
#include "searchsig/text.hpp"

namespace fs = std::filesystem;

namespace searchsig {

namespace {

struct Options {
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 1;

  // synth
  int n_states = 49;
  int n_counties = 400;
  int n_zips = 2000;
  int n_queries = 1500;
  double absent_rate = 0.02;
  double volume_min = 20000.0;
  double volume_max = 200000.0;
  std::vector<std::string> label_specs = {"signal:linear_in_signature:r2=0.8", "smooth:spatial_smooth",
                                          "shifted:state_shifted"};

  // manifest
  std::string time_window = "unspecified";
  int vocab_size = 1000;
  int top_k = 500;
  std::int64_t min_count = 20;
  double sparsity = 0.98;

  // inputs
  std::string log;
  std::string vocab;
  std::string geography;
  std::string overlaps;
  std::string signatures;
  std::vector<std::string> labels;
  std::vector<std::string> county_labels;
  std::string split;
  std::string split_meta;
  std::string reports;

  // splits and tasks
  double holdout_frac = 0.2;
  int folds = 5;
  int state_folds = 10;
  bool pop_filter = false;
  std::int64_t pop_threshold = 3000;
  std::string mode = "states";
  std::vector<std::string> source_states = {"48", "12"};
  std::vector<std::string> models = {"topsearch_ridge", "idw", "hier_median"};
  std::vector<double> lambda_grid = default_lambda_grid();
  double idw_power = 2.0;
  int idw_neighbors = 12;
  double idw_epsilon = 1e-6;
  std::vector<double> train_fractions = {0.1, 0.25, 0.5, 1.0};
  std::vector<int> dims;
  int ablation_seeds = 3;
  std::vector<std::string> exclude;
  bool record_runtime = false;
};

std::string format_exact(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Every option of the subcommand with its resolved value, keys sorted.
std::string echo_config(const CLI::App& sub, const Options& o) {
  std::map<std::string, std::string> items;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "out") continue;
    std::string value;
    if (opt->get_type_size() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      value = join(opt->results(), ",");
    } else {
      value = opt->get_default_str();
      if (value.size() >= 2 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
    }
    items[name] = value;
  }
  if (items.contains("lambda-grid")) {
    std::vector<std::string> grid;
    for (double l : o.lambda_grid) grid.push_back(format_exact(l));
    items["lambda-grid"] = join(grid, ",");
  }
  JsonWriter w;
  w.begin_object();
  w.field("subcommand", sub.get_name());
  w.begin_object("options");
  for (const auto& [k, v] : items) w.field(k, v);
  w.end_object();
  w.end_object();
  return w.str();
}

DatasetManifest manifest_of(const Options& o) {
  DatasetManifest m;
  m.time_window = o.time_window;
  m.vocab_size = o.vocab_size;
  m.per_region_top = o.top_k;
  m.min_count = o.min_count;
  m.sparsity_threshold = o.sparsity;
  m.seed = o.seed;
  m.validate();
  return m;
}

LabelSpec parse_label_spec(const std::string& text, std::size_t index) {
  const auto parts = split(text, ':');
  if (parts.size() < 2) throw Error(ErrorKind::InvalidArgument, "label spec '" + text + "' needs name:kind");
  LabelSpec l;
  l.name = std::string(parts[0]);
  auto kind = parse_label_kind(parts[1]);
  if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown label kind '" + std::string(parts[1]) + "'");
  l.kind = *kind;
  l.coefficient_seed = index + 1;
  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::InvalidArgument, "label option '" + std::string(parts[i]) + "' needs key=value");
    const std::string_view key = parts[i].substr(0, eq);
    const std::string_view value = parts[i].substr(eq + 1);
    const auto number = parse_real(value);
    if (!number || !std::isfinite(*number)) throw Error(ErrorKind::InvalidArgument, "label option value '" + std::string(value) + "'");
    if (key == "sigma") l.noise_sigma = *number;
    else if (key == "r2") l.target_r2 = *number;
    else if (key == "seed") l.coefficient_seed = static_cast<std::uint64_t>(*number);
    else if (key == "scale") l.length_scale_km = *number;
    else if (key == "shift") l.state_shift_sd = *number;
    else throw Error(ErrorKind::InvalidArgument, "unknown label option '" + std::string(key) + "'");
  }
  return l;
}

RegionHierarchy hierarchy_of(const Options& o) { return load_hierarchy(o.geography, o.overlaps); }

Dataset dataset_of(const Options& o, bool need_county_labels) {
  Dataset data;
  data.hierarchy = hierarchy_of(o);
  data.signatures = load_signatures(o.signatures);
  for (const auto& path : o.labels) {
    LabelTable t = load_labels(path, Level::zip, data.hierarchy);
    const std::string name = t.variable;
    if (!data.zip_labels.emplace(name, std::move(t)).second) {
      throw Error(ErrorKind::DuplicateKey, "variable " + name + " given twice", std::nullopt, name);
    }
  }
  for (const auto& path : o.county_labels) {
    LabelTable t = load_labels(path, Level::county, data.hierarchy, variable_from_path(path));
    const std::string name = t.variable;
    if (!data.county_labels.emplace(name, std::move(t)).second) {
      throw Error(ErrorKind::DuplicateKey, "variable " + name + " given twice", std::nullopt, name);
    }
  }
  if (need_county_labels && data.county_labels.empty()) {
    throw Error(ErrorKind::UsageError, "--county-labels is required");
  }
  return data;
}

TaskConfig task_config(const Options& o, const Dataset& data) {
  TaskConfig c;
  for (const auto& [name, table] : data.zip_labels) c.variables.push_back(name);
  c.models.clear();
  for (const auto& m : o.models) {
    auto kind = parse_model_kind(m);
    if (!kind) throw Error(ErrorKind::InvalidArgument, "unknown model '" + m + "'");
    c.models.push_back(*kind);
  }
  c.seed = o.seed;
  c.holdout_frac = o.holdout_frac;
  c.k_folds = o.folds;
  c.state_folds = o.state_folds;
  if (o.pop_filter) c.population_filter = o.pop_threshold;
  c.superres_population_threshold = o.pop_threshold;
  if (o.lambda_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty lambda grid");
  for (double l : o.lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw Error(ErrorKind::InvalidArgument, "lambda values must be finite and >= 0");
  }
  c.lambda_grid = o.lambda_grid;
  c.idw = {o.idw_power, o.idw_neighbors, o.idw_epsilon};
  c.idw.validate();
  c.train_fractions = o.train_fractions;
  c.feature_dims = o.dims;
  c.ablation_seeds = o.ablation_seeds;
  c.source_states = o.source_states;
  c.exclude_from_mean = o.exclude;
  c.jobs = o.jobs;
  c.record_runtime = o.record_runtime;
  return c;
}

SplitSpec split_of(const Options& o, const RegionHierarchy& hierarchy) {
  if (o.split.empty()) return county_holdout_split(hierarchy, o.seed, o.holdout_frac, o.folds);
  const fs::path meta = o.split_meta.empty() ? fs::path(o.split).parent_path() / "split_meta.csv" : fs::path(o.split_meta);
  return load_split(o.split, meta, &hierarchy);
}

void run_synth(const Options& o) {
  SynthWorldSpec spec;
  spec.seed = o.seed;
  spec.n_states = o.n_states;
  spec.n_counties = o.n_counties;
  spec.n_zips = o.n_zips;
  spec.n_queries = o.n_queries;
  spec.absent_rate = o.absent_rate;
  spec.volume_min = o.volume_min;
  spec.volume_max = o.volume_max;
  for (std::size_t i = 0; i < o.label_specs.size(); ++i) spec.labels.push_back(parse_label_spec(o.label_specs[i], i));
  spec.manifest = manifest_of(o);
  write_world(generate_world(spec), o.out);
}

void run_build_vocab(const Options& o) {
  const DatasetManifest manifest = manifest_of(o);
  const auto records = load_query_log(o.log, manifest);
  const QueryLog log = QueryLog::from_records(records);
  write_vocabulary(build_vocabulary(log, manifest), fs::path(o.out) / "vocab.csv");
}

void run_vectorize(const Options& o) {
  const DatasetManifest manifest = manifest_of(o);
  const QueryLog log = QueryLog::from_records(load_query_log(o.log, manifest));
  const Vocabulary vocab = load_vocabulary(o.vocab);
  const RegionHierarchy hierarchy = hierarchy_of(o);
  FillStats stats;
  const SignatureTable table = build_signatures(log, vocab, hierarchy, manifest.sparsity_threshold, &stats);
  std::size_t observed = 0;
  std::size_t filled = 0;
  std::size_t absent = 0;
  for (auto s : table.status) {
    if (s == SignatureStatus::observed) ++observed;
    else if (s == SignatureStatus::median_filled) ++filled;
    else ++absent;
  }
  write_signatures(table, fs::path(o.out) / "signatures.csv");
  JsonWriter w;
  w.begin_object();
  w.field("regions", table.rows());
  w.field("dimension", static_cast<std::int64_t>(table.dimension()));
  w.field("observed", observed);
  w.field("median_filled", filled);
  w.field("filled_from_county", stats.from_county);
  w.field("filled_from_state", stats.from_state);
  w.field("filled_from_national", stats.from_national);
  w.field("absent", absent);
  w.end_object();
  write_text_atomic(fs::path(o.out) / "signature_stats.json", w.str());
}

void run_split(const Options& o) {
  const RegionHierarchy hierarchy = hierarchy_of(o);
  SplitSpec split = county_holdout_split(hierarchy, o.seed, o.holdout_frac, o.folds);
  if (o.pop_filter) {
    split = restrict_split(split, population_filter(hierarchy, o.pop_threshold));
    split.population_filter = o.pop_threshold;
  }
  write_split(split, fs::path(o.out) / "split.csv", fs::path(o.out) / "split_meta.csv");
}

void run_impute(const Options& o) {
  const Dataset data = dataset_of(o, false);
  TaskConfig config = task_config(o, data);
  const SplitSpec split = split_of(o, data.hierarchy);
  if (!config.population_filter && split.population_filter) config.population_filter = split.population_filter;
  write_task_outputs(run_imputation(data, config, split), o.out);
}

void run_extrapolate(const Options& o) {
  const Dataset data = dataset_of(o, false);
  const TaskConfig config = task_config(o, data);
  if (o.mode == "states") write_task_outputs(run_extrapolation_states(data, config), o.out);
  else write_task_outputs(run_extrapolation_pair(data, config), o.out);
}

void run_superres_cmd(const Options& o) {
  const Dataset data = dataset_of(o, true);
  TaskConfig config = task_config(o, data);
  config.variables.clear();
  for (const auto& [name, table] : data.county_labels) config.variables.push_back(name);
  write_task_outputs(run_superres(data, config), o.out);
}

void run_ablate(const Options& o) {
  const Dataset data = dataset_of(o, false);
  TaskConfig config = task_config(o, data);
  const SplitSpec split = split_of(o, data.hierarchy);
  if (!config.population_filter && split.population_filter) config.population_filter = split.population_filter;
  const auto reports = run_ablation(data, config, split);
  std::map<std::string, std::string> tables;
  for (const auto& r : reports) {
    const std::string point = *r.axis + "-" + format_real(*r.axis_value);
    write_report(r, fs::path(o.out) / ("report_" + task_label(r) + "_" + r.variable + "_" + r.model + "_" + point + ".json"));
    std::string& table = tables[r.variable];
    if (table.empty()) table = "axis,value,test_r2,n_train,n_test\n";
    table += *r.axis + "," + format_real(*r.axis_value) + "," + format_real(*r.test_r2) + "," +
             std::to_string(r.n_train) + "," + std::to_string(r.n_test) + "\n";
  }
  for (const auto& [variable, table] : tables) {
    write_text_atomic(fs::path(o.out) / ("ablation_" + variable + ".csv"), table);
  }
}

void run_report(const Options& o) {
  std::vector<fs::path> files;
  if (!fs::is_directory(o.reports)) throw Error(ErrorKind::MissingFile, "report directory " + o.reports);
  for (const auto& entry : fs::directory_iterator(o.reports)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("report_") && name.ends_with(".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no report_*.json files in " + o.reports);
  std::vector<EvalReport> reports;
  for (const auto& f : files) reports.push_back(load_report(f));
  const auto summaries = summarize(reports, o.exclude);
  write_text_atomic(fs::path(o.out) / "summary.json", serialize_summary(summaries));
  std::string csv = "task,model,filter,variables,mean,mean_excluding,min,median,max\n";
  for (const auto& s : summaries) {
    csv += std::string(to_string(s.task)) + "," + s.model + "," + (s.filter ? std::to_string(*s.filter) : "") + "," +
           std::to_string(s.per_variable.size()) + "," + format_real(s.mean) + "," +
           (s.mean_excluding ? format_real(*s.mean_excluding) : "") + "," + format_real(s.min) + "," +
           format_real(s.median) + "," + format_real(s.max) + "\n";
  }
  write_text_atomic(fs::path(o.out) / "summary.csv", csv);
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--jobs", o.jobs, "Parallel jobs")->check(CLI::Range(1, 256));
}

void add_manifest(CLI::App* sub, Options& o) {
  sub->add_option("--time-window", o.time_window, "Dataset time window label");
  sub->add_option("--vocab-size", o.vocab_size, "Vocabulary size V")->check(CLI::PositiveNumber);
  sub->add_option("--top-k", o.top_k, "Per-region top queries K_top")->check(CLI::PositiveNumber);
  sub->add_option("--min-count", o.min_count, "Minimum count C_min")->check(CLI::NonNegativeNumber);
  sub->add_option("--sparsity", o.sparsity, "Maximum zero fraction of a usable signature");
}

void add_geo(CLI::App* sub, Options& o) {
  sub->add_option("--geography", o.geography, "geography.csv")->required();
  sub->add_option("--overlaps", o.overlaps, "overlaps.csv (zip to county by largest overlap)");
}

void add_task(CLI::App* sub, Options& o) {
  add_geo(sub, o);
  sub->add_option("--signatures", o.signatures, "signatures.csv")->required();
  sub->add_option("--labels", o.labels, "Zip-level label files labels_<variable>.csv")->required()->delimiter(',');
  sub->add_option("--models", o.models, "Models to run")->delimiter(',');
  sub->add_option("--lambda-grid", o.lambda_grid, "Ridge penalty grid")->delimiter(',');
  sub->add_option("--idw-power", o.idw_power, "IDW distance power");
  sub->add_option("--idw-k", o.idw_neighbors, "IDW neighbours");
  sub->add_option("--idw-eps", o.idw_epsilon, "IDW exact-hit radius in km");
  sub->add_flag("--pop-filter", o.pop_filter, "Restrict to zips above the population threshold");
  sub->add_option("--pop-threshold", o.pop_threshold, "Population threshold")->check(CLI::NonNegativeNumber);
  sub->add_flag("--record-runtime", o.record_runtime, "Record wall-clock time in reports");
}

void add_split_source(CLI::App* sub, Options& o) {
  sub->add_option("--split", o.split, "split.csv; generated from --seed when omitted");
  sub->add_option("--split-meta", o.split_meta, "split_meta.csv (default: next to --split)");
  sub->add_option("--holdout-frac", o.holdout_frac, "Fraction of counties held out")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--folds", o.folds, "County-blocked CV folds")->check(CLI::Range(2, 1000));
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Search-signature features and spatial prediction benchmarks", "searchsig"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();
  std::map<std::string, void (*)(const Options&)> handlers;

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic world");
  add_common(synth, o);
  add_manifest(synth, o);
  synth->add_option("--states", o.n_states, "Number of states");
  synth->add_option("--counties", o.n_counties, "Number of counties");
  synth->add_option("--zips", o.n_zips, "Number of zips");
  synth->add_option("--queries", o.n_queries, "Size of the query universe");
  synth->add_option("--absent-rate", o.absent_rate, "Fraction of zips without log rows");
  synth->add_option("--volume-min", o.volume_min, "Minimum expected queries per zip");
  synth->add_option("--volume-max", o.volume_max, "Maximum expected queries per zip");
  synth->add_option("--label", o.label_specs, "name:kind[:sigma=X|r2=X|seed=N|scale=KM|shift=SD]");
  handlers["synth"] = run_synth;

  auto* vocab = app.add_subcommand("build-vocab", "Rank the query vocabulary");
  add_common(vocab, o);
  add_manifest(vocab, o);
  vocab->add_option("--log", o.log, "query_log.csv")->required();
  handlers["build-vocab"] = run_build_vocab;

  auto* vectorize = app.add_subcommand("vectorize", "Build, filter and fill zip signatures");
  add_common(vectorize, o);
  add_manifest(vectorize, o);
  add_geo(vectorize, o);
  vectorize->add_option("--log", o.log, "query_log.csv")->required();
  vectorize->add_option("--vocab", o.vocab, "vocab.csv")->required();
  handlers["vectorize"] = run_vectorize;

  auto* split_cmd = app.add_subcommand("split", "County-blocked holdout and CV folds");
  add_common(split_cmd, o);
  add_geo(split_cmd, o);
  split_cmd->add_option("--holdout-frac", o.holdout_frac, "Fraction of counties held out")->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--folds", o.folds, "County-blocked CV folds")->check(CLI::Range(2, 1000));
  split_cmd->add_flag("--pop-filter", o.pop_filter, "Keep only zips above the population threshold");
  split_cmd->add_option("--pop-threshold", o.pop_threshold, "Population threshold")->check(CLI::NonNegativeNumber);
  handlers["split"] = run_split;

  auto* impute = app.add_subcommand("impute", "County-blocked imputation benchmark");
  add_common(impute, o);
  add_task(impute, o);
  add_split_source(impute, o);
  handlers["impute"] = run_impute;

  auto* extrapolate = app.add_subcommand("extrapolate", "State-level extrapolation benchmark");
  add_common(extrapolate, o);
  add_task(extrapolate, o);
  extrapolate->add_option("--mode", o.mode, "states or pair")->check(CLI::IsMember({"states", "pair"}));
  extrapolate->add_option("--state-folds", o.state_folds, "State-grouped folds")->check(CLI::Range(2, 1000));
  extrapolate->add_option("--folds", o.folds, "Tuning folds inside the source states")->check(CLI::Range(2, 1000));
  extrapolate->add_option("--source-states", o.source_states, "Training states for pair mode")->delimiter(',');
  handlers["extrapolate"] = run_extrapolate;

  auto* superres = app.add_subcommand("superres", "County-trained, zip-evaluated super-resolution");
  add_common(superres, o);
  add_task(superres, o);
  superres->add_option("--county-labels", o.county_labels, "County-level label files")->required()->delimiter(',');
  superres->add_option("--folds", o.folds, "County tuning folds")->check(CLI::Range(2, 1000));
  handlers["superres"] = run_superres_cmd;

  auto* ablate = app.add_subcommand("ablate", "Training-size and feature-dimension sweeps");
  add_common(ablate, o);
  add_task(ablate, o);
  add_split_source(ablate, o);
  ablate->add_option("--train-fractions", o.train_fractions, "Training fractions")->delimiter(',');
  ablate->add_option("--dims", o.dims, "Feature dimensions (default 10/25/50/100% of V)")->delimiter(',');
  ablate->add_option("--ablation-seeds", o.ablation_seeds, "Subsampling seeds per fraction")->check(CLI::PositiveNumber);
  handlers["ablate"] = run_ablate;

  auto* report = app.add_subcommand("report", "Cross-variable summary of report files");
  add_common(report, o);
  report->add_option("--reports", o.reports, "Directory of report_*.json")->required();
  report->add_option("--exclude", o.exclude, "Variables left out of mean_excluding")->delimiter(',');
  handlers["report"] = run_report;

  std::vector<const char*> argv{"searchsig"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "UsageError: " << e.what() << "\n";
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    const std::string config = echo_config(*sub, o);
    out << config;
    write_text_atomic(fs::path(o.out) / ("config_" + sub->get_name() + ".json"), config);
    handlers.at(sub->get_name())(o);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return is_validation_error(e.kind()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << "IoFailure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace searchsig
