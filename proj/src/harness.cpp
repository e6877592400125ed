#include "searchsig/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "searchsig/error.hpp"
#include "searchsig/io.hpp"
#include "searchsig/json_writer.hpp"
#include "searchsig/rng.hpp"
#include "searchsig/text.hpp"

namespace searchsig {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::topsearch_ridge: return "topsearch_ridge";
    case ModelKind::idw: return "idw";
    case ModelKind::hier_median: return "hier_median";
  }
  return "topsearch_ridge";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (ModelKind k : {ModelKind::topsearch_ridge, ModelKind::idw, ModelKind::hier_median}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

namespace {

// Runs fn(0..n-1) on up to `jobs` threads. The exception of the lowest
// failing index is rethrown, matching the serial behaviour.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> workers;
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(jobs));
  for (std::size_t t = 0; t < count; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> resolve_variables(const Dataset& data, const TaskConfig& config) {
  std::vector<std::string> vars = config.variables;
  if (vars.empty()) {
    for (const auto& [name, table] : data.zip_labels) vars.push_back(name);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  if (vars.empty()) throw Error(ErrorKind::NoLabels, "no variables to evaluate");
  return vars;
}

std::vector<ModelKind> resolve_models(const TaskConfig& config) {
  std::vector<ModelKind> models = config.models;
  std::sort(models.begin(), models.end());
  models.erase(std::unique(models.begin(), models.end()), models.end());
  if (models.empty()) throw Error(ErrorKind::InvalidArgument, "no models selected");
  return models;
}

std::optional<std::set<std::string>> eligible_set(const Dataset& data, std::optional<std::int64_t> threshold) {
  if (!threshold) return std::nullopt;
  return population_filter(data.hierarchy, *threshold);
}

Matrix<double> feature_matrix(const SignatureTable& table, std::span<const std::size_t> rows, int dimension) {
  const Eigen::Index d = dimension > 0 ? dimension : table.dimension();
  if (d > table.dimension()) throw Error(ErrorKind::BadDimension, "feature dimension exceeds signature dimension");
  Matrix<double> x(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = table.values.row(static_cast<Eigen::Index>(rows[i])).head(d);
  }
  return x;
}

Vector<double> take(const Vector<double>& v, std::span<const std::size_t> rows) {
  Vector<double> out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

void check_no_leakage(std::span<const std::string> train_ids, std::span<const std::string> eval_ids) {
  std::vector<std::string> a(train_ids.begin(), train_ids.end());
  std::vector<std::string> b(eval_ids.begin(), eval_ids.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  if (!both.empty()) {
    throw Error(ErrorKind::Leakage,
                std::to_string(both.size()) + " region(s) in both training and evaluation sets, e.g. " + both.front(),
                std::nullopt, both.front());
  }
}

VariableData gather_variable(const Dataset& data, const std::string& variable, const std::set<std::string>* eligible) {
  auto it = data.zip_labels.find(variable);
  if (it == data.zip_labels.end()) throw Error(ErrorKind::NoLabels, "no zip-level labels for " + variable);
  VariableData out;
  out.variable = variable;
  std::vector<double> y;
  for (const auto& [zip_id, value] : it->second.values) {
    if (eligible && !eligible->contains(zip_id)) continue;
    auto row = data.signatures.index_of(zip_id);
    if (!row || !data.signatures.usable(*row)) continue;
    out.zip_ids.push_back(zip_id);
    out.signature_rows.push_back(*row);
    out.locations.push_back(data.hierarchy.zip(zip_id).centroid);
    y.push_back(value);
  }
  out.targets = Eigen::Map<const Vector<double>>(y.data(), static_cast<Eigen::Index>(y.size()));
  return out;
}

LayoutResult evaluate_layout(const Dataset& data, const VariableData& rows, const FoldLayout& layout, ModelKind model,
                             const TaskConfig& config, int feature_dimension) {
  const std::size_t n = rows.zip_ids.size();
  if (layout.fold_of_row.size() != n) throw Error(ErrorKind::LengthMismatch, "fold layout does not match rows");
  int max_fold = -1;
  for (int f : layout.fold_of_row) max_fold = std::max(max_fold, f);
  std::vector<std::vector<std::size_t>> rows_of(static_cast<std::size_t>(max_fold + 1));
  for (std::size_t i = 0; i < n; ++i) {
    if (layout.fold_of_row[i] >= 0) rows_of[static_cast<std::size_t>(layout.fold_of_row[i])].push_back(i);
  }
  auto fold_rows = [&](int f) -> const std::vector<std::size_t>& {
    static const std::vector<std::size_t> none;
    return f >= 0 && f <= max_fold ? rows_of[static_cast<std::size_t>(f)] : none;
  };

  // Leakage guard: evaluation rows never appear in their training folds.
  std::vector<std::vector<int>> train_folds;
  for (const auto& ev : layout.evaluations) {
    std::vector<std::string> train_ids;
    std::vector<std::string> eval_ids;
    for (std::size_t i : fold_rows(ev.eval_fold)) eval_ids.push_back(rows.zip_ids[i]);
    std::vector<int> present;
    for (int f : ev.train_folds) {
      for (std::size_t i : fold_rows(f)) train_ids.push_back(rows.zip_ids[i]);
      if (!fold_rows(f).empty()) present.push_back(f);
    }
    check_no_leakage(train_ids, eval_ids);
    if (eval_ids.empty()) throw Error(ErrorKind::EmptyTestSet, "evaluation fold " + std::to_string(ev.eval_fold) + " is empty");
    if (present.empty()) throw Error(ErrorKind::DegenerateData, "no training rows for evaluation fold " + std::to_string(ev.eval_fold));
    train_folds.push_back(std::move(present));
  }

  LayoutResult result;
  if (model == ModelKind::topsearch_ridge) {
    RidgeCrossValidator<double> cv(feature_matrix(data.signatures, rows.signature_rows, feature_dimension),
                                   rows.targets, layout.fold_of_row);
    for (std::size_t e = 0; e < layout.evaluations.size(); ++e) {
      const int held = layout.evaluations[e].eval_fold;
      RidgeModel<double> fitted;
      if (train_folds[e].size() >= 2) {
        fitted = cv.tune(train_folds[e], std::span<const double>(config.lambda_grid)).model;
      } else if (config.lambda_grid.size() == 1) {
        fitted = cv.fit(train_folds[e], config.lambda_grid.front());
      } else {
        throw Error(ErrorKind::InvalidArgument, "lambda tuning needs at least two training folds");
      }
      result.predictions.push_back(cv.predict(fitted, held));
      result.eval_rows.push_back(fold_rows(held));
      result.lambdas.push_back(fitted.lambda);
      if (e + 1 == layout.evaluations.size()) result.last_model_artifact = serialize_model(fitted);
    }
    return result;
  }

  for (std::size_t e = 0; e < layout.evaluations.size(); ++e) {
    const auto& eval_rows = fold_rows(layout.evaluations[e].eval_fold);
    std::vector<std::size_t> train_rows;
    for (int f : train_folds[e]) train_rows.insert(train_rows.end(), fold_rows(f).begin(), fold_rows(f).end());
    std::sort(train_rows.begin(), train_rows.end());
    Vector<double> pred(static_cast<Eigen::Index>(eval_rows.size()));
    if (model == ModelKind::idw) {
      std::vector<IdwSite> sites;
      sites.reserve(train_rows.size());
      for (std::size_t i : train_rows) {
        sites.push_back({rows.zip_ids[i], rows.locations[i], rows.targets[static_cast<Eigen::Index>(i)]});
      }
      IdwModel idw(std::move(sites), config.idw);
      for (std::size_t k = 0; k < eval_rows.size(); ++k) pred[static_cast<Eigen::Index>(k)] = idw.predict(rows.locations[eval_rows[k]]);
      if (e + 1 == layout.evaluations.size()) result.last_model_artifact = serialize_model(idw);
    } else {
      LabelTable train;
      train.variable = rows.variable;
      for (std::size_t i : train_rows) train.values.emplace(rows.zip_ids[i], rows.targets[static_cast<Eigen::Index>(i)]);
      const MedianModel median = median_fit(train, data.hierarchy);
      for (std::size_t k = 0; k < eval_rows.size(); ++k) pred[static_cast<Eigen::Index>(k)] = median.predict(rows.zip_ids[eval_rows[k]]);
      if (e + 1 == layout.evaluations.size()) result.last_model_artifact = serialize_model(median);
    }
    result.predictions.push_back(std::move(pred));
    result.eval_rows.push_back(eval_rows);
    result.lambdas.push_back(std::nullopt);
  }
  return result;
}

namespace {

struct Job {
  std::string variable;
  ModelKind model;
};

std::vector<Job> make_jobs(const std::vector<std::string>& variables, const std::vector<ModelKind>& models) {
  std::vector<Job> jobs;
  for (const auto& v : variables) {
    for (ModelKind m : models) jobs.push_back({v, m});
  }
  return jobs;
}

double fold_r2(const VariableData& rows, const LayoutResult& result, std::size_t e) {
  return r_squared(take(rows.targets, result.eval_rows[e]), result.predictions[e]);
}

void append_predictions(std::vector<PredictionRow>& out, const VariableData& rows, const LayoutResult& result,
                        std::size_t e, int assignment) {
  for (std::size_t k = 0; k < result.eval_rows[e].size(); ++k) {
    const std::size_t i = result.eval_rows[e][k];
    out.push_back({rows.zip_ids[i], rows.targets[static_cast<Eigen::Index>(i)],
                   result.predictions[e][static_cast<Eigen::Index>(k)], assignment});
  }
}

void check_split_blocking(const SplitSpec& split, const RegionHierarchy& hierarchy) {
  try {
    check_county_coherence(split, hierarchy);
  } catch (const Error& e) {
    throw Error(ErrorKind::Leakage, std::string("split is not county-blocked: ") + e.what(), std::nullopt, e.key());
  }
}

}  // namespace

std::vector<TaskRun> run_imputation(const Dataset& data, const TaskConfig& config, const SplitSpec& split) {
  if (split.k_folds < 2) throw Error(ErrorKind::InvalidArgument, "imputation needs at least two CV folds");
  check_split_blocking(split, data.hierarchy);
  const auto variables = resolve_variables(data, config);
  const auto models = resolve_models(config);
  const auto eligible = eligible_set(data, config.population_filter);
  const auto jobs = make_jobs(variables, models);
  std::vector<TaskRun> runs(jobs.size());

  parallel_for(jobs.size(), config.jobs, [&](std::size_t j) {
    const auto start = std::chrono::steady_clock::now();
    const Job& job = jobs[j];
    VariableData all = gather_variable(data, job.variable, eligible ? &*eligible : nullptr);
    // keep only zips covered by the split
    VariableData rows;
    rows.variable = all.variable;
    std::vector<double> y;
    FoldLayout layout;
    for (std::size_t i = 0; i < all.zip_ids.size(); ++i) {
      auto it = split.fold_of.find(all.zip_ids[i]);
      if (it == split.fold_of.end()) continue;
      rows.zip_ids.push_back(all.zip_ids[i]);
      rows.signature_rows.push_back(all.signature_rows[i]);
      rows.locations.push_back(all.locations[i]);
      y.push_back(all.targets[static_cast<Eigen::Index>(i)]);
      layout.fold_of_row.push_back(it->second == kTestFold ? split.k_folds : it->second);
    }
    rows.targets = Eigen::Map<const Vector<double>>(y.data(), static_cast<Eigen::Index>(y.size()));
    std::vector<int> all_train(static_cast<std::size_t>(split.k_folds));
    std::iota(all_train.begin(), all_train.end(), 0);
    for (int f = 0; f < split.k_folds; ++f) {
      FoldLayout::Evaluation ev{f, {}};
      for (int g = 0; g < split.k_folds; ++g) {
        if (g != f) ev.train_folds.push_back(g);
      }
      layout.evaluations.push_back(std::move(ev));
    }
    layout.evaluations.push_back({split.k_folds, all_train});

    const LayoutResult result = evaluate_layout(data, rows, layout, job.model, config);
    TaskRun run;
    EvalReport& r = run.report;
    r.task = Task::imputation;
    r.variable = job.variable;
    r.model = std::string(to_string(job.model));
    r.filter = config.population_filter;
    r.seed = split.seed;
    r.lambda = result.lambdas.back();
    for (int f = 0; f < split.k_folds; ++f) {
      r.per_fold_r2.push_back(fold_r2(rows, result, static_cast<std::size_t>(f)));
      append_predictions(run.predictions, rows, result, static_cast<std::size_t>(f), f);
    }
    r.test_r2 = fold_r2(rows, result, static_cast<std::size_t>(split.k_folds));
    append_predictions(run.predictions, rows, result, static_cast<std::size_t>(split.k_folds), kTestFold);
    r.n_test = result.eval_rows.back().size();
    r.n_train = rows.zip_ids.size() - r.n_test;
    run.model_artifact = result.last_model_artifact;
    if (config.record_runtime) r.runtime_s = seconds_since(start);
    runs[j] = std::move(run);
  });
  return runs;
}

std::vector<TaskRun> run_extrapolation_states(const Dataset& data, const TaskConfig& config) {
  const SplitSpec split = state_grouped_folds(data.hierarchy, config.seed, config.state_folds);
  const auto variables = resolve_variables(data, config);
  const auto models = resolve_models(config);
  const auto eligible = eligible_set(data, config.population_filter);
  const auto jobs = make_jobs(variables, models);
  std::vector<TaskRun> runs(jobs.size());

  parallel_for(jobs.size(), config.jobs, [&](std::size_t j) {
    const auto start = std::chrono::steady_clock::now();
    const Job& job = jobs[j];
    const VariableData rows = gather_variable(data, job.variable, eligible ? &*eligible : nullptr);
    FoldLayout layout;
    for (const auto& zip : rows.zip_ids) layout.fold_of_row.push_back(split.fold_of.at(zip));
    for (int g = 0; g < split.k_folds; ++g) {
      FoldLayout::Evaluation ev{g, {}};
      for (int h = 0; h < split.k_folds; ++h) {
        if (h != g) ev.train_folds.push_back(h);
      }
      layout.evaluations.push_back(std::move(ev));
    }
    const LayoutResult result = evaluate_layout(data, rows, layout, job.model, config);
    TaskRun run;
    EvalReport& r = run.report;
    r.task = Task::extrapolation_states;
    r.variable = job.variable;
    r.model = std::string(to_string(job.model));
    r.filter = config.population_filter;
    r.seed = config.seed;
    for (int g = 0; g < split.k_folds; ++g) {
      r.per_fold_r2.push_back(fold_r2(rows, result, static_cast<std::size_t>(g)));
      append_predictions(run.predictions, rows, result, static_cast<std::size_t>(g), g);
    }
    r.test_r2 = mean_of(r.per_fold_r2);
    r.n_train = rows.zip_ids.size();
    r.n_test = rows.zip_ids.size();
    if (config.record_runtime) r.runtime_s = seconds_since(start);
    runs[j] = std::move(run);
  });
  return runs;
}

std::vector<TaskRun> run_extrapolation_pair(const Dataset& data, const TaskConfig& config) {
  if (config.source_states.empty()) throw Error(ErrorKind::InvalidArgument, "no source states");
  const std::set<std::string> sources(config.source_states.begin(), config.source_states.end());
  for (const auto& s : sources) {
    if (!data.hierarchy.has_state(s)) throw Error(ErrorKind::UnknownState, "state " + s, std::nullopt, s);
  }
  const auto variables = resolve_variables(data, config);
  const auto models = resolve_models(config);
  const auto eligible = eligible_set(data, config.population_filter);
  const auto jobs = make_jobs(variables, models);
  std::vector<TaskRun> runs(jobs.size());

  parallel_for(jobs.size(), config.jobs, [&](std::size_t j) {
    const auto start = std::chrono::steady_clock::now();
    const Job& job = jobs[j];
    const VariableData rows = gather_variable(data, job.variable, eligible ? &*eligible : nullptr);
    std::vector<std::string> source_counties;
    std::size_t n_eval = 0;
    for (const auto& zip : rows.zip_ids) {
      const ZipRecord& z = data.hierarchy.zip(zip);
      if (sources.contains(z.state_fips)) source_counties.push_back(z.county_fips);
      else ++n_eval;
    }
    if (n_eval == 0) throw Error(ErrorKind::EmptyTestSet, "source states cover every evaluable zip");
    if (source_counties.empty()) throw Error(ErrorKind::DegenerateData, "no labeled zips in the source states");
    const SplitSpec tuning = county_folds(data.hierarchy, source_counties, config.seed, config.k_folds);
    FoldLayout layout;
    for (const auto& zip : rows.zip_ids) {
      const ZipRecord& z = data.hierarchy.zip(zip);
      layout.fold_of_row.push_back(sources.contains(z.state_fips) ? tuning.fold_of.at(zip) : config.k_folds);
    }
    std::vector<int> train(static_cast<std::size_t>(config.k_folds));
    std::iota(train.begin(), train.end(), 0);
    layout.evaluations.push_back({config.k_folds, train});
    const LayoutResult result = evaluate_layout(data, rows, layout, job.model, config);

    TaskRun run;
    EvalReport& r = run.report;
    r.task = Task::extrapolation_pair;
    r.variable = job.variable;
    r.model = std::string(to_string(job.model));
    r.filter = config.population_filter;
    r.seed = config.seed;
    r.lambda = result.lambdas.front();
    const double r2 = fold_r2(rows, result, 0);
    r.per_fold_r2 = {r2};
    r.test_r2 = r2;
    r.n_test = n_eval;
    r.n_train = rows.zip_ids.size() - n_eval;
    append_predictions(run.predictions, rows, result, 0, kTestFold);
    run.model_artifact = result.last_model_artifact;
    if (config.record_runtime) r.runtime_s = seconds_since(start);
    runs[j] = std::move(run);
  });
  return runs;
}

std::vector<TaskRun> run_superres(const Dataset& data, const TaskConfig& config) {
  const auto variables = resolve_variables(data, config);
  const SignatureTable county_sigs = aggregate_to_county(data.signatures, data.hierarchy);
  std::vector<std::vector<TaskRun>> per_var(variables.size());

  parallel_for(variables.size(), config.jobs, [&](std::size_t v) {
    const auto start = std::chrono::steady_clock::now();
    const std::string& variable = variables[v];
    auto cl = data.county_labels.find(variable);
    if (cl == data.county_labels.end()) throw Error(ErrorKind::NoLabels, "no county-level labels for " + variable);

    // Training rows: counties with a label and an aggregated signature.
    std::vector<std::string> counties;
    std::vector<std::size_t> county_rows;
    std::vector<double> y;
    for (const auto& [county, value] : cl->second.values) {
      auto row = county_sigs.index_of(county);
      if (!row) continue;
      counties.push_back(county);
      county_rows.push_back(*row);
      y.push_back(value);
    }
    if (counties.size() < 2) throw Error(ErrorKind::DegenerateData, "fewer than two labeled counties for " + variable);
    Vector<double> targets = Eigen::Map<const Vector<double>>(y.data(), static_cast<Eigen::Index>(y.size()));
    if (!((targets.array() - targets.mean()).square().sum() > 0.0)) {
      throw Error(ErrorKind::ZeroVariance, "county labels for " + variable + " are constant");
    }
    std::vector<std::string> shuffled = counties;
    Rng rng(config.seed);
    shuffle(shuffled, rng);
    std::map<std::string, int> fold_of_county;
    const int k = std::min<int>(config.k_folds, static_cast<int>(counties.size()));
    for (std::size_t i = 0; i < shuffled.size(); ++i) fold_of_county[shuffled[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    std::vector<int> fold_ids;
    for (const auto& c : counties) fold_ids.push_back(fold_of_county.at(c));

    RidgeCrossValidator<double> cv(feature_matrix(county_sigs, county_rows, -1), targets, fold_ids);
    std::vector<int> folds(static_cast<std::size_t>(k));
    std::iota(folds.begin(), folds.end(), 0);
    const RidgeModel<double> model = (k >= 2 && config.lambda_grid.size() > 1)
                                         ? cv.tune(folds, std::span<const double>(config.lambda_grid)).model
                                         : cv.fit(folds, config.lambda_grid.front());

    // Evaluation rows: every zip with a ground-truth label and a signature.
    const VariableData zips = gather_variable(data, variable);
    // Training rows are counties and evaluation rows are zips; ids are
    // qualified by level because the two code spaces overlap.
    std::vector<std::string> train_ids, eval_ids;
    for (const auto& c : counties) train_ids.push_back("county:" + c);
    for (const auto& z : zips.zip_ids) eval_ids.push_back("zip:" + z);
    check_no_leakage(train_ids, eval_ids);
    const Vector<double> pred = model.predict(feature_matrix(data.signatures, zips.signature_rows, -1));

    std::vector<TaskRun> out;
    for (int pass = 0; pass < 2; ++pass) {
      TaskRun run;
      std::vector<Eigen::Index> keep;
      for (std::size_t i = 0; i < zips.zip_ids.size(); ++i) {
        if (pass == 1 && !(data.hierarchy.zip(zips.zip_ids[i]).population > config.superres_population_threshold)) continue;
        keep.push_back(static_cast<Eigen::Index>(i));
        run.predictions.push_back({zips.zip_ids[i], zips.targets[static_cast<Eigen::Index>(i)],
                                   pred[static_cast<Eigen::Index>(i)], kTestFold});
      }
      EvalReport& r = run.report;
      r.task = Task::superres;
      r.variable = variable;
      r.model = std::string(to_string(ModelKind::topsearch_ridge));
      if (pass == 1) r.filter = config.superres_population_threshold;
      r.seed = config.seed;
      r.lambda = model.lambda;
      const double r2 = r_squared(zips.targets(keep), pred(keep));
      r.per_fold_r2 = {r2};
      r.test_r2 = r2;
      r.n_train = counties.size();
      r.n_test = keep.size();
      run.model_artifact = serialize_model(model);
      if (config.record_runtime) r.runtime_s = seconds_since(start);
      out.push_back(std::move(run));
    }
    per_var[v] = std::move(out);
  });
  std::vector<TaskRun> runs;
  for (auto& v : per_var) {
    for (auto& r : v) runs.push_back(std::move(r));
  }
  return runs;
}

std::vector<EvalReport> run_ablation(const Dataset& data, const TaskConfig& config, const SplitSpec& split) {
  check_split_blocking(split, data.hierarchy);
  const auto variables = resolve_variables(data, config);
  const auto eligible = eligible_set(data, config.population_filter);
  std::vector<int> dims = config.feature_dims;
  const auto full_dim = static_cast<int>(data.signatures.dimension());
  if (dims.empty()) {
    for (double frac : {0.1, 0.25, 0.5, 1.0}) dims.push_back(std::max(1, static_cast<int>(std::lround(frac * full_dim))));
  }
  for (int d : dims) {
    if (d < 1 || d > full_dim) throw Error(ErrorKind::BadDimension, "ablation dimension " + std::to_string(d));
  }
  for (double f : config.train_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorKind::InvalidArgument, "training fraction must lie in (0, 1]");
  }
  if (config.ablation_seeds < 1) throw Error(ErrorKind::InvalidArgument, "ablation_seeds must be >= 1");

  std::vector<std::vector<EvalReport>> per_var(variables.size());
  parallel_for(variables.size(), config.jobs, [&](std::size_t v) {
    const auto start = std::chrono::steady_clock::now();
    const VariableData all = gather_variable(data, variables[v], eligible ? &*eligible : nullptr);
    VariableData rows;
    rows.variable = all.variable;
    std::vector<double> y;
    std::vector<int> base_folds;
    for (std::size_t i = 0; i < all.zip_ids.size(); ++i) {
      auto it = split.fold_of.find(all.zip_ids[i]);
      if (it == split.fold_of.end()) continue;
      rows.zip_ids.push_back(all.zip_ids[i]);
      rows.signature_rows.push_back(all.signature_rows[i]);
      rows.locations.push_back(all.locations[i]);
      y.push_back(all.targets[static_cast<Eigen::Index>(i)]);
      base_folds.push_back(it->second == kTestFold ? split.k_folds : it->second);
    }
    rows.targets = Eigen::Map<const Vector<double>>(y.data(), static_cast<Eigen::Index>(y.size()));
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < base_folds.size(); ++i) {
      if (base_folds[i] != split.k_folds) train_rows.push_back(i);
    }
    std::vector<int> all_train(static_cast<std::size_t>(split.k_folds));
    std::iota(all_train.begin(), all_train.end(), 0);

    auto test_r2 = [&](const std::vector<int>& folds, int dimension, std::optional<double>* lambda) {
      FoldLayout layout{folds, {{split.k_folds, all_train}}};
      const LayoutResult result = evaluate_layout(data, rows, layout, ModelKind::topsearch_ridge, config, dimension);
      if (lambda) *lambda = result.lambdas.front();
      return fold_r2(rows, result, 0);
    };
    auto base_report = [&](std::string axis, double value) {
      EvalReport r;
      r.task = Task::ablation;
      r.variable = variables[v];
      r.model = std::string(to_string(ModelKind::topsearch_ridge));
      r.filter = config.population_filter;
      r.seed = split.seed;
      r.axis = std::move(axis);
      r.axis_value = value;
      return r;
    };

    std::vector<EvalReport> out;
    for (double fraction : config.train_fractions) {
      EvalReport r = base_report("train_fraction", fraction);
      const auto n_keep = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train_rows.size()))));
      for (int s = 0; s < config.ablation_seeds; ++s) {
        std::vector<int> folds = base_folds;
        if (n_keep < train_rows.size()) {
          std::vector<std::size_t> order = train_rows;
          Rng rng(split.seed, 1000 + static_cast<std::uint64_t>(s));
          shuffle(order, rng);
          for (std::size_t k = n_keep; k < order.size(); ++k) folds[order[k]] = -1;
        }
        std::optional<double> lambda;
        r.per_fold_r2.push_back(test_r2(folds, -1, &lambda));
        if (s == 0) r.lambda = lambda;
      }
      r.test_r2 = mean_of(r.per_fold_r2);
      r.n_train = std::min(n_keep, train_rows.size());
      r.n_test = rows.zip_ids.size() - train_rows.size();
      out.push_back(std::move(r));
    }
    for (int d : dims) {
      EvalReport r = base_report("feature_dimension", static_cast<double>(d));
      std::optional<double> lambda;
      r.per_fold_r2.push_back(test_r2(base_folds, d, &lambda));
      r.lambda = lambda;
      r.test_r2 = r.per_fold_r2.front();
      r.n_train = train_rows.size();
      r.n_test = rows.zip_ids.size() - train_rows.size();
      out.push_back(std::move(r));
    }
    if (config.record_runtime) {
      const double t = seconds_since(start);
      for (auto& r : out) r.runtime_s = t;
    }
    per_var[v] = std::move(out);
  });
  std::vector<EvalReport> reports;
  for (auto& v : per_var) {
    for (auto& r : v) reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<TaskSummary> summarize(std::span<const EvalReport> reports, std::span<const std::string> exclude) {
  using Key = std::tuple<Task, std::string, std::optional<std::int64_t>>;
  std::map<Key, std::vector<std::pair<std::string, double>>> groups;
  for (const auto& r : reports) {
    if (r.axis || !r.test_r2) continue;
    groups[{r.task, r.model, r.filter}].emplace_back(r.variable, *r.test_r2);
  }
  const std::set<std::string> excluded(exclude.begin(), exclude.end());
  std::vector<TaskSummary> out;
  for (auto& [key, values] : groups) {
    TaskSummary s;
    std::tie(s.task, s.model, s.filter) = key;
    std::sort(values.begin(), values.end());
    s.per_variable = values;
    std::vector<double> all;
    std::vector<double> kept;
    for (const auto& [var, r2] : values) {
      all.push_back(r2);
      if (excluded.contains(var)) s.excluded.push_back(var);
      else kept.push_back(r2);
    }
    s.mean = mean_of(all);
    if (!s.excluded.empty() && !kept.empty()) s.mean_excluding = mean_of(kept);
    s.min = *std::min_element(all.begin(), all.end());
    s.max = *std::max_element(all.begin(), all.end());
    s.median = median_inplace(std::span<double>(all));
    out.push_back(std::move(s));
  }
  return out;
}

std::string serialize_summary(std::span<const TaskSummary> summaries) {
  JsonWriter w;
  w.begin_array();
  for (const auto& s : summaries) {
    w.begin_object();
    w.field("task", to_string(s.task));
    w.field("model", s.model);
    w.optional_field("filter", s.filter);
    w.begin_array("variables");
    for (const auto& [var, r2] : s.per_variable) {
      w.begin_object();
      w.field("variable", var);
      w.field("test_r2", r2);
      w.end_object();
    }
    w.end_array();
    w.field("mean", s.mean);
    w.field("excluded", std::span<const std::string>(s.excluded));
    w.optional_field("mean_excluding", s.mean_excluding);
    w.field("min", s.min);
    w.field("median", s.median);
    w.field("max", s.max);
    w.end_object();
  }
  w.end_array();
  return w.str();
}

std::string task_label(const EvalReport& report) {
  std::string label(to_string(report.task));
  if (report.filter) label += "-pop" + std::to_string(*report.filter);
  return label;
}

void write_task_outputs(std::span<const TaskRun> runs, const std::filesystem::path& out_dir) {
  for (const auto& run : runs) {
    const std::string base = task_label(run.report) + "_" + run.report.variable + "_" + run.report.model;
    write_report(run.report, out_dir / ("report_" + base + ".json"));
    if (!run.predictions.empty()) {
      std::vector<double> actual;
      std::vector<double> predicted;
      std::vector<std::string> ids;
      std::map<std::string, double> choropleth;
      for (const auto& p : run.predictions) {
        actual.push_back(p.actual);
        predicted.push_back(p.predicted);
        ids.push_back(p.region_id);
        choropleth[p.region_id] = p.predicted;
      }
      export_scatter(actual, predicted, ids, out_dir / ("scatter_" + base + ".csv"));
      export_choropleth(choropleth, out_dir / ("choropleth_" + base + ".csv"));
    }
    if (run.model_artifact) write_text_atomic(out_dir / ("model_" + base + ".json"), *run.model_artifact);
  }
}

}  // namespace searchsig
