#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "searchsig/eval.hpp"
#include "searchsig/models.hpp"
#include "searchsig/signature.hpp"
#include "searchsig/spatial.hpp"
#include "searchsig/tables.hpp"

namespace searchsig {

enum class ModelKind { topsearch_ridge, idw, hier_median };
std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view text);

/// Everything an experiment reads. Signatures are zip-level and already
/// sparsity-filtered and median-filled.
struct Dataset {
  RegionHierarchy hierarchy;
  SignatureTable signatures;
  std::map<std::string, LabelTable> zip_labels;
  std::map<std::string, LabelTable> county_labels;
};

struct TaskConfig {
  std::vector<std::string> variables;  // empty: every zip-level variable
  std::vector<ModelKind> models = {ModelKind::topsearch_ridge, ModelKind::idw, ModelKind::hier_median};
  std::uint64_t seed = 0;
  double holdout_frac = 0.2;
  int k_folds = 5;       // county-blocked CV folds
  int state_folds = 10;  // state-grouped extrapolation folds
  std::optional<std::int64_t> population_filter;
  std::int64_t superres_population_threshold = 3000;
  std::vector<double> lambda_grid = default_lambda_grid();
  IdwParams idw;
  std::vector<double> train_fractions = {0.1, 0.25, 0.5, 1.0};
  std::vector<int> feature_dims;  // empty: 10/25/50/100 % of the signature dimension
  int ablation_seeds = 3;
  std::vector<std::string> source_states = {"48", "12"};  // Texas, Florida
  std::vector<std::string> exclude_from_mean;
  int jobs = 1;
  bool record_runtime = false;
};

struct PredictionRow {
  std::string region_id;
  double actual = 0.0;
  double predicted = 0.0;
  int assignment = 0;  // fold, or kTestFold
};

struct TaskRun {
  EvalReport report;
  std::vector<PredictionRow> predictions;
  std::optional<std::string> model_artifact;  // serialized final model
};

/// Row partition plus the (evaluation fold, training folds) pairs to run.
/// Ridge tunes lambda by leave-one-fold-out over each pair's training folds.
struct FoldLayout {
  struct Evaluation {
    int eval_fold = 0;
    std::vector<int> train_folds;
  };
  std::vector<int> fold_of_row;  // negative rows are unused
  std::vector<Evaluation> evaluations;
};

/// Rows (zips) available to one variable: labeled, with a usable signature
/// and passing the eligibility set when one is given.
struct VariableData {
  std::string variable;
  std::vector<std::string> zip_ids;
  std::vector<std::size_t> signature_rows;
  Vector<double> targets;
  std::vector<LatLon> locations;
};

VariableData gather_variable(const Dataset& data, const std::string& variable,
                             const std::set<std::string>* eligible = nullptr);

struct LayoutResult {
  std::vector<Vector<double>> predictions;  // per evaluation, rows in fold order
  std::vector<std::vector<std::size_t>> eval_rows;
  std::vector<std::optional<double>> lambdas;
  std::optional<std::string> last_model_artifact;
};

/// Fits and predicts every evaluation of `layout`. Throws Leakage if any
/// evaluation trains on its own evaluation rows.
LayoutResult evaluate_layout(const Dataset& data, const VariableData& rows, const FoldLayout& layout,
                             ModelKind model, const TaskConfig& config, int feature_dimension = -1);

/// Throws Leakage when the two sets intersect.
void check_no_leakage(std::span<const std::string> train_ids, std::span<const std::string> eval_ids);

std::vector<TaskRun> run_imputation(const Dataset& data, const TaskConfig& config, const SplitSpec& split);
std::vector<TaskRun> run_extrapolation_states(const Dataset& data, const TaskConfig& config);
std::vector<TaskRun> run_extrapolation_pair(const Dataset& data, const TaskConfig& config);
std::vector<TaskRun> run_superres(const Dataset& data, const TaskConfig& config);
std::vector<EvalReport> run_ablation(const Dataset& data, const TaskConfig& config, const SplitSpec& split);

/// Cross-variable aggregate for one (task, model, filter).
struct TaskSummary {
  Task task = Task::imputation;
  std::string model;
  std::optional<std::int64_t> filter;
  std::vector<std::pair<std::string, double>> per_variable;  // test R2
  std::vector<std::string> excluded;
  double mean = 0.0;
  std::optional<double> mean_excluding;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

std::vector<TaskSummary> summarize(std::span<const EvalReport> reports, std::span<const std::string> exclude = {});
std::string serialize_summary(std::span<const TaskSummary> summaries);

/// Writes report/scatter/choropleth/model files named
/// `<kind>_<task>_<variable>_<model>` into `out_dir`.
void write_task_outputs(std::span<const TaskRun> runs, const std::filesystem::path& out_dir);

std::string task_label(const EvalReport& report);

}  // namespace searchsig
