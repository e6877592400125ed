#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "searchsig/error.hpp"
#include "searchsig/numeric.hpp"

namespace searchsig {

/// Coefficient of determination, 1 - SS_res / SS_tot, with SS_tot taken
/// around the mean of the evaluated actuals. Unbounded below.
template <typename DerivedA, typename DerivedP>
typename DerivedA::Scalar r_squared(const Eigen::MatrixBase<DerivedA>& actual,
                                    const Eigen::MatrixBase<DerivedP>& predicted) {
  using Scalar = typename DerivedA::Scalar;
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(actual.size()) + " actual vs " + std::to_string(predicted.size()) + " predicted");
  }
  if (actual.size() < 2) throw Error(ErrorKind::LengthMismatch, "need at least two evaluation points");
  const Scalar mean = actual.mean();
  const Scalar ss_tot = (actual.array() - mean).square().sum();
  if (!(ss_tot > Scalar(0))) throw Error(ErrorKind::ZeroVariance, "actual values have zero variance");
  const Scalar ss_res = (actual - predicted).squaredNorm();
  return Scalar(1) - ss_res / ss_tot;
}

double r_squared(std::span<const double> actual, std::span<const double> predicted);

enum class Task { imputation, extrapolation_states, extrapolation_pair, superres, ablation };
std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view text);

/// One (task, variable, model) result.
struct EvalReport {
  Task task = Task::imputation;
  std::string variable;
  std::string model;
  std::optional<std::int64_t> filter;  // population threshold
  std::uint64_t seed = 0;
  std::optional<double> lambda;
  std::vector<double> per_fold_r2;
  std::optional<double> test_r2;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<double> runtime_s;  // omitted (null) unless timings are requested
  // Ablation sweeps only: which axis and grid point produced this report.
  std::optional<std::string> axis;
  std::optional<double> axis_value;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// `region_id,actual,predicted`, rows sorted by region_id.
void export_scatter(std::span<const double> actual, std::span<const double> predicted,
                    std::span<const std::string> region_ids, const std::filesystem::path& path);

/// `region_id,value`, sorted by region_id.
void export_choropleth(const std::map<std::string, double>& values, const std::filesystem::path& path);

}  // namespace searchsig
