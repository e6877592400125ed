#include "searchsig/eval.hpp"

#include <algorithm>
#include <numeric>

#include "searchsig/text.hpp"

namespace searchsig {

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  const Eigen::Map<const Vector<double>> a(actual.data(), static_cast<Eigen::Index>(actual.size()));
  const Eigen::Map<const Vector<double>> p(predicted.data(), static_cast<Eigen::Index>(predicted.size()));
  return r_squared(a, p);
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::imputation: return "imputation";
    case Task::extrapolation_states: return "extrapolation_states";
    case Task::extrapolation_pair: return "extrapolation_pair";
    case Task::superres: return "superres";
    case Task::ablation: return "ablation";
  }
  return "imputation";
}

std::optional<Task> parse_task(std::string_view text) {
  for (Task t : {Task::imputation, Task::extrapolation_states, Task::extrapolation_pair, Task::superres,
                 Task::ablation}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

void export_scatter(std::span<const double> actual, std::span<const double> predicted,
                    std::span<const std::string> region_ids, const std::filesystem::path& path) {
  if (actual.size() != predicted.size() || actual.size() != region_ids.size()) {
    throw Error(ErrorKind::LengthMismatch, "scatter columns differ in length");
  }
  if (actual.empty()) throw Error(ErrorKind::EmptyInput, "empty scatter table");
  std::vector<std::size_t> order(actual.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return region_ids[a] < region_ids[b]; });
  std::string out = "region_id,actual,predicted\n";
  for (std::size_t i : order) {
    out += region_ids[i] + "," + format_real(actual[i]) + "," + format_real(predicted[i]) + "\n";
  }
  write_text_atomic(path, out);
}

void export_choropleth(const std::map<std::string, double>& values, const std::filesystem::path& path) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "empty choropleth table");
  std::string out = "region_id,value\n";
  for (const auto& [region, value] : values) out += region + "," + format_real(value) + "\n";
  write_text_atomic(path, out);
}

}  // namespace searchsig
