#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "searchsig/error.hpp"
#include "searchsig/eval.hpp"
#include "searchsig/numeric.hpp"

namespace searchsig {

/// Ridge regression on z-scored features with an unpenalized intercept.
template <typename Scalar>
struct RidgeModel {
  Vector<Scalar> weights;  // on standardized features
  Scalar intercept = 0;    // training mean of y
  Scalar lambda = 0;
  Vector<Scalar> feature_means;
  Vector<Scalar> feature_scales;  // zero-variance columns carry scale 1, weight 0

  /// Coefficients on raw features.
  Vector<Scalar> raw_coefficients() const { return weights.cwiseQuotient(feature_scales); }
  Scalar raw_offset() const { return intercept - feature_means.dot(raw_coefficients()); }

  template <typename Derived>
  Vector<Scalar> predict(const Eigen::MatrixBase<Derived>& features) const {
    if (features.cols() != weights.size()) {
      throw Error(ErrorKind::BadDimension, "model has " + std::to_string(weights.size()) + " features, input has " +
                                               std::to_string(features.cols()));
    }
    return ((features * raw_coefficients()).array() + raw_offset()).matrix();
  }
};

/// Sufficient statistics of a row set, taken about a fixed reference point
/// so that moments of disjoint row sets add and centering stays accurate.
template <typename Scalar>
struct RidgeMoments {
  Eigen::Index n = 0;
  Vector<Scalar> x_shift;
  Scalar y_shift = 0;
  Vector<Scalar> sum_x;
  Matrix<Scalar> gram;
  Vector<Scalar> sum_xy;
  Scalar sum_y = 0;

  static RidgeMoments zeros(const Vector<Scalar>& x_shift, Scalar y_shift) {
    const Eigen::Index d = x_shift.size();
    RidgeMoments m;
    m.x_shift = x_shift;
    m.y_shift = y_shift;
    m.sum_x = Vector<Scalar>::Zero(d);
    m.gram = Matrix<Scalar>::Zero(d, d);
    m.sum_xy = Vector<Scalar>::Zero(d);
    return m;
  }

  template <typename DerivedX, typename DerivedY>
  static RidgeMoments of(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                         const Vector<Scalar>& x_shift, Scalar y_shift) {
    RidgeMoments m = zeros(x_shift, y_shift);
    m.n = x.rows();
    if (m.n == 0) return m;
    const Matrix<Scalar> xc = x.rowwise() - x_shift.transpose();
    const Vector<Scalar> yc = y.array() - y_shift;
    m.sum_x = xc.colwise().sum().transpose();
    m.gram.template selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    m.sum_xy = xc.transpose() * yc;
    m.sum_y = yc.sum();
    return m;
  }

  RidgeMoments& operator+=(const RidgeMoments& other) {
    n += other.n;
    sum_x += other.sum_x;
    gram += other.gram;  // lower triangle is authoritative
    sum_xy += other.sum_xy;
    sum_y += other.sum_y;
    return *this;
  }
};

/// Standardized normal equations A w = b of a moment set. `model` carries
/// the training means, scales and intercept with zero weights; only
/// columns in `active` (nonzero variance) enter the system.
template <typename Scalar>
struct RidgeSystem {
  RidgeModel<Scalar> model;
  std::vector<Eigen::Index> active;
  Matrix<Scalar> a;  // full symmetric, no penalty
  Vector<Scalar> b;
};

template <typename Scalar>
RidgeSystem<Scalar> ridge_system(const RidgeMoments<Scalar>& m) {
  if (m.n < 2) throw Error(ErrorKind::DegenerateData, "ridge needs at least two rows, got " + std::to_string(m.n));
  const Eigen::Index d = m.sum_x.size();
  const auto n = static_cast<Scalar>(m.n);
  const Vector<Scalar> mu = m.sum_x / n;  // relative to x_shift
  const Scalar y_mu = m.sum_y / n;

  RidgeSystem<Scalar> sys;
  RidgeModel<Scalar>& model = sys.model;
  model.intercept = m.y_shift + y_mu;
  model.feature_means = m.x_shift + mu;
  model.feature_scales = Vector<Scalar>::Ones(d);
  model.weights = Vector<Scalar>::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Scalar var = m.gram(j, j) / n - mu[j] * mu[j];
    const Scalar sd = var > Scalar(0) ? std::sqrt(var) : Scalar(0);
    const Scalar tol = Scalar(1e-10) * std::max(Scalar(1), std::abs(model.feature_means[j]));
    if (sd > tol) {
      model.feature_scales[j] = sd;
      sys.active.push_back(j);
    }
  }
  const auto k = static_cast<Eigen::Index>(sys.active.size());
  sys.a.resize(k, k);
  sys.b.resize(k);
  for (Eigen::Index p = 0; p < k; ++p) {
    const Eigen::Index i = sys.active[static_cast<std::size_t>(p)];
    const Scalar si = model.feature_scales[i];
    sys.b[p] = (m.sum_xy[i] - n * mu[i] * y_mu) / si;
    for (Eigen::Index q = 0; q <= p; ++q) {
      const Eigen::Index j = sys.active[static_cast<std::size_t>(q)];
      const Scalar g = i >= j ? m.gram(i, j) : m.gram(j, i);
      sys.a(p, q) = (g - n * mu[i] * mu[j]) / (si * model.feature_scales[j]);
    }
  }
  sys.a = sys.a.template selfadjointView<Eigen::Lower>();
  return sys;
}

inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
}

template <typename Scalar>
RidgeModel<Scalar> ridge_fit_moments(const RidgeMoments<Scalar>& m, Scalar lambda) {
  check_lambda(static_cast<double>(lambda));
  RidgeSystem<Scalar> sys = ridge_system(m);
  RidgeModel<Scalar> model = std::move(sys.model);
  model.lambda = lambda;
  if (sys.active.empty()) return model;

  Vector<Scalar> w;
  if (lambda > Scalar(0)) {
    sys.a.diagonal().array() += lambda;
    Eigen::LLT<Matrix<Scalar>> llt(sys.a);
    if (llt.info() == Eigen::Success) {
      w = llt.solve(sys.b);
    } else {
      w = sys.a.completeOrthogonalDecomposition().solve(sys.b);
    }
  } else {
    // Unregularized: minimum-norm solution, well defined for collinear
    // features such as signatures that sum to a constant.
    w = sys.a.completeOrthogonalDecomposition().solve(sys.b);
  }
  for (std::size_t p = 0; p < sys.active.size(); ++p) model.weights[sys.active[p]] = w[static_cast<Eigen::Index>(p)];
  if (!model.weights.allFinite()) throw Error(ErrorKind::NonFiniteInput, "ridge solve produced non-finite weights");
  return model;
}

/// Eigendecomposition of one training set's standardized Gram matrix, so
/// that each penalty costs a matrix-vector product instead of a solve.
template <typename Scalar>
class RidgeSpectrum {
 public:
  explicit RidgeSpectrum(const RidgeMoments<Scalar>& m) : sys_(ridge_system(m)) {
    if (sys_.active.empty()) return;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sys_.a);
    values_ = eig.eigenvalues();
    vectors_ = eig.eigenvectors();
    projected_ = vectors_.transpose() * sys_.b;
    sys_.a.resize(0, 0);
    const Scalar top = values_.size() > 0 ? values_.cwiseAbs().maxCoeff() : Scalar(0);
    cutoff_ = top * static_cast<Scalar>(values_.size()) * std::numeric_limits<Scalar>::epsilon();
  }

  /// Same model as ridge_fit_moments up to rounding; lambda = 0 gives the
  /// pseudo-inverse solution.
  RidgeModel<Scalar> fit(Scalar lambda) const {
    check_lambda(static_cast<double>(lambda));
    RidgeModel<Scalar> model = sys_.model;
    model.lambda = lambda;
    if (sys_.active.empty()) return model;
    Vector<Scalar> scaled(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      const Scalar denom = values_[i] + lambda;
      scaled[i] = denom > cutoff_ ? projected_[i] / denom : Scalar(0);
    }
    const Vector<Scalar> w = vectors_ * scaled;
    for (std::size_t p = 0; p < sys_.active.size(); ++p) model.weights[sys_.active[p]] = w[static_cast<Eigen::Index>(p)];
    return model;
  }

 private:
  RidgeSystem<Scalar> sys_;
  Vector<Scalar> values_;
  Matrix<Scalar> vectors_;
  Vector<Scalar> projected_;
  Scalar cutoff_ = 0;
};

/// Fit on (features, targets) with penalty `lambda` on standardized weights.
template <typename DerivedX, typename DerivedY>
RidgeModel<typename DerivedX::Scalar> ridge_fit(const Eigen::MatrixBase<DerivedX>& features,
                                                const Eigen::MatrixBase<DerivedY>& targets,
                                                typename DerivedX::Scalar lambda) {
  using Scalar = typename DerivedX::Scalar;
  if (features.rows() != targets.size()) throw Error(ErrorKind::LengthMismatch, "features and targets differ in length");
  if (features.rows() < 2) throw Error(ErrorKind::DegenerateData, "ridge needs at least two rows");
  if (features.cols() < 1) throw Error(ErrorKind::DegenerateData, "ridge needs at least one feature");
  if (!features.allFinite() || !targets.allFinite()) throw Error(ErrorKind::NonFiniteInput, "non-finite ridge input");
  const Vector<Scalar> shift = features.colwise().mean().transpose();
  const Scalar y_shift = targets.mean();
  return ridge_fit_moments(RidgeMoments<Scalar>::of(features, targets, shift, y_shift), lambda);
}

/// 13 log-spaced penalties, 1e-3 .. 1e3.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.5 * i));
  return grid;
}

template <typename Scalar>
struct RidgeTuneResult {
  Scalar lambda = 0;
  RidgeModel<Scalar> model;
  std::vector<Scalar> mean_r2;  // aligned with the grid
  int folds_used = 0;
};

/// Cross-validated ridge over a fixed row partition. Per-fold moments are
/// computed once; any union of folds is then a sum of moments, and each
/// distinct training set is diagonalized once for the whole lambda grid.
template <typename Scalar>
class RidgeCrossValidator {
 public:
  /// fold_ids[i] >= 0 assigns row i to a fold; negative rows are ignored.
  RidgeCrossValidator(Matrix<Scalar> features, Vector<Scalar> targets, std::vector<int> fold_ids)
      : x_(std::move(features)), y_(std::move(targets)), fold_ids_(std::move(fold_ids)) {
    if (x_.rows() != y_.size() || static_cast<std::size_t>(x_.rows()) != fold_ids_.size()) {
      throw Error(ErrorKind::LengthMismatch, "features, targets and fold ids differ in length");
    }
    if (!x_.allFinite() || !y_.allFinite()) throw Error(ErrorKind::NonFiniteInput, "non-finite ridge input");
    int max_fold = -1;
    for (int f : fold_ids_) max_fold = std::max(max_fold, f);
    rows_.resize(static_cast<std::size_t>(max_fold + 1));
    for (std::size_t i = 0; i < fold_ids_.size(); ++i) {
      if (fold_ids_[i] >= 0) rows_[static_cast<std::size_t>(fold_ids_[i])].push_back(static_cast<Eigen::Index>(i));
    }
    const Vector<Scalar> shift =
        x_.rows() > 0 ? Vector<Scalar>(x_.colwise().mean().transpose()) : Vector<Scalar>::Zero(x_.cols());
    const Scalar y_shift = y_.size() > 0 ? y_.mean() : Scalar(0);
    for (const auto& rows : rows_) {
      moments_.push_back(RidgeMoments<Scalar>::of(x_(rows, Eigen::all), y_(rows), shift, y_shift));
    }
    if (moments_.empty()) moments_.push_back(RidgeMoments<Scalar>::zeros(shift, y_shift));
  }

  int fold_count() const { return static_cast<int>(rows_.size()); }
  const std::vector<Eigen::Index>& rows(int fold) const { return rows_.at(static_cast<std::size_t>(fold)); }
  const Matrix<Scalar>& features() const { return x_; }
  const Vector<Scalar>& targets() const { return y_; }

  RidgeMoments<Scalar> moments(std::span<const int> folds) const {
    RidgeMoments<Scalar> sum = RidgeMoments<Scalar>::zeros(moments_.front().x_shift, moments_.front().y_shift);
    for (int f : folds) sum += moments_.at(static_cast<std::size_t>(f));
    return sum;
  }

  RidgeModel<Scalar> fit(std::span<const int> folds, Scalar lambda) const {
    return ridge_fit_moments(moments(folds), lambda);
  }

  Vector<Scalar> predict(const RidgeModel<Scalar>& model, int fold) const {
    return model.predict(x_(rows(fold), Eigen::all));
  }

  Vector<Scalar> actual(int fold) const { return y_(rows(fold)); }

  /// Leave-one-fold-out over `folds` for every grid value; picks the best
  /// mean validation R2 (ties to the smaller lambda) and refits on all of
  /// `folds`. Folds whose validation set is degenerate are skipped.
  RidgeTuneResult<Scalar> tune(std::span<const int> folds, std::span<const Scalar> grid) const {
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty lambda grid");
    if (folds.size() < 2) throw Error(ErrorKind::InvalidArgument, "tuning needs at least two folds");
    std::vector<Scalar> lambdas(grid.begin(), grid.end());
    std::sort(lambdas.begin(), lambdas.end());
    RidgeTuneResult<Scalar> result;
    result.mean_r2.assign(lambdas.size(), Scalar(0));

    const RidgeMoments<Scalar> all = moments(folds);
    for (int held : folds) {
      const auto& held_rows = rows(held);
      const Vector<Scalar> truth = y_(held_rows);
      if (truth.size() < 2 || !((truth.array() - truth.mean()).square().sum() > Scalar(0))) continue;
      std::vector<int> train_folds;
      Eigen::Index train_n = 0;
      for (int f : folds) {
        if (f == held) continue;
        train_folds.push_back(f);
        train_n += moments_.at(static_cast<std::size_t>(f)).n;
      }
      if (train_n < 2) continue;
      const RidgeSpectrum<Scalar>& spectrum = spectrum_of(train_folds);
      const Matrix<Scalar> x_held = x_(held_rows, Eigen::all);
      for (std::size_t g = 0; g < lambdas.size(); ++g) {
        result.mean_r2[g] += r_squared(truth, spectrum.fit(lambdas[g]).predict(x_held));
      }
      ++result.folds_used;
    }
    if (result.folds_used == 0) throw Error(ErrorKind::AllFoldsDegenerate, "no usable validation fold");
    std::size_t best = 0;
    for (std::size_t g = 0; g < lambdas.size(); ++g) {
      result.mean_r2[g] /= static_cast<Scalar>(result.folds_used);
      if (result.mean_r2[g] > result.mean_r2[best] + Scalar(1e-12)) best = g;
    }
    // Report in the caller's grid order.
    std::vector<Scalar> by_grid(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto pos = std::lower_bound(lambdas.begin(), lambdas.end(), grid[i]) - lambdas.begin();
      by_grid[i] = result.mean_r2[static_cast<std::size_t>(pos)];
    }
    result.lambda = lambdas[best];
    result.model = ridge_fit_moments(all, result.lambda);
    result.mean_r2 = std::move(by_grid);
    return result;
  }

 private:
  // Spectra are cached by training fold set: nested tuning over K folds
  // revisits each set from several evaluations. Not thread-safe; use one
  // validator per thread.
  const RidgeSpectrum<Scalar>& spectrum_of(std::vector<int> train_folds) const {
    std::sort(train_folds.begin(), train_folds.end());
    auto it = spectra_.find(train_folds);
    if (it == spectra_.end()) it = spectra_.emplace(train_folds, RidgeSpectrum<Scalar>(moments(train_folds))).first;
    return it->second;
  }

  Matrix<Scalar> x_;
  Vector<Scalar> y_;
  std::vector<int> fold_ids_;
  std::vector<std::vector<Eigen::Index>> rows_;
  std::vector<RidgeMoments<Scalar>> moments_;
  mutable std::map<std::vector<int>, RidgeSpectrum<Scalar>> spectra_;
};

/// Tune over every fold present in `fold_ids` and refit on all of them.
template <typename Scalar>
RidgeTuneResult<Scalar> ridge_tune(Matrix<Scalar> features, Vector<Scalar> targets, std::vector<int> fold_ids,
                                   std::span<const Scalar> grid) {
  RidgeCrossValidator<Scalar> cv(std::move(features), std::move(targets), std::move(fold_ids));
  std::vector<int> folds;
  for (int f = 0; f < cv.fold_count(); ++f) {
    if (!cv.rows(f).empty()) folds.push_back(f);
  }
  return cv.tune(folds, grid);
}

}  // namespace searchsig
