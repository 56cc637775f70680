#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "calib/core.hpp"

namespace calib {

/// Per-class validation subset: all samples with true label k plus
/// samples of other classes whose class-k confidence at T = 1 reaches
/// the threshold.
struct AttendedSubset {
  int class_index = 0;
  std::vector<int> member_indices;
  std::vector<bool> is_positive;  // true iff true label == class_index
};

struct AtsConfig {
  // (interval upper bound, step) pairs; candidates are the union.
  std::vector<std::pair<double, double>> theta_grids = {
      {1.0, 0.01}, {0.1, 0.001}, {0.001, 0.0001}};
  std::pair<double, double> t_bounds = {kDefaultTMin, kDefaultTMax};
  int scan_points = 256;
  double refine_tolerance = 1e-4;

  void validate() const;
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  bool at_bound = false;
  double stationarity_residual = 0.0;
};

struct FitResult {
  std::optional<Temperature> temperature;
  std::optional<LinearScaler> scaler;
  double objective_value = 0.0;
  std::optional<double> theta;
  FitDiagnostics diagnostics;
};

/// Temperature scaling: minimizes validation mean NLL over T. The search
/// runs in beta = 1/T, where the objective is convex, with a Newton
/// polish at the end.
FitResult fit_ts(const LogitDataset& validation, const AtsConfig& config);

/// |sum_i h_i^{y_i} - sum_i sum_k h_i^k S_k(x_i, T)| / N, the first-order
/// optimality gap of the temperature fit.
double ts_stationarity_residual(const LogitDataset& validation,
                                const Temperature& t);

std::vector<AttendedSubset> build_attended_subsets(
    const LogitDataset& validation, double theta);

/// Binary-reformulated loss summed over all subset members, mean form.
double ats_loss(const LogitDataset& validation,
                const std::vector<AttendedSubset>& subsets,
                const Temperature& t);

/// Attended temperature scaling: per theta candidate, minimizes ats_loss
/// over T (log-spaced scan + bracketing refinement); selects the
/// (theta, T) pair with the lowest validation NLL, ties to smaller theta.
FitResult fit_ats(const LogitDataset& validation, const AtsConfig& config);

/// Matrix/vector scaling fit by line-searched gradient descent on mean
/// NLL, starting from the identity transform.
FitResult fit_linear_scaler(const LogitDataset& validation, ScalerKind kind,
                            int max_iters = 500, double tolerance = 1e-7);

/// Analytic gradient of mean NLL for apply_linear_scaler at (W, b),
/// flattened as K*K weight entries followed by K bias entries. Exposed
/// for finite-difference checks.
std::vector<double> linear_scaler_gradient(const LogitDataset& validation,
                                           const LinearScaler& s);

}  // namespace calib
