#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "calib/calibrators.hpp"
#include "calib/metrics.hpp"
#include "calib/synth.hpp"

namespace calib {

enum class Method { ts, ats, vector_scaling, matrix_scaling };

std::string method_name(Method m);

/// Before/after metrics for one calibration method on a test set.
struct CalibrationReport {
  std::string method;
  double accuracy_before = 0.0, accuracy_after = 0.0;
  double nll_before = 0.0, nll_after = 0.0;
  double ece_before = 0.0, ece_after = 0.0;  // fractions, not percent
  double brier_before = 0.0, brier_after = 0.0;
  double referral_auc_before = 0.0, referral_auc_after = 0.0;
  std::optional<double> temperature;
  std::optional<double> theta;
  std::optional<int> scaler_classes;  // linear fits: K of the fitted W/b
  std::string error;                  // non-empty when fitting failed
};

enum class SweepAxis { noise_rate, validation_size };

struct SweepMethodStats {
  double mean_nll = 0.0;
  double std_nll = 0.0;
  double mean_ece = 0.0;
};

struct SweepPoint {
  double axis_value = 0.0;
  SweepMethodStats ts;
  SweepMethodStats ats;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::noise_rate;
  std::vector<SweepPoint> points;  // ascending by axis_value
  int repetitions = 0;
  std::vector<uint64_t> seeds;
  bool std_unreliable = false;  // fewer than 2 repetitions
};

struct HarnessConfig {
  AtsConfig ats;
  int ece_bins = 15;
  double referral_step = 0.05;
};

/// Fits each method on the validation set and reports all metrics on the
/// test set. Fit failures annotate the affected row.
std::vector<CalibrationReport> run_comparison(const LogitDataset& validation,
                                              const LogitDataset& test,
                                              const std::set<Method>& methods,
                                              const HarnessConfig& config = {});

/// Default synthetic substrate for the sweeps: K=10, 2500 validation +
/// 10000 test samples, sharpening 2.5.
struct SweepData {
  LogitDataset validation;
  LogitDataset test;
};
SweepData default_sweep_data(uint64_t seed);

/// Noise sweep: corrupts validation labels only, fits TS and ATS, and
/// evaluates on the clean test set.
SweepResult sweep_noise(const SweepData& base, const std::vector<double>& rates,
                        int repetitions, const std::vector<uint64_t>& seeds,
                        const HarnessConfig& config = {});

/// Validation-size sweep over subsampled validation sets.
SweepResult sweep_size(const SweepData& base, const std::vector<int>& sizes,
                       int repetitions, const std::vector<uint64_t>& seeds,
                       const HarnessConfig& config = {});

}  // namespace calib
