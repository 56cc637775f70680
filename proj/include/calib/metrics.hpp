#pragma once

#include <utility>
#include <vector>

#include "calib/core.hpp"

namespace calib {

/// One reliability-diagram bin. Empty bins report 0 confidence/accuracy
/// and contribute nothing to ECE.
struct BinStats {
  int bin_index = 0;
  long count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

/// Threshold sweep for selective prediction. kept_correct_fraction is the
/// fraction of correct samples with confidence >= threshold;
/// referred_wrong_fraction the fraction of wrong samples below it.
struct ReferralCurve {
  std::vector<double> thresholds;
  std::vector<double> kept_correct_fraction;
  std::vector<double> referred_wrong_fraction;
  double auc = 0.0;
};

/// Mean negative log-likelihood of the true labels; log clamped at 1e-12.
double nll(const ProbMatrix& probs, const std::vector<int>& labels);

/// Expected calibration error over equal-width confidence bins
/// ([lo, hi) except the last bin, which is closed), plus per-bin stats.
std::pair<double, std::vector<BinStats>> ece(const ProbMatrix& probs,
                                             const std::vector<int>& labels,
                                             int num_bins);

/// Mean squared distance between probability rows and one-hot labels.
double brier(const ProbMatrix& probs, const std::vector<int>& labels);

double accuracy(const ProbMatrix& probs, const std::vector<int>& labels);

/// Thresholds {0, step, 2*step, ..., 1}; empty correct/wrong subsets
/// yield fraction 1. AUC by trapezoid over points sorted by the
/// referred-wrong coordinate.
ReferralCurve referral_curve(const ProbMatrix& probs,
                             const std::vector<int>& labels, double step);

}  // namespace calib
