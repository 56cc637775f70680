#include "calib/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace calib {

namespace {

void check_labels(const ProbMatrix& probs, const std::vector<int>& labels) {
  if (labels.size() != static_cast<size_t>(probs.sample_count()))
    throw ValidationError("label count does not match probability rows");
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= probs.class_count())
      throw ValidationError("label out of range at sample " + std::to_string(i));
}

double clamped_log(double p) { return std::log(std::max(p, kLogFloor)); }

}  // namespace

double nll(const ProbMatrix& probs, const std::vector<int>& labels) {
  check_labels(probs, labels);
  double sum = 0.0;
  for (int i = 0; i < probs.sample_count(); ++i)
    sum -= clamped_log(probs.at(i, labels[static_cast<size_t>(i)]));
  return sum / probs.sample_count();
}

std::pair<double, std::vector<BinStats>> ece(const ProbMatrix& probs,
                                             const std::vector<int>& labels,
                                             int num_bins) {
  check_labels(probs, labels);
  if (num_bins < 1) throw ValidationError("num_bins must be >= 1");
  const int n = probs.sample_count();
  const int k = probs.class_count();

  std::vector<long> count(static_cast<size_t>(num_bins), 0);
  std::vector<double> conf_sum(static_cast<size_t>(num_bins), 0.0);
  std::vector<long> correct(static_cast<size_t>(num_bins), 0);

  for (int i = 0; i < n; ++i) {
    const double* row = probs.row(i);
    int pred = argmax_row(row, k);
    double conf = row[pred];
    int b = static_cast<int>(conf * num_bins);
    if (b >= num_bins) b = num_bins - 1;  // conf == 1 falls in the last bin
    count[static_cast<size_t>(b)]++;
    conf_sum[static_cast<size_t>(b)] += conf;
    if (pred == labels[static_cast<size_t>(i)]) correct[static_cast<size_t>(b)]++;
  }

  std::vector<BinStats> bins(static_cast<size_t>(num_bins));
  double total = 0.0;
  for (int b = 0; b < num_bins; ++b) {
    BinStats& s = bins[static_cast<size_t>(b)];
    s.bin_index = b;
    s.count = count[static_cast<size_t>(b)];
    if (s.count > 0) {
      s.mean_confidence = conf_sum[static_cast<size_t>(b)] / s.count;
      s.accuracy = static_cast<double>(correct[static_cast<size_t>(b)]) / s.count;
      total += (static_cast<double>(s.count) / n) *
               std::abs(s.accuracy - s.mean_confidence);
    }
  }
  return {total, std::move(bins)};
}

double brier(const ProbMatrix& probs, const std::vector<int>& labels) {
  check_labels(probs, labels);
  const int n = probs.sample_count();
  const int k = probs.class_count();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = probs.row(i);
    const int y = labels[static_cast<size_t>(i)];
    for (int j = 0; j < k; ++j) {
      double d = row[j] - (j == y ? 1.0 : 0.0);
      sum += d * d;
    }
  }
  return sum / n;
}

double accuracy(const ProbMatrix& probs, const std::vector<int>& labels) {
  check_labels(probs, labels);
  long hits = 0;
  for (int i = 0; i < probs.sample_count(); ++i)
    if (argmax_row(probs.row(i), probs.class_count()) ==
        labels[static_cast<size_t>(i)])
      hits++;
  return static_cast<double>(hits) / probs.sample_count();
}

ReferralCurve referral_curve(const ProbMatrix& probs,
                             const std::vector<int>& labels, double step) {
  check_labels(probs, labels);
  if (!(step > 0.0 && step <= 1.0))
    throw ValidationError("referral step must be in (0, 1]");
  const int n = probs.sample_count();
  const int k = probs.class_count();

  std::vector<double> conf(static_cast<size_t>(n));
  std::vector<bool> is_correct(static_cast<size_t>(n));
  long n_correct = 0;
  for (int i = 0; i < n; ++i) {
    const double* row = probs.row(i);
    int pred = argmax_row(row, k);
    conf[static_cast<size_t>(i)] = row[pred];
    bool ok = pred == labels[static_cast<size_t>(i)];
    is_correct[static_cast<size_t>(i)] = ok;
    if (ok) n_correct++;
  }
  const long n_wrong = n - n_correct;

  ReferralCurve curve;
  for (long j = 0;; ++j) {
    double tau = j * step;
    if (tau >= 1.0 - 1e-12) break;
    curve.thresholds.push_back(tau);
  }
  curve.thresholds.push_back(1.0);

  for (double tau : curve.thresholds) {
    long kept = 0, referred = 0;
    for (int i = 0; i < n; ++i) {
      if (is_correct[static_cast<size_t>(i)]) {
        if (conf[static_cast<size_t>(i)] >= tau) kept++;
      } else {
        if (conf[static_cast<size_t>(i)] < tau) referred++;
      }
    }
    curve.kept_correct_fraction.push_back(
        n_correct > 0 ? static_cast<double>(kept) / n_correct : 1.0);
    curve.referred_wrong_fraction.push_back(
        n_wrong > 0 ? static_cast<double>(referred) / n_wrong : 1.0);
  }

  // Trapezoid over (referred_wrong, kept_correct) sorted by x.
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.thresholds.size());
  for (size_t i = 0; i < curve.thresholds.size(); ++i)
    pts.emplace_back(curve.referred_wrong_fraction[i],
                     curve.kept_correct_fraction[i]);
  std::stable_sort(pts.begin(), pts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  double auc = 0.0;
  for (size_t i = 1; i < pts.size(); ++i)
    auc += (pts[i].first - pts[i - 1].first) *
           (pts[i].second + pts[i - 1].second) * 0.5;
  curve.auc = auc;
  return curve;
}

}  // namespace calib
