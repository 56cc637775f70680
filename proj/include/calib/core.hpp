#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

// Input-validation failures (bad dimensions, non-finite values, ...).
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Fitting failures (diverged optimizer, ...).
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultTMin = 0.05;
inline constexpr double kDefaultTMax = 1e6;
inline constexpr double kLogFloor = 1e-12;

/// N labeled samples with K-class logit vectors, row-major.
class LogitDataset {
public:
  LogitDataset(std::vector<int> labels, std::vector<double> logits,
               int class_count);

  int class_count() const { return class_count_; }
  int sample_count() const { return sample_count_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& logits() const { return logits_; }

  int label(int i) const { return labels_[static_cast<size_t>(i)]; }
  double logit(int i, int k) const {
    return logits_[static_cast<size_t>(i) * class_count_ + k];
  }
  const double* row(int i) const {
    return logits_.data() + static_cast<size_t>(i) * class_count_;
  }

private:
  std::vector<int> labels_;
  std::vector<double> logits_;
  int class_count_ = 0;
  int sample_count_ = 0;
};

/// Strictly positive scalar divisor of logits.
struct Temperature {
  double value = 1.0;

  explicit Temperature(double v) : value(v) {
    if (!(v > 0.0))
      throw ValidationError("temperature must be positive, got " +
                            std::to_string(v));
  }
};

enum class ScalerKind { matrix, vector };

/// K x K affine transform of logits; vector kind keeps weight diagonal.
struct LinearScaler {
  std::vector<double> weight;  // K x K row-major
  std::vector<double> bias;    // K
  ScalerKind kind = ScalerKind::matrix;
  int class_count = 0;

  static LinearScaler identity(int class_count, ScalerKind kind);
  void validate() const;
};

/// Row-stochastic N x K matrix of confidences.
class ProbMatrix {
public:
  ProbMatrix(std::vector<double> probs, int class_count);

  int class_count() const { return class_count_; }
  int sample_count() const { return sample_count_; }
  const std::vector<double>& values() const { return probs_; }
  double at(int i, int k) const {
    return probs_[static_cast<size_t>(i) * class_count_ + k];
  }
  const double* row(int i) const {
    return probs_.data() + static_cast<size_t>(i) * class_count_;
  }

private:
  std::vector<double> probs_;
  int class_count_ = 0;
  int sample_count_ = 0;
};

ProbMatrix softmax_with_temperature(const LogitDataset& dataset,
                                    const Temperature& t);

ProbMatrix apply_linear_scaler(const LogitDataset& dataset,
                               const LinearScaler& s);

/// Per-row argmax; ties go to the lowest class index.
std::vector<int> predict(const ProbMatrix& probs);

int argmax_row(const double* row, int k);

}  // namespace calib
