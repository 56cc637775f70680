#include "calib/core.hpp"

#include <algorithm>
#include <cmath>

namespace calib {

LogitDataset::LogitDataset(std::vector<int> labels, std::vector<double> logits,
                           int class_count)
    : labels_(std::move(labels)),
      logits_(std::move(logits)),
      class_count_(class_count) {
  if (class_count_ < 2)
    throw ValidationError("class_count must be >= 2, got " +
                          std::to_string(class_count_));
  if (labels_.empty()) throw ValidationError("dataset must contain at least one sample");
  if (logits_.size() != labels_.size() * static_cast<size_t>(class_count_))
    throw ValidationError("logits size does not match labels * class_count");
  sample_count_ = static_cast<int>(labels_.size());
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= class_count_)
      throw ValidationError("label out of range at sample " + std::to_string(i));
  }
  for (size_t i = 0; i < logits_.size(); ++i) {
    if (!std::isfinite(logits_[i]))
      throw ValidationError("non-finite logit at flat index " + std::to_string(i));
  }
}

LinearScaler LinearScaler::identity(int class_count, ScalerKind kind) {
  LinearScaler s;
  s.class_count = class_count;
  s.kind = kind;
  s.weight.assign(static_cast<size_t>(class_count) * class_count, 0.0);
  s.bias.assign(static_cast<size_t>(class_count), 0.0);
  for (int k = 0; k < class_count; ++k)
    s.weight[static_cast<size_t>(k) * class_count + k] = 1.0;
  return s;
}

void LinearScaler::validate() const {
  if (class_count < 2) throw ValidationError("scaler class_count must be >= 2");
  if (weight.size() != static_cast<size_t>(class_count) * class_count ||
      bias.size() != static_cast<size_t>(class_count))
    throw ValidationError("scaler dimensions inconsistent with class_count");
  for (double w : weight)
    if (!std::isfinite(w)) throw ValidationError("non-finite scaler weight");
  for (double b : bias)
    if (!std::isfinite(b)) throw ValidationError("non-finite scaler bias");
  if (kind == ScalerKind::vector) {
    for (int r = 0; r < class_count; ++r)
      for (int c = 0; c < class_count; ++c)
        if (r != c && weight[static_cast<size_t>(r) * class_count + c] != 0.0)
          throw ValidationError("vector scaler has nonzero off-diagonal weight");
  }
}

ProbMatrix::ProbMatrix(std::vector<double> probs, int class_count)
    : probs_(std::move(probs)), class_count_(class_count) {
  if (class_count_ < 2) throw ValidationError("class_count must be >= 2");
  if (probs_.empty() || probs_.size() % class_count_ != 0)
    throw ValidationError("probability matrix size not a multiple of class_count");
  sample_count_ = static_cast<int>(probs_.size() / class_count_);
  for (int i = 0; i < sample_count_; ++i) {
    double sum = 0.0;
    for (int k = 0; k < class_count_; ++k) {
      double p = probs_[static_cast<size_t>(i) * class_count_ + k];
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("probability out of [0,1] at row " + std::to_string(i));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("probability row " + std::to_string(i) +
                            " does not sum to 1");
  }
}

namespace {

// Stabilized softmax of scale * row into out.
void softmax_row(const double* row, int k, double scale, double* out) {
  double m = row[0];
  for (int j = 1; j < k; ++j) m = std::max(m, row[j]);
  double denom = 0.0;
  for (int j = 0; j < k; ++j) {
    out[j] = std::exp((row[j] - m) * scale);
    denom += out[j];
  }
  for (int j = 0; j < k; ++j) out[j] /= denom;
}

}  // namespace

ProbMatrix softmax_with_temperature(const LogitDataset& dataset,
                                    const Temperature& t) {
  const int n = dataset.sample_count();
  const int k = dataset.class_count();
  const double scale = 1.0 / t.value;
  std::vector<double> probs(static_cast<size_t>(n) * k);
  for (int i = 0; i < n; ++i)
    softmax_row(dataset.row(i), k, scale, probs.data() + static_cast<size_t>(i) * k);
  return ProbMatrix(std::move(probs), k);
}

ProbMatrix apply_linear_scaler(const LogitDataset& dataset,
                               const LinearScaler& s) {
  s.validate();
  const int n = dataset.sample_count();
  const int k = dataset.class_count();
  if (s.class_count != k)
    throw ValidationError("scaler class_count " + std::to_string(s.class_count) +
                          " does not match dataset class_count " + std::to_string(k));
  std::vector<double> probs(static_cast<size_t>(n) * k);
  std::vector<double> z(static_cast<size_t>(k));
  for (int i = 0; i < n; ++i) {
    const double* h = dataset.row(i);
    for (int r = 0; r < k; ++r) {
      double acc = s.bias[static_cast<size_t>(r)];
      const double* wrow = s.weight.data() + static_cast<size_t>(r) * k;
      for (int c = 0; c < k; ++c) acc += wrow[c] * h[c];
      z[static_cast<size_t>(r)] = acc;
    }
    softmax_row(z.data(), k, 1.0, probs.data() + static_cast<size_t>(i) * k);
  }
  return ProbMatrix(std::move(probs), k);
}

int argmax_row(const double* row, int k) {
  int best = 0;
  for (int j = 1; j < k; ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

std::vector<int> predict(const ProbMatrix& probs) {
  std::vector<int> out(static_cast<size_t>(probs.sample_count()));
  for (int i = 0; i < probs.sample_count(); ++i)
    out[static_cast<size_t>(i)] = argmax_row(probs.row(i), probs.class_count());
  return out;
}

}  // namespace calib
