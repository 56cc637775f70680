#include "calib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace calib {

void SynthSpec::validate() const {
  if (class_count < 2) throw ValidationError("class_count must be >= 2");
  if (sample_count < 1) throw ValidationError("sample_count must be >= 1");
  if (!(true_temperature > 0.0))
    throw ValidationError("true_temperature must be > 0");
  if (!(concentration > 0.0)) throw ValidationError("concentration must be > 0");
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  const int n = spec.sample_count;
  const int k = spec.class_count;
  std::mt19937_64 rng(spec.seed);
  std::gamma_distribution<double> gamma(spec.concentration, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> posteriors(static_cast<size_t>(n) * k);
  std::vector<double> logits(static_cast<size_t>(n) * k);
  std::vector<int> labels(static_cast<size_t>(n));

  for (int i = 0; i < n; ++i) {
    double* q = posteriors.data() + static_cast<size_t>(i) * k;
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      // floor keeps log(q) finite for very small concentrations
      q[c] = std::max(gamma(rng), 1e-280);
      sum += q[c];
    }
    for (int c = 0; c < k; ++c) q[c] /= sum;

    // label ~ Categorical(q) by CDF inversion
    double u = unif(rng);
    int y = k - 1;
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
      acc += q[c];
      if (u < acc) {
        y = c;
        break;
      }
    }
    labels[static_cast<size_t>(i)] = y;

    double* h = logits.data() + static_cast<size_t>(i) * k;
    for (int c = 0; c < k; ++c) h[c] = spec.true_temperature * std::log(q[c]);
  }

  return SynthDataset{LogitDataset(std::move(labels), std::move(logits), k),
                      std::move(posteriors)};
}

LogitDataset inject_label_noise(const LogitDataset& dataset, double rate,
                                uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0))
    throw ValidationError("noise rate must be in [0,1]");
  const int k = dataset.class_count();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, k - 2);

  std::vector<int> labels = dataset.labels();
  for (int& y : labels) {
    if (unif(rng) < rate) {
      int j = other(rng);
      y = (j >= y) ? j + 1 : j;
    }
  }
  return LogitDataset(std::move(labels), dataset.logits(), k);
}

LogitDataset subsample(const LogitDataset& dataset, int size, uint64_t seed) {
  const int n = dataset.sample_count();
  const int k = dataset.class_count();
  if (size < 1 || size > n)
    throw ValidationError("subsample size must be in [1, N]");
  std::mt19937_64 rng(seed);

  // partial Fisher-Yates
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }

  std::vector<int> labels(static_cast<size_t>(size));
  std::vector<double> logits(static_cast<size_t>(size) * k);
  for (int i = 0; i < size; ++i) {
    const int src = idx[static_cast<size_t>(i)];
    labels[static_cast<size_t>(i)] = dataset.label(src);
    std::copy(dataset.row(src), dataset.row(src) + k,
              logits.begin() + static_cast<size_t>(i) * k);
  }
  return LogitDataset(std::move(labels), std::move(logits), k);
}

}  // namespace calib
