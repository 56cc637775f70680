#pragma once

#include <cstdint>
#include <vector>

#include "calib/core.hpp"

namespace calib {

/// Generator parameters for a synthetic classifier with known posteriors.
/// true_temperature is the sharpening factor c applied as h = c * log q,
/// so the calibrating temperature of the produced logits equals c.
struct SynthSpec {
  int class_count = 10;
  int sample_count = 10000;
  double true_temperature = 1.0;
  double concentration = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  LogitDataset dataset;
  std::vector<double> true_posteriors;  // N x K row-major, row-stochastic
};

/// Draws posterior rows from a symmetric Dirichlet (gamma draws,
/// normalized), labels from each row, and sets logits to c * log q.
/// Bit-reproducible per seed within one build.
SynthDataset generate(const SynthSpec& spec);

/// With probability rate, replaces each label by a uniform draw over the
/// other K-1 classes. Logits untouched.
LogitDataset inject_label_noise(const LogitDataset& dataset, double rate,
                                uint64_t seed);

/// Uniform sample of `size` rows without replacement.
LogitDataset subsample(const LogitDataset& dataset, int size, uint64_t seed);

}  // namespace calib
