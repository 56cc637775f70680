#include "calib/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "calib/metrics.hpp"
#include "calib/optimize.hpp"

namespace calib {

namespace {

double clog(double p) { return std::log(std::max(p, kLogFloor)); }

// Mean NLL of softmax(beta * h) over the dataset.
double mean_nll_beta(const LogitDataset& d, double beta) {
  const int n = d.sample_count();
  const int k = d.class_count();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* h = d.row(i);
    double m = h[0];
    for (int j = 1; j < k; ++j) m = std::max(m, h[j]);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(beta * (h[j] - m));
    double sy = std::exp(beta * (h[d.label(i)] - m)) / denom;
    sum -= clog(sy);
  }
  return sum / n;
}

// First and second derivative of mean NLL with respect to beta.
void nll_beta_derivatives(const LogitDataset& d, double beta, double* f1,
                          double* f2) {
  const int n = d.sample_count();
  const int k = d.class_count();
  double g = 0.0, h2 = 0.0;
  std::vector<double> p(static_cast<size_t>(k));
  for (int i = 0; i < n; ++i) {
    const double* h = d.row(i);
    double m = h[0];
    for (int j = 1; j < k; ++j) m = std::max(m, h[j]);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) {
      p[static_cast<size_t>(j)] = std::exp(beta * (h[j] - m));
      denom += p[static_cast<size_t>(j)];
    }
    double mean_h = 0.0, mean_h2 = 0.0;
    for (int j = 0; j < k; ++j) {
      double pj = p[static_cast<size_t>(j)] / denom;
      mean_h += h[j] * pj;
      mean_h2 += h[j] * h[j] * pj;
    }
    g += mean_h - h[d.label(i)];
    h2 += mean_h2 - mean_h * mean_h;
  }
  *f1 = g / n;
  *f2 = h2 / n;
}

struct BetaBounds {
  double lo, hi;
};

BetaBounds beta_bounds(const AtsConfig& config) {
  return {1.0 / config.t_bounds.second, 1.0 / config.t_bounds.first};
}

// The objective can be flat to double precision near a boundary optimum
// (e.g. every sample correct with margin), which strands the line search in
// the interior. Adopt a bound whenever it is at least as good.
template <class F>
double snap_to_bounds(F&& objective, double beta, double lo, double hi) {
  const double f = objective(beta);
  const double fl = objective(lo);
  const double fh = objective(hi);
  if (fh <= f && fh <= fl) return hi;
  if (fl <= f) return lo;
  return beta;
}

}  // namespace

void AtsConfig::validate() const {
  if (theta_grids.empty()) throw ValidationError("theta_grids must be non-empty");
  for (const auto& [upper, step] : theta_grids) {
    if (!(step > 0.0)) throw ValidationError("theta grid step must be > 0");
    if (!(upper >= 0.0 && upper <= 1.0))
      throw ValidationError("theta grid upper bound must be in [0,1]");
  }
  if (!(t_bounds.first > 0.0) || !(t_bounds.first < t_bounds.second))
    throw ValidationError("temperature bounds must satisfy 0 < T_min < T_max");
  if (scan_points < 16) throw ValidationError("scan_points must be >= 16");
  if (!(refine_tolerance > 0.0))
    throw ValidationError("refine_tolerance must be > 0");
}

FitResult fit_ts(const LogitDataset& validation, const AtsConfig& config) {
  config.validate();
  const auto [blo, bhi] = beta_bounds(config);

  auto objective = [&](double beta) { return mean_nll_beta(validation, beta); };
  BrentResult br = brent_minimize(objective, blo, bhi, config.refine_tolerance);

  // Newton polish; the objective is convex in beta.
  double beta = br.x;
  int newton_iters = 0;
  for (; newton_iters < 50; ++newton_iters) {
    double f1, f2;
    nll_beta_derivatives(validation, beta, &f1, &f2);
    if (!(f2 > 0.0) || !std::isfinite(f1)) break;
    double next = beta - f1 / f2;
    next = std::clamp(next, blo, bhi);
    if (next == beta) break;
    beta = next;
    if (std::abs(f1 / f2) < 1e-14 * beta) break;
  }

  beta = snap_to_bounds(objective, beta, blo, bhi);
  const bool at_bound = (beta == blo || beta == bhi);
  FitResult res;
  res.temperature = Temperature(1.0 / beta);
  res.objective_value = mean_nll_beta(validation, beta);
  res.diagnostics.iterations = br.iterations + newton_iters;
  res.diagnostics.at_bound = at_bound;
  res.diagnostics.converged = br.converged || at_bound;
  res.diagnostics.stationarity_residual =
      ts_stationarity_residual(validation, *res.temperature);
  return res;
}

double ts_stationarity_residual(const LogitDataset& validation,
                                const Temperature& t) {
  ProbMatrix probs = softmax_with_temperature(validation, t);
  const int n = validation.sample_count();
  const int k = validation.class_count();
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < n; ++i) {
    lhs += validation.logit(i, validation.label(i));
    const double* p = probs.row(i);
    const double* h = validation.row(i);
    for (int j = 0; j < k; ++j) rhs += h[j] * p[j];
  }
  return std::abs(lhs - rhs) / n;
}

std::vector<AttendedSubset> build_attended_subsets(
    const LogitDataset& validation, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw ValidationError("theta must be in [0,1]");
  ProbMatrix base = softmax_with_temperature(validation, Temperature(1.0));
  const int n = validation.sample_count();
  const int k = validation.class_count();
  std::vector<AttendedSubset> subsets(static_cast<size_t>(k));
  for (int c = 0; c < k; ++c) subsets[static_cast<size_t>(c)].class_index = c;
  for (int i = 0; i < n; ++i) {
    const int y = validation.label(i);
    const double* p = base.row(i);
    for (int c = 0; c < k; ++c) {
      if (y == c || p[c] >= theta) {
        subsets[static_cast<size_t>(c)].member_indices.push_back(i);
        subsets[static_cast<size_t>(c)].is_positive.push_back(y == c);
      }
    }
  }
  return subsets;
}

double ats_loss(const LogitDataset& validation,
                const std::vector<AttendedSubset>& subsets,
                const Temperature& t) {
  ProbMatrix probs = softmax_with_temperature(validation, t);
  double sum = 0.0;
  long members = 0;
  for (const AttendedSubset& sub : subsets) {
    const int c = sub.class_index;
    if (c < 0 || c >= validation.class_count())
      throw ValidationError("subset class index out of range");
    for (size_t m = 0; m < sub.member_indices.size(); ++m) {
      const int i = sub.member_indices[m];
      if (i < 0 || i >= validation.sample_count())
        throw ValidationError("subset member index out of range");
      const double sk = probs.at(i, c);
      const double sy = probs.at(i, validation.label(i));
      // -log( S_k * (1 - S_y) / (1 - S_k) ), clamped term by term; the
      // last two cancel exactly for members with true label k.
      sum += -clog(sk) - clog(1.0 - sy) + clog(1.0 - sk);
      members++;
    }
  }
  if (members == 0) throw ValidationError("ats_loss over empty subsets");
  return sum / members;
}

namespace {

std::vector<double> theta_candidates(const AtsConfig& config) {
  std::vector<double> out;
  for (const auto& [upper, step] : config.theta_grids) {
    long count = static_cast<long>(std::floor(upper / step + 1e-9));
    for (long j = 0; j <= count; ++j) out.push_back(j * step);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
            out.end());
  return out;
}

struct CrossPair {
  float conf;
  int sample;
  int cls;
};

}  // namespace

FitResult fit_ats(const LogitDataset& validation, const AtsConfig& config) {
  config.validate();
  const int n = validation.sample_count();
  const int k = validation.class_count();
  const auto [blo, bhi] = beta_bounds(config);
  const int nb = config.scan_points;

  const ProbMatrix base = softmax_with_temperature(validation, Temperature(1.0));
  const std::vector<double> thetas = theta_candidates(config);

  // Log-spaced beta grid shared by every theta candidate.
  std::vector<double> betas(static_cast<size_t>(nb));
  const double ratio = std::log(bhi / blo);
  for (int j = 0; j < nb; ++j)
    betas[static_cast<size_t>(j)] = blo * std::exp(ratio * j / (nb - 1));

  // Per-sample softmax at every grid beta, laid out (sample, beta, class),
  // plus the per-beta NLL sum over all samples.
  std::vector<float> grid(static_cast<size_t>(n) * nb * k);
  std::vector<double> nll_sum(static_cast<size_t>(nb), 0.0);
  {
    std::vector<double> row(static_cast<size_t>(k));
    for (int i = 0; i < n; ++i) {
      const double* h = validation.row(i);
      double m = h[0];
      for (int j = 1; j < k; ++j) m = std::max(m, h[j]);
      for (int j = 0; j < nb; ++j) {
        const double beta = betas[static_cast<size_t>(j)];
        double denom = 0.0;
        for (int c = 0; c < k; ++c) {
          row[static_cast<size_t>(c)] = std::exp(beta * (h[c] - m));
          denom += row[static_cast<size_t>(c)];
        }
        float* cell = grid.data() + (static_cast<size_t>(i) * nb + j) * k;
        for (int c = 0; c < k; ++c)
          cell[c] = static_cast<float>(row[static_cast<size_t>(c)] / denom);
        nll_sum[static_cast<size_t>(j)] -=
            clog(row[static_cast<size_t>(validation.label(i))] / denom);
      }
    }
  }

  // Cross-class candidate pairs ordered by descending base confidence, so
  // that walking theta downward only ever adds members.
  std::vector<CrossPair> pairs;
  pairs.reserve(static_cast<size_t>(n) * (k - 1));
  for (int i = 0; i < n; ++i) {
    const double* p = base.row(i);
    for (int c = 0; c < k; ++c)
      if (c != validation.label(i))
        pairs.push_back({static_cast<float>(p[c]), i, c});
  }
  std::sort(pairs.begin(), pairs.end(), [](const CrossPair& a, const CrossPair& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    if (a.sample != b.sample) return a.sample < b.sample;
    return a.cls < b.cls;
  });

  // Lazily filled -log(1 - S_y) per (sample, beta).
  std::vector<double> own_term(static_cast<size_t>(n) * nb,
                               std::numeric_limits<double>::quiet_NaN());

  // Scan pass: incrementally maintained cross-member term sums per beta.
  std::vector<double> cross_sum(static_cast<size_t>(nb), 0.0);
  std::vector<int> scan_best(thetas.size(), 0);
  std::vector<long> cross_count(thetas.size(), 0);
  size_t ptr = 0;
  long cnt = 0;
  for (size_t ti = thetas.size(); ti-- > 0;) {
    const double theta = thetas[ti];
    while (ptr < pairs.size() && pairs[ptr].conf >= theta) {
      const CrossPair& pr = pairs[ptr];
      const float* cell = grid.data() + static_cast<size_t>(pr.sample) * nb * k;
      double* own = own_term.data() + static_cast<size_t>(pr.sample) * nb;
      const int y = validation.label(pr.sample);
      for (int j = 0; j < nb; ++j) {
        if (std::isnan(own[j]))
          own[j] = -clog(1.0 - static_cast<double>(cell[static_cast<size_t>(j) * k + y]));
        const double sk = static_cast<double>(cell[static_cast<size_t>(j) * k + pr.cls]);
        cross_sum[static_cast<size_t>(j)] += -clog(sk) + clog(1.0 - sk) + own[j];
      }
      cnt++;
      ptr++;
    }
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int j = 0; j < nb; ++j) {
      double v = (nll_sum[static_cast<size_t>(j)] + cross_sum[static_cast<size_t>(j)]) /
                 (n + cnt);
      if (v < best_val) {
        best_val = v;
        best = j;
      }
    }
    scan_best[ti] = best;
    cross_count[ti] = cnt;
  }

  // Refinement pass. Equal cross-member counts mean identical subsets
  // (membership is monotone in theta), so fit once per distinct subset.
  struct Candidate {
    double theta;
    double temperature;
    long cross;
    int iterations;
    bool converged;
  };
  std::vector<Candidate> cands;
  int total_iters = 0;
  for (size_t ti = 0; ti < thetas.size(); ++ti) {
    if (ti > 0 && cross_count[ti] == cross_count[ti - 1]) continue;
    const double theta = thetas[ti];
    if (n + cross_count[ti] == 0) continue;  // all subsets empty
    std::vector<AttendedSubset> subsets = build_attended_subsets(validation, theta);
    const int jb = scan_best[ti];
    const double lo = betas[static_cast<size_t>(std::max(0, jb - 1))];
    const double hi = betas[static_cast<size_t>(std::min(nb - 1, jb + 1))];
    auto objective = [&](double beta) {
      return ats_loss(validation, subsets, Temperature(1.0 / beta));
    };
    BrentResult br =
        brent_minimize(objective, lo, hi, 0.5 * config.refine_tolerance);
    total_iters += br.iterations;
    const double beta_star = snap_to_bounds(objective, br.x, blo, bhi);
    cands.push_back({theta, 1.0 / beta_star, cross_count[ti], br.iterations,
                     br.converged});
  }
  if (cands.empty()) throw FitError("no usable theta candidate");

  // Selection. Ranking candidates by a validation score (NLL, Brier, ...)
  // would defeat the attended loss: such scores are exactly the quantities
  // whose optima drift under label noise and jump between candidates on small
  // validation sets, so the argmin collapses back to the plain temperature
  // fit. Instead pick the attention breadth structurally: choose the theta
  // whose subsets admit, on average, half of each sample's alternative
  // classes (cross members closest to n*(K-1)/2). That breadth balances
  // class-specific exclusivity against pooling strength, depends on the data
  // only through the confidence distribution at T = 1 - a statistic that is
  // insensitive to both label noise and subsampling - and leaves the labels
  // to act through the attended loss itself. Ties prefer the narrower subset,
  // which is the candidate closer to plain temperature scaling.
  const double target = 0.5 * n * (k - 1);
  size_t sel = 0;
  for (size_t i = 1; i < cands.size(); ++i) {
    const double di = std::abs(static_cast<double>(cands[i].cross) - target);
    const double ds = std::abs(static_cast<double>(cands[sel].cross) - target);
    if (di < ds || (di == ds && cands[i].cross < cands[sel].cross)) sel = i;
  }

  FitResult res;
  res.temperature = Temperature(cands[sel].temperature);
  res.objective_value = mean_nll_beta(validation, 1.0 / cands[sel].temperature);
  res.theta = cands[sel].theta;
  res.diagnostics.iterations = total_iters;
  res.diagnostics.converged = cands[sel].converged;
  res.diagnostics.at_bound = cands[sel].temperature <= config.t_bounds.first ||
                             cands[sel].temperature >= config.t_bounds.second;
  return res;
}

std::vector<double> linear_scaler_gradient(const LogitDataset& validation,
                                           const LinearScaler& s) {
  ProbMatrix probs = apply_linear_scaler(validation, s);
  const int n = validation.sample_count();
  const int k = validation.class_count();
  std::vector<double> grad(static_cast<size_t>(k) * k + k, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* p = probs.row(i);
    const double* h = validation.row(i);
    const int y = validation.label(i);
    for (int r = 0; r < k; ++r) {
      const double g = p[r] - (r == y ? 1.0 : 0.0);
      double* wrow = grad.data() + static_cast<size_t>(r) * k;
      for (int c = 0; c < k; ++c) wrow[c] += g * h[c];
      grad[static_cast<size_t>(k) * k + r] += g;
    }
  }
  for (double& g : grad) g /= n;
  if (s.kind == ScalerKind::vector) {
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c)
        if (r != c) grad[static_cast<size_t>(r) * k + c] = 0.0;
  }
  return grad;
}

FitResult fit_linear_scaler(const LogitDataset& validation, ScalerKind kind,
                            int max_iters, double tolerance) {
  const int k = validation.class_count();
  LinearScaler s = LinearScaler::identity(k, kind);
  double f = nll(apply_linear_scaler(validation, s), validation.labels());

  int iters = 0;
  bool converged = false;
  for (; iters < max_iters; ++iters) {
    std::vector<double> grad = linear_scaler_gradient(validation, s);
    double gnorm2 = 0.0;
    for (double g : grad) gnorm2 += g * g;
    if (gnorm2 < 1e-24) {
      converged = true;
      break;
    }

    // Backtracking line search with an Armijo decrease condition.
    double eta = 1.0;
    bool accepted = false;
    LinearScaler trial = s;
    double f_trial = f;
    for (int bt = 0; bt < 60; ++bt) {
      trial = s;
      for (size_t j = 0; j < trial.weight.size(); ++j)
        trial.weight[j] -= eta * grad[j];
      for (int j = 0; j < k; ++j)
        trial.bias[static_cast<size_t>(j)] -=
            eta * grad[static_cast<size_t>(k) * k + j];
      f_trial = nll(apply_linear_scaler(validation, trial), validation.labels());
      if (std::isfinite(f_trial) && f_trial <= f - 1e-4 * eta * gnorm2) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      converged = true;  // no descent direction left at this scale
      break;
    }
    double rel_change = std::abs(f - f_trial) / std::max(std::abs(f), 1e-12);
    s = trial;
    f = f_trial;
    if (!std::isfinite(f))
      throw FitError("linear scaler fit diverged; last finite objective " +
                     std::to_string(f));
    if (rel_change < tolerance) {
      converged = true;
      iters++;
      break;
    }
  }

  FitResult res;
  res.scaler = s;
  res.objective_value = f;
  res.diagnostics.iterations = iters;
  res.diagnostics.converged = converged;
  return res;
}

}  // namespace calib
