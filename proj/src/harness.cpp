#include "calib/harness.hpp"

#include <algorithm>
#include <cmath>

namespace calib {

std::string method_name(Method m) {
  switch (m) {
    case Method::ts: return "ts";
    case Method::ats: return "ats";
    case Method::vector_scaling: return "vector";
    case Method::matrix_scaling: return "matrix";
  }
  return "unknown";
}

namespace {

struct Evaluated {
  double acc, nll_v, ece_v, brier_v, auc;
};

Evaluated evaluate(const ProbMatrix& probs, const std::vector<int>& labels,
                   const HarnessConfig& config) {
  Evaluated e;
  e.acc = accuracy(probs, labels);
  e.nll_v = nll(probs, labels);
  e.ece_v = ece(probs, labels, config.ece_bins).first;
  e.brier_v = brier(probs, labels);
  e.auc = referral_curve(probs, labels, config.referral_step).auc;
  return e;
}

}  // namespace

std::vector<CalibrationReport> run_comparison(const LogitDataset& validation,
                                              const LogitDataset& test,
                                              const std::set<Method>& methods,
                                              const HarnessConfig& config) {
  if (validation.class_count() != test.class_count())
    throw ValidationError("validation and test class counts differ");

  const ProbMatrix uncal = softmax_with_temperature(test, Temperature(1.0));
  const Evaluated before = evaluate(uncal, test.labels(), config);

  std::vector<CalibrationReport> reports;
  for (Method m : methods) {
    CalibrationReport r;
    r.method = method_name(m);
    r.accuracy_before = before.acc;
    r.nll_before = before.nll_v;
    r.ece_before = before.ece_v;
    r.brier_before = before.brier_v;
    r.referral_auc_before = before.auc;
    try {
      FitResult fit;
      switch (m) {
        case Method::ts: fit = fit_ts(validation, config.ats); break;
        case Method::ats: fit = fit_ats(validation, config.ats); break;
        case Method::vector_scaling:
          fit = fit_linear_scaler(validation, ScalerKind::vector);
          break;
        case Method::matrix_scaling:
          fit = fit_linear_scaler(validation, ScalerKind::matrix);
          break;
      }
      ProbMatrix after_probs =
          fit.temperature
              ? softmax_with_temperature(test, *fit.temperature)
              : apply_linear_scaler(test, *fit.scaler);
      Evaluated after = evaluate(after_probs, test.labels(), config);
      r.accuracy_after = after.acc;
      r.nll_after = after.nll_v;
      r.ece_after = after.ece_v;
      r.brier_after = after.brier_v;
      r.referral_auc_after = after.auc;
      if (fit.temperature) r.temperature = fit.temperature->value;
      if (fit.theta) r.theta = fit.theta;
      if (fit.scaler) r.scaler_classes = fit.scaler->class_count;
    } catch (const std::exception& ex) {
      r.error = ex.what();
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

SweepData default_sweep_data(uint64_t seed) {
  SynthSpec spec;
  spec.class_count = 10;
  spec.sample_count = 12500;
  spec.true_temperature = 2.5;
  spec.concentration = 1.0;
  spec.seed = seed;
  SynthDataset all = generate(spec);

  const int k = spec.class_count;
  const int n_val = 2500;
  const int n_test = spec.sample_count - n_val;
  std::vector<int> vl(all.dataset.labels().begin(),
                      all.dataset.labels().begin() + n_val);
  std::vector<double> vg(all.dataset.logits().begin(),
                         all.dataset.logits().begin() +
                             static_cast<size_t>(n_val) * k);
  std::vector<int> tl(all.dataset.labels().begin() + n_val,
                      all.dataset.labels().end());
  std::vector<double> tg(all.dataset.logits().begin() +
                             static_cast<size_t>(n_val) * k,
                         all.dataset.logits().end());
  (void)n_test;
  return SweepData{LogitDataset(std::move(vl), std::move(vg), k),
                   LogitDataset(std::move(tl), std::move(tg), k)};
}

namespace {

SweepMethodStats aggregate(const std::vector<double>& nlls,
                           const std::vector<double>& eces) {
  SweepMethodStats s;
  const size_t n = nlls.size();
  for (double v : nlls) s.mean_nll += v;
  for (double v : eces) s.mean_ece += v;
  s.mean_nll /= n;
  s.mean_ece /= n;
  if (n >= 2) {
    double ss = 0.0;
    for (double v : nlls) ss += (v - s.mean_nll) * (v - s.mean_nll);
    s.std_nll = std::sqrt(ss / (n - 1));
  }
  return s;
}

// Fits TS and ATS on `val`, evaluates NLL/ECE on `test`.
void run_cell(const LogitDataset& val, const LogitDataset& test,
              const HarnessConfig& config, std::vector<double>& ts_nll,
              std::vector<double>& ts_ece, std::vector<double>& ats_nll,
              std::vector<double>& ats_ece) {
  FitResult ts = fit_ts(val, config.ats);
  FitResult ats = fit_ats(val, config.ats);
  ProbMatrix pts = softmax_with_temperature(test, *ts.temperature);
  ProbMatrix pats = softmax_with_temperature(test, *ats.temperature);
  ts_nll.push_back(nll(pts, test.labels()));
  ts_ece.push_back(ece(pts, test.labels(), config.ece_bins).first);
  ats_nll.push_back(nll(pats, test.labels()));
  ats_ece.push_back(ece(pats, test.labels(), config.ece_bins).first);
}

}  // namespace

SweepResult sweep_noise(const SweepData& base, const std::vector<double>& rates,
                        int repetitions, const std::vector<uint64_t>& seeds,
                        const HarnessConfig& config) {
  if (repetitions != static_cast<int>(seeds.size()))
    throw ValidationError("repetitions must equal the number of seeds");
  for (double r : rates)
    if (!(r >= 0.0 && r <= 1.0))
      throw ValidationError("noise rate outside [0,1]");

  std::vector<double> sorted = rates;
  std::sort(sorted.begin(), sorted.end());

  SweepResult result;
  result.axis = SweepAxis::noise_rate;
  result.repetitions = repetitions;
  result.seeds = seeds;
  result.std_unreliable = repetitions < 2;
  for (double rate : sorted) {
    std::vector<double> tn, te, an, ae;
    for (uint64_t seed : seeds) {
      LogitDataset noisy = inject_label_noise(base.validation, rate, seed);
      run_cell(noisy, base.test, config, tn, te, an, ae);
    }
    SweepPoint p;
    p.axis_value = rate;
    p.ts = aggregate(tn, te);
    p.ats = aggregate(an, ae);
    result.points.push_back(p);
  }
  return result;
}

SweepResult sweep_size(const SweepData& base, const std::vector<int>& sizes,
                       int repetitions, const std::vector<uint64_t>& seeds,
                       const HarnessConfig& config) {
  if (repetitions != static_cast<int>(seeds.size()))
    throw ValidationError("repetitions must equal the number of seeds");

  std::vector<int> sorted = sizes;
  std::sort(sorted.begin(), sorted.end());

  SweepResult result;
  result.axis = SweepAxis::validation_size;
  result.repetitions = repetitions;
  result.seeds = seeds;
  result.std_unreliable = repetitions < 2;
  for (int size : sorted) {
    std::vector<double> tn, te, an, ae;
    for (uint64_t seed : seeds) {
      LogitDataset sub = subsample(base.validation, size, seed);
      run_cell(sub, base.test, config, tn, te, an, ae);
    }
    SweepPoint p;
    p.axis_value = static_cast<double>(size);
    p.ts = aggregate(tn, te);
    p.ats = aggregate(an, ae);
    result.points.push_back(p);
  }
  return result;
}

}  // namespace calib
