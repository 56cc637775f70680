// Acceptance suite: one pass/fail line per criterion.
// Usage: acceptance [path-to-calib_cli]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "calib/harness.hpp"
#include "calib/io.hpp"
#include "oracle.hpp"

using namespace calib;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion,
              name.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) failures++;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_argmax_preservation() {
  auto start = Clock::now();
  AtsConfig light;
  light.theta_grids = {{1.0, 0.1}};
  light.scan_points = 32;
  long mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SynthSpec spec;
    spec.class_count = 2 + trial % 9;
    spec.sample_count = 1000;
    spec.true_temperature = 0.5 + 0.05 * (trial % 50);
    spec.seed = 9000 + static_cast<uint64_t>(trial);
    SynthDataset data = generate(spec);
    auto before = predict(softmax_with_temperature(data.dataset, Temperature(1.0)));
    FitResult ts = fit_ts(data.dataset, light);
    FitResult ats = fit_ats(data.dataset, light);
    auto after_ts = predict(softmax_with_temperature(data.dataset, *ts.temperature));
    auto after_ats = predict(softmax_with_temperature(data.dataset, *ats.temperature));
    for (size_t i = 0; i < before.size(); ++i) {
      if (after_ts[i] != before[i]) mismatches++;
      if (after_ats[i] != before[i]) mismatches++;
    }
  }
  double elapsed = seconds_since(start);
  report(1, "argmax/accuracy preservation over 100 datasets",
         mismatches == 0 && elapsed < 10.0,
         std::to_string(mismatches) + " mismatches, " + fmt(elapsed) + " s");
}

std::vector<std::pair<double, FitResult>> recovery_fits;

void criterion_2_temperature_recovery() {
  auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (double c : {0.5, 1.0, 2.0, 5.0}) {
    SynthSpec spec;
    spec.class_count = 10;
    spec.sample_count = 10000;
    spec.true_temperature = c;
    spec.seed = 777;
    SynthDataset data = generate(spec);
    FitResult fit = fit_ts(data.dataset, AtsConfig{});
    recovery_fits.emplace_back(c, fit);
    double rel = std::abs(fit.temperature->value - c) / c;
    double t_grid = oracle::grid_search_ts_temperature(data.dataset, 1.0 / (3.0 * c),
                                                       3.0 / c, 10000);
    double grid_rel = std::abs(fit.temperature->value - t_grid) / t_grid;
    if (rel >= 0.03 || grid_rel >= 0.005) ok = false;
    detail += "c=" + fmt(c) + ": T=" + fmt(fit.temperature->value) +
              " grid=" + fmt(t_grid) + "; ";
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 5.0) ok = false;
  report(2, "TS temperature recovery vs 10k-point grid oracle", ok,
         detail + fmt(elapsed) + " s");
}

void criterion_3_stationarity() {
  bool ok = true;
  std::string detail;
  for (const auto& [c, fit] : recovery_fits) {
    if (fit.diagnostics.at_bound) continue;  // interior optima only
    double r = fit.diagnostics.stationarity_residual;
    if (!(r < 1e-3)) ok = false;
    detail += "c=" + fmt(c) + ": residual=" + fmt(r) + "; ";
  }
  report(3, "stationarity residual < 1e-3 at interior optima", ok, detail);
}

void criterion_4_ats_reduction() {
  SynthSpec spec;
  spec.class_count = 6;
  spec.sample_count = 2000;
  spec.true_temperature = 2.0;
  spec.seed = 888;
  SynthDataset data = generate(spec);

  ProbMatrix base = softmax_with_temperature(data.dataset, Temperature(1.0));
  double max_off = 0.0;
  for (int i = 0; i < data.dataset.sample_count(); ++i)
    for (int c = 0; c < 6; ++c)
      if (c != data.dataset.label(i)) max_off = std::max(max_off, base.at(i, c));
  double theta0 = std::min(1.0, max_off + 1e-3);

  AtsConfig config;
  config.theta_grids = {{theta0, theta0}};  // candidates {0, theta0}
  FitResult ats = fit_ats(data.dataset, config);
  FitResult ts = fit_ts(data.dataset, config);
  double rel = std::abs(ats.temperature->value - ts.temperature->value) /
               ts.temperature->value;
  bool ok = rel <= 2.0 * config.refine_tolerance;

  // degenerate subsets make the attended loss coincide with mean NLL
  auto subsets = build_attended_subsets(data.dataset, theta0);
  std::mt19937_64 rng(889);
  std::uniform_real_distribution<double> temps(0.1, 10.0);
  double worst = 0.0;
  for (int r = 0; r < 10; ++r) {
    Temperature t(temps(rng));
    double a = ats_loss(data.dataset, subsets, t);
    double b = nll(softmax_with_temperature(data.dataset, t), data.dataset.labels());
    worst = std::max(worst, std::abs(a - b));
  }
  if (worst >= 1e-12) ok = false;
  report(4, "ATS reduces to TS under degenerate subsets", ok,
         "|T_ats-T_ts|/T=" + fmt(rel) + ", max loss gap " + fmt(worst) +
             ", theta*=" + fmt(*ats.theta));
}

void criterion_5_ece() {
  bool ok = true;
  double worst = 0.0;
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  std::uniform_int_distribution<int> lab(0, 2);
  for (int fixture = 0; fixture < 10; ++fixture) {
    const int n = 10;
    std::vector<double> vals(static_cast<size_t>(n) * 3);
    std::vector<int> y(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int c = 0; c < 3; ++c) {
        vals[static_cast<size_t>(i) * 3 + c] = unif(rng);
        sum += vals[static_cast<size_t>(i) * 3 + c];
      }
      for (int c = 0; c < 3; ++c) vals[static_cast<size_t>(i) * 3 + c] /= sum;
      y[static_cast<size_t>(i)] = lab(rng);
    }
    ProbMatrix p(std::move(vals), 3);
    double gap = std::abs(ece(p, y, 3 + fixture % 13).first -
                          oracle::ece_bruteforce(p, y, 3 + fixture % 13));
    worst = std::max(worst, gap);
    if (gap >= 1e-12) ok = false;
  }

  SynthSpec spec;
  spec.class_count = 10;
  spec.sample_count = 50000;
  spec.true_temperature = 1.0;
  spec.seed = 556;
  SynthDataset data = generate(spec);
  ProbMatrix posteriors(std::vector<double>(data.true_posteriors), 10);
  double calibrated_ece = ece(posteriors, data.dataset.labels(), 15).first;
  if (!(calibrated_ece < 0.02)) ok = false;
  report(5, "ECE matches brute force; oracle posteriors near zero ECE", ok,
         "max fixture gap " + fmt(worst) + ", oracle ECE " + fmt(calibrated_ece));
}

SweepData sweep_base = default_sweep_data(2024);

void criterion_6_noise_robustness() {
  auto start = Clock::now();
  std::vector<uint64_t> seeds = {11, 12, 13, 14, 15};
  SweepResult sweep =
      sweep_noise(sweep_base, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}, 5, seeds);
  bool ok = true;
  std::string detail;
  for (const SweepPoint& p : sweep.points) {
    if (p.axis_value > 0.0 && !(p.ats.mean_nll <= p.ts.mean_nll)) ok = false;
    detail += fmt(p.axis_value) + ": ts=" + fmt(p.ts.mean_nll) +
              " ats=" + fmt(p.ats.mean_nll) + "; ";
  }
  double ts_degradation =
      sweep.points.back().ts.mean_nll - sweep.points.front().ts.mean_nll;
  double ats_degradation =
      sweep.points.back().ats.mean_nll - sweep.points.front().ats.mean_nll;
  if (!(ts_degradation > ats_degradation)) ok = false;
  double elapsed = seconds_since(start);
  if (elapsed >= 60.0) ok = false;
  report(6, "noise robustness: ATS beats TS at every rate", ok,
         detail + "degradation ts=" + fmt(ts_degradation) +
             " ats=" + fmt(ats_degradation) + ", " + fmt(elapsed) + " s");
}

void criterion_7_size_stability() {
  auto start = Clock::now();
  std::vector<uint64_t> seeds = {21, 22, 23, 24, 25};
  SweepResult sweep = sweep_size(sweep_base, {50, 100, 500, 2500}, 5, seeds);
  const SweepPoint& smallest = sweep.points.front();
  bool ok = smallest.axis_value == 50.0 &&
            smallest.ats.std_nll <= smallest.ts.std_nll;
  double elapsed = seconds_since(start);
  if (elapsed >= 60.0) ok = false;
  report(7, "size stability: ATS std <= TS std at size 50", ok,
         "std ts=" + fmt(smallest.ts.std_nll) + " ats=" + fmt(smallest.ats.std_nll) +
             ", " + fmt(elapsed) + " s");
}

std::vector<CalibrationReport> comparison_reports;

void criterion_8_calibration_improvement() {
  auto start = Clock::now();
  comparison_reports =
      run_comparison(sweep_base.validation, sweep_base.test, {Method::ats});
  const CalibrationReport& r = comparison_reports[0];
  bool ok = r.error.empty() && r.ece_after <= 0.5 * r.ece_before;
  double elapsed = seconds_since(start);
  if (elapsed >= 5.0) ok = false;
  report(8, "ATS halves the ECE of the default overconfident synthetic", ok,
         "ece " + fmt(r.ece_before) + " -> " + fmt(r.ece_after) + ", " +
             fmt(elapsed) + " s");
}

void criterion_9_linear_gradients() {
  bool ok = true;
  double worst = 0.0;
  for (int instance = 0; instance < 5; ++instance) {
    auto d = oracle::random_dataset(50, 3, 2.0, 700 + static_cast<uint64_t>(instance));
    for (ScalerKind kind : {ScalerKind::matrix, ScalerKind::vector}) {
      std::mt19937_64 rng(710 + static_cast<uint64_t>(instance));
      std::normal_distribution<double> gauss(0.0, 0.3);
      LinearScaler s = LinearScaler::identity(3, kind);
      for (int c = 0; c < 3; ++c) {
        s.weight[static_cast<size_t>(c) * 3 + c] += gauss(rng);
        s.bias[static_cast<size_t>(c)] = gauss(rng);
      }
      auto grad = linear_scaler_gradient(d, s);
      auto objective = [&](const LinearScaler& sc) {
        return nll(apply_linear_scaler(d, sc), d.labels());
      };
      const double h = 1e-5;
      double max_ref = 0.0, max_err = 0.0;
      for (size_t j = 0; j < grad.size(); ++j) {
        bool is_weight = j < 9;
        if (kind == ScalerKind::vector && is_weight && (j % 4) != 0) continue;
        LinearScaler plus = s, minus = s;
        if (is_weight) {
          plus.weight[j] += h;
          minus.weight[j] -= h;
        } else {
          plus.bias[j - 9] += h;
          minus.bias[j - 9] -= h;
        }
        double fd = (objective(plus) - objective(minus)) / (2 * h);
        max_ref = std::max(max_ref, std::abs(fd));
        max_err = std::max(max_err, std::abs(grad[j] - fd));
      }
      double rel = max_err / max_ref;
      worst = std::max(worst, rel);
      if (!(rel < 1e-6)) ok = false;

      FitResult fit = fit_linear_scaler(d, kind);
      double init = nll(apply_linear_scaler(d, LinearScaler::identity(3, kind)),
                        d.labels());
      if (!(fit.objective_value <= init + 1e-12)) ok = false;
    }
  }
  report(9, "linear-scaler gradients match finite differences", ok,
         "worst relative error " + fmt(worst));
}

void criterion_10_referral_auc() {
  bool ok = true;
  double worst = 0.0;
  for (uint64_t s = 0; s < 5; ++s) {
    auto d = oracle::random_dataset(20, 3, 2.0, 800 + s);
    ProbMatrix p = softmax_with_temperature(d, Temperature(1.0));
    ReferralCurve curve = referral_curve(p, d.labels(), 0.05);
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < curve.thresholds.size(); ++i)
      pts.emplace_back(curve.referred_wrong_fraction[i],
                       curve.kept_correct_fraction[i]);
    double gap = std::abs(curve.auc - oracle::trapezoid_auc(pts));
    worst = std::max(worst, gap);
    if (gap >= 1e-12) ok = false;
  }
  const CalibrationReport& r = comparison_reports[0];
  if (!(r.referral_auc_after >= r.referral_auc_before - 0.01)) ok = false;
  report(10, "referral AUC matches trapezoid oracle; ATS does not hurt it", ok,
         "max fixture gap " + fmt(worst) + ", auc " + fmt(r.referral_auc_before) +
             " -> " + fmt(r.referral_auc_after));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_11_cli_determinism(const std::string& cli) {
  bool ok = true;
  std::string detail;
  auto run = [&](const std::string& args) {
    int rc = std::system((cli + " " + args).c_str());
    if (rc != 0) {
      ok = false;
      detail += "nonzero exit for: " + args + "; ";
    }
  };
  auto same = [&](const std::string& a, const std::string& b,
                  const std::string& what) {
    std::string ca = slurp(a), cb = slurp(b);
    if (ca.empty() || ca != cb) {
      ok = false;
      detail += what + " differs; ";
    }
  };

  const std::string dir = "acceptance_tmp";
  if (std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) != 0) {
    report(11, "CLI reruns are byte-identical", false, "could not create temp dir");
    return;
  }
  const std::string v = dir + "/val.logits", t = dir + "/test.logits";
  run("synth --classes 4 --samples 300 --true-temp 2.5 --seed 31 --out " + v +
      " --posteriors-out " + dir + "/val.post");
  run("synth --classes 4 --samples 300 --true-temp 2.5 --seed 31 --out " + dir +
      "/val2.logits --posteriors-out " + dir + "/val2.post");
  same(v, dir + "/val2.logits", "synth logits");
  same(dir + "/val.post", dir + "/val2.post", "synth posteriors");
  run("synth --classes 4 --samples 600 --true-temp 2.5 --seed 32 --out " + t);

  for (std::string method : {"ts", "ats"}) {
    run("calibrate --method " + method + " --val " + v + " --test " + t +
        " --out " + dir + "/cal_a.json");
    run("calibrate --method " + method + " --val " + v + " --test " + t +
        " --out " + dir + "/cal_b.json");
    same(dir + "/cal_a.json", dir + "/cal_b.json", "calibrate " + method);
  }

  run("sweep --axis noise --points 0.2 --reps 2 --seed 33 --out " + dir + "/sw_a.json");
  run("sweep --axis noise --points 0.2 --reps 2 --seed 33 --out " + dir + "/sw_b.json");
  same(dir + "/sw_a.json", dir + "/sw_b.json", "sweep");

  run("referral --probs-from ats --val " + v + " --test " + t + " --step 0.05 --out " +
      dir + "/ref_a.json");
  run("referral --probs-from ats --val " + v + " --test " + t + " --step 0.05 --out " +
      dir + "/ref_b.json");
  same(dir + "/ref_a.json", dir + "/ref_b.json", "referral");

  if (std::system(("rm -rf " + dir).c_str()) != 0)
    detail += "temp dir cleanup failed; ";
  report(11, "CLI reruns are byte-identical", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = argc > 1 ? argv[1] : "./calib_cli";
  criterion_1_argmax_preservation();
  criterion_2_temperature_recovery();
  criterion_3_stationarity();
  criterion_4_ats_reduction();
  criterion_5_ece();
  criterion_6_noise_robustness();
  criterion_7_size_stability();
  criterion_8_calibration_improvement();
  criterion_9_linear_gradients();
  criterion_10_referral_auc();
  criterion_11_cli_determinism(cli);
  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
