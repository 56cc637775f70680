// Command-line surface: calibrate / synth / sweep / referral.
// Exit codes: 0 success, 2 input error, 3 fit failure, 4 internal error.

#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "calib/io.hpp"

namespace {

using namespace calib;

AtsConfig parse_theta_grid(const std::string& spec) {
  AtsConfig config;
  if (spec.empty()) return config;
  config.theta_grids.clear();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ValidationError("theta grid entry '" + item +
                            "' is not of the form upper:step");
    try {
      double upper = std::stod(item.substr(0, colon));
      double step = std::stod(item.substr(colon + 1));
      config.theta_grids.emplace_back(upper, step);
    } catch (const ValidationError&) {
      throw;
    } catch (...) {
      throw ValidationError("cannot parse theta grid entry '" + item + "'");
    }
  }
  config.validate();
  return config;
}

Method method_from_name(const std::string& name) {
  if (name == "ts") return Method::ts;
  if (name == "ats") return Method::ats;
  if (name == "vector") return Method::vector_scaling;
  if (name == "matrix") return Method::matrix_scaling;
  throw ValidationError("unknown method: " + name);
}

int run_calibrate(const std::string& method, const std::string& val_path,
                  const std::string& test_path, const std::string& out_path,
                  const std::string& theta_grid, int bins) {
  LogitDataset val = read_logit_file(val_path);
  LogitDataset test = read_logit_file(test_path);
  HarnessConfig config;
  config.ats = parse_theta_grid(theta_grid);
  config.ece_bins = bins;
  std::vector<CalibrationReport> reports =
      run_comparison(val, test, {method_from_name(method)}, config);
  for (const CalibrationReport& r : reports)
    if (!r.error.empty()) throw FitError(r.method + " fit failed: " + r.error);
  nlohmann::json payload;
  payload["reports"] = nlohmann::json::array();
  for (const CalibrationReport& r : reports)
    payload["reports"].push_back(to_json(r));
  write_report_file(out_path, "comparison", payload);
  return 0;
}

int run_synth(int classes, long samples, double true_temp, double concentration,
              uint64_t seed, const std::string& out_path,
              const std::string& posteriors_path) {
  SynthSpec spec;
  spec.class_count = classes;
  spec.sample_count = static_cast<int>(samples);
  spec.true_temperature = true_temp;
  spec.concentration = concentration;
  spec.seed = seed;
  SynthDataset data = generate(spec);
  write_logit_file(out_path, data.dataset);
  if (!posteriors_path.empty())
    write_posterior_file(posteriors_path, data.true_posteriors, classes);
  return 0;
}

int run_sweep(const std::string& axis, const std::vector<double>& points,
              int reps, uint64_t seed, const std::string& out_path) {
  if (points.empty()) throw ValidationError("--points must be non-empty");
  std::vector<uint64_t> seeds;
  for (int r = 0; r < reps; ++r) seeds.push_back(seed + 1 + r);
  SweepData base = default_sweep_data(seed);
  SweepResult result;
  if (axis == "noise") {
    result = sweep_noise(base, points, reps, seeds);
  } else {
    std::vector<int> sizes;
    for (double p : points) {
      if (p < 1 || p != static_cast<long>(p))
        throw ValidationError("size axis points must be positive integers");
      sizes.push_back(static_cast<int>(p));
    }
    result = sweep_size(base, sizes, reps, seeds);
  }
  write_report_file(out_path, "sweep", to_json(result));
  return 0;
}

int run_referral(const std::string& source, const std::string& val_path,
                 const std::string& test_path, double step,
                 const std::string& out_path) {
  LogitDataset val = read_logit_file(val_path);
  LogitDataset test = read_logit_file(test_path);
  if (val.class_count() != test.class_count())
    throw ValidationError("validation and test class counts differ");
  Temperature t(1.0);
  if (source == "ts") {
    t = *fit_ts(val, AtsConfig{}).temperature;
  } else if (source == "ats") {
    t = *fit_ats(val, AtsConfig{}).temperature;
  }
  ProbMatrix probs = softmax_with_temperature(test, t);
  ReferralCurve curve = referral_curve(probs, test.labels(), step);
  nlohmann::json payload = to_json(curve);
  payload["probs_from"] = source;
  payload["temperature"] =
      source == "raw" ? nlohmann::json(nullptr) : nlohmann::json(t.value);
  write_report_file(out_path, "referral", payload);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-hoc confidence calibration toolkit"};
  app.require_subcommand(1);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit a calibrator and report metrics");
  std::string method, val_path, test_path, out_path, theta_grid;
  int bins = 15;
  uint64_t seed = 0;
  cal->add_option("--method", method, "ts|ats|vector|matrix")
      ->required()
      ->check(CLI::IsMember({"ts", "ats", "vector", "matrix"}));
  cal->add_option("--val", val_path, "validation logit file")->required();
  cal->add_option("--test", test_path, "test logit file")->required();
  cal->add_option("--out", out_path, "output report file")->required();
  cal->add_option("--theta-grid", theta_grid,
                  "comma-separated upper:step pairs, e.g. 1:0.01,0.1:0.001");
  cal->add_option("--bins", bins, "ECE bin count")->default_val(15);
  cal->add_option("--seed", seed, "unused for deterministic fits; accepted "
                                  "for interface uniformity");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate synthetic logits with known posteriors");
  int classes = 10;
  long samples = 10000;
  double true_temp = 1.0, concentration = 1.0;
  std::string posteriors_path;
  syn->add_option("--classes", classes, "class count K")->required();
  syn->add_option("--samples", samples, "sample count N")->required();
  syn->add_option("--true-temp", true_temp, "sharpening factor c")->required();
  syn->add_option("--concentration", concentration, "Dirichlet concentration")
      ->default_val(1.0);
  syn->add_option("--seed", seed, "generator seed")->required();
  syn->add_option("--out", out_path, "output logit file")->required();
  syn->add_option("--posteriors-out", posteriors_path, "posterior sidecar file");

  // sweep
  auto* swp = app.add_subcommand("sweep", "Noise or validation-size robustness sweep");
  std::string axis;
  std::vector<double> points;
  int reps = 5;
  swp->add_option("--axis", axis, "noise|size")
      ->required()
      ->check(CLI::IsMember({"noise", "size"}));
  swp->add_option("--points", points, "axis values")->required()->delimiter(',');
  swp->add_option("--reps", reps, "repetitions")->default_val(5);
  swp->add_option("--seed", seed, "base seed")->default_val(0);
  swp->add_option("--out", out_path, "output report file")->required();

  // referral
  auto* ref = app.add_subcommand("referral", "Referral curve and AUC");
  std::string source;
  double step = 0.05;
  ref->add_option("--probs-from", source, "raw|ts|ats")
      ->required()
      ->check(CLI::IsMember({"raw", "ts", "ats"}));
  ref->add_option("--val", val_path, "validation logit file")->required();
  ref->add_option("--test", test_path, "test logit file")->required();
  ref->add_option("--step", step, "threshold step")->default_val(0.05);
  ref->add_option("--out", out_path, "output report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(cal))
      return run_calibrate(method, val_path, test_path, out_path, theta_grid, bins);
    if (app.got_subcommand(syn))
      return run_synth(classes, samples, true_temp, concentration, seed,
                       out_path, posteriors_path);
    if (app.got_subcommand(swp))
      return run_sweep(axis, points, reps, seed, out_path);
    if (app.got_subcommand(ref))
      return run_referral(source, val_path, test_path, step, out_path);
  } catch (const calib::ValidationError& ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return 2;
  } catch (const calib::FitError& ex) {
    std::cerr << "fit error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return 4;
  }
  return 4;
}
