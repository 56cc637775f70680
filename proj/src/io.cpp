#include "calib/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace calib {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double* out) {
  try {
    size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_label(const std::string& s, int* out) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  try {
    *out = std::stoi(s);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace

LogitDataset read_logit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open logit file: " + path);

  std::vector<int> labels;
  std::vector<double> logits;
  int columns = -1;  // K + 1 once known
  std::string line;
  long line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    line_no++;
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;
    if (header_allowed) {
      header_allowed = false;
      double probe;
      if (!parse_double(fields[0], &probe)) continue;  // header row
    }
    if (columns < 0) {
      columns = static_cast<int>(fields.size());
      if (columns < 3)
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected a label plus at least 2 logit columns");
    } else if (static_cast<int>(fields.size()) != columns) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " fields, found " +
                       std::to_string(fields.size()));
    }
    int label;
    if (!parse_label(fields[0], &label))
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": label column is not a non-negative integer: '" +
                       fields[0] + "'");
    labels.push_back(label);
    for (int c = 1; c < columns; ++c) {
      double v;
      if (!parse_double(fields[static_cast<size_t>(c)], &v) || !std::isfinite(v))
        throw ParseError(path + ":" + std::to_string(line_no) + ": column " +
                         std::to_string(c + 1) + " is not a finite number: '" +
                         fields[static_cast<size_t>(c)] + "'");
      logits.push_back(v);
    }
  }
  if (columns < 0) throw ParseError(path + ": no data rows");
  try {
    return LogitDataset(std::move(labels), std::move(logits), columns - 1);
  } catch (const ValidationError& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

namespace {

void write_table(const std::string& path, const std::string& header_prefix,
                 const std::vector<int>* labels, const double* values, long rows,
                 int cols) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  if (labels) out << "label";
  for (int c = 0; c < cols; ++c)
    out << (labels || c > 0 ? " " : "") << header_prefix << c;
  out << "\n";
  char buf[64];
  for (long i = 0; i < rows; ++i) {
    if (labels) out << (*labels)[static_cast<size_t>(i)];
    for (int c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g",
                    values[static_cast<size_t>(i) * cols + c]);
      if (labels || c > 0) out << ' ';
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace

void write_logit_file(const std::string& path, const LogitDataset& dataset) {
  write_table(path, "logit_", &dataset.labels(), dataset.logits().data(),
              dataset.sample_count(), dataset.class_count());
}

void write_posterior_file(const std::string& path,
                          const std::vector<double>& posteriors,
                          int class_count) {
  if (class_count < 2 || posteriors.size() % class_count != 0)
    throw ValidationError("posterior matrix size not a multiple of class_count");
  write_table(path, "q_", nullptr, posteriors.data(),
              static_cast<long>(posteriors.size()) / class_count, class_count);
}

using nlohmann::json;

namespace {

json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

json to_json(const CalibrationReport& r) {
  json j;
  j["method"] = r.method;
  j["accuracy_before"] = r.accuracy_before;
  j["accuracy_after"] = r.accuracy_after;
  j["nll_before"] = r.nll_before;
  j["nll_after"] = r.nll_after;
  j["ece_before"] = r.ece_before;
  j["ece_after"] = r.ece_after;
  j["ece_percent_before"] = r.ece_before * 100.0;
  j["ece_percent_after"] = r.ece_after * 100.0;
  j["brier_before"] = r.brier_before;
  j["brier_after"] = r.brier_after;
  j["referral_auc_before"] = r.referral_auc_before;
  j["referral_auc_after"] = r.referral_auc_after;
  j["temperature"] = opt_to_json(r.temperature);
  j["theta"] = opt_to_json(r.theta);
  j["scaler_classes"] =
      r.scaler_classes ? json(*r.scaler_classes) : json(nullptr);
  j["error"] = r.error;
  return j;
}

CalibrationReport report_from_json(const json& j) {
  CalibrationReport r;
  r.method = j.at("method").get<std::string>();
  r.accuracy_before = j.at("accuracy_before").get<double>();
  r.accuracy_after = j.at("accuracy_after").get<double>();
  r.nll_before = j.at("nll_before").get<double>();
  r.nll_after = j.at("nll_after").get<double>();
  r.ece_before = j.at("ece_before").get<double>();
  r.ece_after = j.at("ece_after").get<double>();
  r.brier_before = j.at("brier_before").get<double>();
  r.brier_after = j.at("brier_after").get<double>();
  r.referral_auc_before = j.at("referral_auc_before").get<double>();
  r.referral_auc_after = j.at("referral_auc_after").get<double>();
  r.temperature = opt_from_json(j.at("temperature"));
  r.theta = opt_from_json(j.at("theta"));
  if (!j.at("scaler_classes").is_null())
    r.scaler_classes = j.at("scaler_classes").get<int>();
  r.error = j.at("error").get<std::string>();
  return r;
}

json to_json(const SweepResult& r) {
  json j;
  j["axis"] = r.axis == SweepAxis::noise_rate ? "noise" : "size";
  j["repetitions"] = r.repetitions;
  j["seeds"] = r.seeds;
  j["std_unreliable"] = r.std_unreliable;
  json pts = json::array();
  for (const SweepPoint& p : r.points) {
    json q;
    q["axis_value"] = p.axis_value;
    q["ts"] = {{"mean_nll", p.ts.mean_nll},
               {"std_nll", p.ts.std_nll},
               {"mean_ece", p.ts.mean_ece}};
    q["ats"] = {{"mean_nll", p.ats.mean_nll},
                {"std_nll", p.ats.std_nll},
                {"mean_ece", p.ats.mean_ece}};
    pts.push_back(q);
  }
  j["points"] = pts;
  return j;
}

SweepResult sweep_from_json(const json& j) {
  SweepResult r;
  r.axis = j.at("axis").get<std::string>() == "noise" ? SweepAxis::noise_rate
                                                      : SweepAxis::validation_size;
  r.repetitions = j.at("repetitions").get<int>();
  r.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  r.std_unreliable = j.at("std_unreliable").get<bool>();
  for (const json& q : j.at("points")) {
    SweepPoint p;
    p.axis_value = q.at("axis_value").get<double>();
    p.ts = {q.at("ts").at("mean_nll").get<double>(),
            q.at("ts").at("std_nll").get<double>(),
            q.at("ts").at("mean_ece").get<double>()};
    p.ats = {q.at("ats").at("mean_nll").get<double>(),
             q.at("ats").at("std_nll").get<double>(),
             q.at("ats").at("mean_ece").get<double>()};
    r.points.push_back(p);
  }
  return r;
}

json to_json(const ReferralCurve& c) {
  json j;
  j["thresholds"] = c.thresholds;
  j["kept_correct_fraction"] = c.kept_correct_fraction;
  j["referred_wrong_fraction"] = c.referred_wrong_fraction;
  j["auc"] = c.auc;
  return j;
}

ReferralCurve referral_from_json(const json& j) {
  ReferralCurve c;
  c.thresholds = j.at("thresholds").get<std::vector<double>>();
  c.kept_correct_fraction =
      j.at("kept_correct_fraction").get<std::vector<double>>();
  c.referred_wrong_fraction =
      j.at("referred_wrong_fraction").get<std::vector<double>>();
  c.auc = j.at("auc").get<double>();
  return c;
}

void write_report_file(const std::string& path, const std::string& kind,
                       const json& payload) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["kind"] = kind;
  doc["payload"] = payload;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw ValidationError("write failed: " + path);
}

json read_report_file(const std::string& path, std::string* kind) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open report file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
  if (doc.at("schema_version").get<int>() != kReportSchemaVersion)
    throw ParseError(path + ": unsupported schema version");
  if (kind) *kind = doc.at("kind").get<std::string>();
  return doc.at("payload");
}

}  // namespace calib
