#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "calib/harness.hpp"

namespace calib {

class ParseError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Reads the textual logit table: one optional header row, then rows of
/// `label logit_0 ... logit_{K-1}` (whitespace- or comma-separated).
LogitDataset read_logit_file(const std::string& path);

/// Writes a logit table with a header row, 17 significant digits.
void write_logit_file(const std::string& path, const LogitDataset& dataset);

/// Posterior sidecar: rows of K probabilities, header `q_0 ... q_{K-1}`.
void write_posterior_file(const std::string& path,
                          const std::vector<double>& posteriors,
                          int class_count);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const CalibrationReport& r);
CalibrationReport report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SweepResult& r);
SweepResult sweep_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ReferralCurve& c);
ReferralCurve referral_from_json(const nlohmann::json& j);

/// Wraps a payload with the schema version and a kind tag
/// ("comparison" | "sweep" | "referral") and writes it.
void write_report_file(const std::string& path, const std::string& kind,
                       const nlohmann::json& payload);
nlohmann::json read_report_file(const std::string& path, std::string* kind);

}  // namespace calib
