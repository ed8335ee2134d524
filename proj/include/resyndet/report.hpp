// Copyright 2026 The resyndet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "resyndet/detect.hpp"
#include "resyndet/trials.hpp"

namespace resyndet::harness {

/// Every score the experiment produced for one trial. Index m runs over
/// methods, index e over epsilons.
struct TrialScores {
  Trial trial;
  double score = 0.0;                      // s(test, enroll)
  std::vector<double> genuine_resynth;     // [m] s(R(test), enroll)
  double control_score = 0.0;              // s(noisy test, enroll)
  std::vector<double> control_resynth;     // [m] s(R(noisy test), enroll)
  std::vector<double> adversarial;         // [e] s(adv, enroll)
  std::vector<double> linf;                // [e] max |adv - test|
  std::vector<std::size_t> iterations;     // [e] attack steps executed
  std::vector<std::vector<double>> adversarial_resynth;  // [e][m] s(R(adv), enroll)

  friend bool operator==(const TrialScores&, const TrialScores&) = default;
};

/// Per-trial scores plus the axes they are indexed by, in trial order.
struct ScoreTable {
  std::vector<std::string> methods;
  std::vector<double> epsilons;
  std::vector<TrialScores> trials;

  void validate() const;
};

/// One JSON object per line: a header, then one line per trial.
void write_scores(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable read_scores(const std::filesystem::path& path);

/// Score-variation sets for one method.
struct MethodVariations {
  std::vector<double> genuine;                   // [trial]
  std::vector<double> control;                   // [trial]
  std::vector<std::vector<double>> adversarial;  // [e][trial]
};

MethodVariations variations(const ScoreTable& table, std::size_t method);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;  // genuine, then one per epsilon
};

struct MethodReport {
  std::string method;
  std::vector<detect::DetectionThreshold> thresholds;  // [fpr]
  std::vector<double> auc;                             // [e], NaN at epsilon 0
  std::vector<std::vector<double>> detection_rate;     // [fpr][e], NaN at epsilon 0
  std::vector<double> control_rate;                    // [fpr]
  std::vector<detect::RocCurve> roc;                   // [e], empty at epsilon 0
  std::vector<HistogramBin> histogram;
};

struct Report {
  std::vector<std::string> methods;
  std::vector<double> epsilons;
  std::vector<double> fpr_given;
  std::size_t n_trials = 0;
  std::size_t n_target = 0;
  double genuine_eer = 0.0;
  std::vector<double> attacked_eer;  // [e]
  std::vector<double> max_linf;      // [e], in PCM16 units
  std::vector<MethodReport> per_method;
};

/// Aggregates the per-trial table. Thresholds are calibrated on genuine
/// variations only.
Report make_report(const ScoreTable& table, const std::vector<double>& fpr_given, std::size_t histogram_bins);

/// Writes report.json, table1_eer.csv, table2_auc.csv, table3_dr.csv,
/// control_dr.csv, hist_d.csv and roc_eps<e>.csv into dir. `config` is echoed
/// into report.json.
void write_report(const std::filesystem::path& dir, const Report& report, const nlohmann::json& config);

/// Fixed-precision text used in every CSV cell.
std::string format_number(double v);

/// Label used in file names and columns for an epsilon ("5", "2.5").
std::string epsilon_label(double epsilon);

}  // namespace resyndet::harness
