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

#include <span>
#include <vector>

namespace resyndet::detect {

/// |s - s'|, the change of the verification score caused by re-synthesis.
double score_variation(double s, double s_prime);

/// Threshold calibrated on genuine score variations only. An input is
/// labelled adversarial when d > tau (strict).
struct DetectionThreshold {
  double tau = 0.0;  // may be -infinity
  double fpr_given = 0.0;
  double achieved_fpr = 0.0;
};

/// Smallest threshold from the genuine value set whose false positive rate
/// |{d > tau}| / I does not exceed fpr_given: with m = floor(fpr_given * I),
/// tau is the (m+1)-th largest value, or -infinity when m >= I.
DetectionThreshold calibrate_threshold(std::span<const double> d_genuine, double fpr_given);

/// Fraction of values strictly above tau.
double fraction_above(std::span<const double> values, double tau);

/// |{d in d_adv : d > tau}| / |d_adv|.
double detection_rate(std::span<const double> d_adversarial, const DetectionThreshold& threshold);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1), both coordinates non-decreasing
  std::vector<double> thresholds;  // +inf, distinct values descending, -inf
  double auc = 0.0;
};

/// Sweeps tau over +-infinity and every distinct value of both lists.
/// Positives are d_adversarial, negatives d_genuine. AUC by trapezoids.
RocCurve roc_and_auc(std::span<const double> d_genuine, std::span<const double> d_adversarial);

/// Equal error rate with false accepts counted as non-target >= tau and
/// false rejects as target < tau, linearly interpolated between the two
/// candidate thresholds where FAR - FRR changes sign.
double compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores);

}  // namespace resyndet::detect
