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

#include "resyndet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "resyndet/error.hpp"

namespace resyndet::detect {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_non_empty(std::span<const double> v, const char* what) {
  if (v.empty()) throw InvalidArgument(std::string(what) + " must not be empty");
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (std::isnan(x)) throw InvalidArgument(std::string(what) + " contains NaN");
  }
}

// Count of values strictly greater than tau in a list sorted ascending.
std::size_t count_above_sorted(const std::vector<double>& ascending, double tau) {
  return static_cast<std::size_t>(ascending.end() -
                                  std::upper_bound(ascending.begin(), ascending.end(), tau));
}

}  // namespace

double score_variation(double s, double s_prime) { return std::abs(s - s_prime); }

double fraction_above(std::span<const double> values, double tau) {
  require_non_empty(values, "value list");
  std::size_t n = 0;
  for (double v : values) n += v > tau ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(values.size());
}

DetectionThreshold calibrate_threshold(std::span<const double> d_genuine, double fpr_given) {
  require_non_empty(d_genuine, "genuine score variations");
  require_finite(d_genuine, "genuine score variations");
  if (!(fpr_given >= 0.0 && fpr_given <= 1.0)) {
    throw InvalidArgument("fpr_given must lie in [0, 1]");
  }
  std::vector<double> desc(d_genuine.begin(), d_genuine.end());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const std::size_t count = desc.size();
  // The small slack absorbs products such as 0.07 * 100 = 7.000000000000001
  // and 0.29 * 100 = 28.999999999999996.
  const auto m = static_cast<std::size_t>(std::floor(fpr_given * static_cast<double>(count) + 1e-9));

  DetectionThreshold out;
  out.fpr_given = fpr_given;
  out.tau = m >= count ? -kInf : desc[m];
  out.achieved_fpr = fraction_above(d_genuine, out.tau);
  return out;
}

double detection_rate(std::span<const double> d_adversarial, const DetectionThreshold& threshold) {
  require_non_empty(d_adversarial, "adversarial score variations");
  return fraction_above(d_adversarial, threshold.tau);
}

RocCurve roc_and_auc(std::span<const double> d_genuine, std::span<const double> d_adversarial) {
  require_non_empty(d_genuine, "genuine score variations");
  require_non_empty(d_adversarial, "adversarial score variations");
  require_finite(d_genuine, "genuine score variations");
  require_finite(d_adversarial, "adversarial score variations");

  std::vector<double> gen(d_genuine.begin(), d_genuine.end());
  std::vector<double> adv(d_adversarial.begin(), d_adversarial.end());
  std::sort(gen.begin(), gen.end());
  std::sort(adv.begin(), adv.end());

  std::vector<double> taus;
  taus.reserve(gen.size() + adv.size() + 2);
  taus.insert(taus.end(), gen.begin(), gen.end());
  taus.insert(taus.end(), adv.begin(), adv.end());
  std::sort(taus.begin(), taus.end(), std::greater<>());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  taus.insert(taus.begin(), kInf);
  taus.push_back(-kInf);

  RocCurve roc;
  roc.thresholds = taus;
  roc.points.reserve(taus.size());
  const auto n_gen = static_cast<double>(gen.size());
  const auto n_adv = static_cast<double>(adv.size());
  for (double tau : taus) {
    roc.points.push_back({static_cast<double>(count_above_sorted(gen, tau)) / n_gen,
                          static_cast<double>(count_above_sorted(adv, tau)) / n_adv});
  }
  double auc = 0.0;
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  roc.auc = auc;
  return roc;
}

double compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores) {
  require_non_empty(target_scores, "target scores");
  require_non_empty(nontarget_scores, "non-target scores");
  require_finite(target_scores, "target scores");
  require_finite(nontarget_scores, "non-target scores");

  std::vector<double> tar(target_scores.begin(), target_scores.end());
  std::vector<double> non(nontarget_scores.begin(), nontarget_scores.end());
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());

  std::vector<double> taus;
  taus.reserve(tar.size() + non.size() + 2);
  taus.push_back(-kInf);
  taus.insert(taus.end(), tar.begin(), tar.end());
  taus.insert(taus.end(), non.begin(), non.end());
  std::sort(taus.begin() + 1, taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  taus.push_back(kInf);

  const auto n_tar = static_cast<double>(tar.size());
  const auto n_non = static_cast<double>(non.size());
  // FAR(tau) = |{non >= tau}|, FRR(tau) = |{tar < tau}|; FAR falls and FRR
  // rises as tau increases.
  auto far = [&](double tau) {
    const auto it = std::lower_bound(non.begin(), non.end(), tau);
    return static_cast<double>(non.end() - it) / n_non;
  };
  auto frr = [&](double tau) {
    const auto it = std::lower_bound(tar.begin(), tar.end(), tau);
    return static_cast<double>(it - tar.begin()) / n_tar;
  };

  double prev_far = far(taus.front());
  double prev_frr = frr(taus.front());
  for (std::size_t i = 1; i < taus.size(); ++i) {
    const double cur_far = far(taus[i]);
    const double cur_frr = frr(taus[i]);
    const double cur_diff = cur_far - cur_frr;
    if (cur_diff <= 0.0) {
      if (cur_diff == 0.0) return cur_far;
      const double prev_diff = prev_far - prev_frr;
      const double t = prev_diff / (prev_diff - cur_diff);
      return prev_far + t * (cur_far - prev_far);
    }
    prev_far = cur_far;
    prev_frr = cur_frr;
  }
  return prev_far;  // unreachable: at +inf FAR = 0 and FRR = 1
}

}  // namespace resyndet::detect
