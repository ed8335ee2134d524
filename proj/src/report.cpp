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

#include "resyndet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "resyndet/error.hpp"

namespace resyndet::harness {
namespace {

using nlohmann::json;

constexpr const char* kScoresFormat = "resyndet-scores";
constexpr const char* kReportFormat = "resyndet-report";
constexpr int kVersion = 1;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Non-finite values become strings so they survive JSON.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

double from_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return kNaN;
  throw DataError("score file: bad number '" + s + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<double> column(const std::vector<TrialScores>& trials, bool target, auto&& get) {
  std::vector<double> out;
  for (const auto& t : trials) {
    if (t.trial.is_target == target) out.push_back(get(t));
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string epsilon_label(double epsilon) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", epsilon);
  return buf;
}

void ScoreTable::validate() const {
  const std::size_t nm = methods.size();
  const std::size_t ne = epsilons.size();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    bool ok = t.genuine_resynth.size() == nm && t.control_resynth.size() == nm && t.adversarial.size() == ne &&
              t.linf.size() == ne && t.iterations.size() == ne && t.adversarial_resynth.size() == ne;
    for (const auto& row : t.adversarial_resynth) ok = ok && row.size() == nm;
    if (!ok) throw DataError("score table: trial " + std::to_string(i) + " has inconsistent dimensions");
  }
}

void write_scores(const std::filesystem::path& path, const ScoreTable& table) {
  table.validate();
  auto out = open_out(path);
  json header = {{"format", kScoresFormat}, {"version", kVersion}, {"methods", table.methods},
                 {"epsilons", table.epsilons}, {"n_trials", table.trials.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < table.trials.size(); ++i) {
    const auto& t = table.trials[i];
    json adv_r = json::array();
    for (const auto& row : t.adversarial_resynth) adv_r.push_back(row);
    json j = {{"index", i},
              {"target", t.trial.is_target},
              {"enroll", t.trial.enroll},
              {"test", t.trial.test},
              {"score", t.score},
              {"genuine_resynth", t.genuine_resynth},
              {"control_score", t.control_score},
              {"control_resynth", t.control_resynth},
              {"adversarial", t.adversarial},
              {"linf", t.linf},
              {"iterations", t.iterations},
              {"adversarial_resynth", adv_r}};
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

ScoreTable read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file " + path.string());
  ScoreTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (line_no == 1) {
        if (j.at("format").get<std::string>() != kScoresFormat || j.at("version").get<int>() != kVersion) {
          throw DataError("not a version 1 score file");
        }
        table.methods = j.at("methods").get<std::vector<std::string>>();
        table.epsilons = j.at("epsilons").get<std::vector<double>>();
        expected = j.at("n_trials").get<std::size_t>();
        continue;
      }
      TrialScores t;
      if (j.at("index").get<std::size_t>() != table.trials.size()) throw DataError("trial index out of order");
      t.trial = {j.at("target").get<bool>(), j.at("enroll").get<std::string>(), j.at("test").get<std::string>()};
      t.score = from_num(j.at("score"));
      t.genuine_resynth = j.at("genuine_resynth").get<std::vector<double>>();
      t.control_score = from_num(j.at("control_score"));
      t.control_resynth = j.at("control_resynth").get<std::vector<double>>();
      t.adversarial = j.at("adversarial").get<std::vector<double>>();
      t.linf = j.at("linf").get<std::vector<double>>();
      t.iterations = j.at("iterations").get<std::vector<std::size_t>>();
      t.adversarial_resynth = j.at("adversarial_resynth").get<std::vector<std::vector<double>>>();
      table.trials.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (line_no == 0) throw DataError(path.string() + ": empty score file");
  if (table.trials.size() != expected) {
    throw DataError(path.string() + ": expected " + std::to_string(expected) + " trials, found " +
                    std::to_string(table.trials.size()));
  }
  table.validate();
  return table;
}

MethodVariations variations(const ScoreTable& table, std::size_t m) {
  MethodVariations v;
  v.adversarial.resize(table.epsilons.size());
  for (const auto& t : table.trials) {
    v.genuine.push_back(detect::score_variation(t.score, t.genuine_resynth[m]));
    v.control.push_back(detect::score_variation(t.control_score, t.control_resynth[m]));
    for (std::size_t e = 0; e < table.epsilons.size(); ++e) {
      v.adversarial[e].push_back(detect::score_variation(t.adversarial[e], t.adversarial_resynth[e][m]));
    }
  }
  return v;
}

Report make_report(const ScoreTable& table, const std::vector<double>& fpr_given, std::size_t histogram_bins) {
  table.validate();
  if (table.trials.empty()) throw DataError("report: no trials");
  if (histogram_bins < 1) throw InvalidArgument("report: histogram needs at least one bin");
  const std::size_t ne = table.epsilons.size();
  Report r;
  r.methods = table.methods;
  r.epsilons = table.epsilons;
  r.fpr_given = fpr_given;
  r.n_trials = table.trials.size();
  for (const auto& t : table.trials) r.n_target += t.trial.is_target ? 1 : 0;
  if (r.n_target == 0 || r.n_target == r.n_trials) throw DataError("report: trials must include both labels");

  r.genuine_eer = detect::compute_eer(column(table.trials, true, [](auto& t) { return t.score; }),
                                      column(table.trials, false, [](auto& t) { return t.score; }));
  for (std::size_t e = 0; e < ne; ++e) {
    auto get = [e](const TrialScores& t) { return t.adversarial[e]; };
    r.attacked_eer.push_back(detect::compute_eer(column(table.trials, true, get), column(table.trials, false, get)));
    double worst = 0.0;
    for (const auto& t : table.trials) worst = std::max(worst, t.linf[e]);
    r.max_linf.push_back(worst * 32768.0);
  }

  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    const MethodVariations v = variations(table, m);
    MethodReport mr;
    mr.method = table.methods[m];
    mr.auc.assign(ne, kNaN);
    mr.roc.resize(ne);
    mr.detection_rate.assign(fpr_given.size(), std::vector<double>(ne, kNaN));
    for (std::size_t f = 0; f < fpr_given.size(); ++f) {
      const auto th = detect::calibrate_threshold(v.genuine, fpr_given[f]);
      mr.thresholds.push_back(th);
      mr.control_rate.push_back(detect::detection_rate(v.control, th));
      for (std::size_t e = 0; e < ne; ++e) {
        if (table.epsilons[e] > 0.0) mr.detection_rate[f][e] = detect::detection_rate(v.adversarial[e], th);
      }
    }
    double hi = *std::max_element(v.genuine.begin(), v.genuine.end());
    for (std::size_t e = 0; e < ne; ++e) {
      if (table.epsilons[e] > 0.0) {
        mr.roc[e] = detect::roc_and_auc(v.genuine, v.adversarial[e]);
        mr.auc[e] = mr.roc[e].auc;
      }
      hi = std::max(hi, *std::max_element(v.adversarial[e].begin(), v.adversarial[e].end()));
    }
    if (!(hi > 0.0)) hi = 1.0;
    const auto bins = static_cast<double>(histogram_bins);
    mr.histogram.resize(histogram_bins);
    for (std::size_t b = 0; b < histogram_bins; ++b) {
      mr.histogram[b].lo = hi * static_cast<double>(b) / bins;
      mr.histogram[b].hi = hi * static_cast<double>(b + 1) / bins;
      mr.histogram[b].counts.assign(ne + 1, 0);
    }
    auto add = [&](double d, std::size_t series) {
      const auto b = std::min(histogram_bins - 1, static_cast<std::size_t>(std::floor(d / hi * bins)));
      ++mr.histogram[b].counts[series];
    };
    for (double d : v.genuine) add(d, 0);
    for (std::size_t e = 0; e < ne; ++e) {
      for (double d : v.adversarial[e]) add(d, e + 1);
    }
    r.per_method.push_back(std::move(mr));
  }
  return r;
}

void write_report(const std::filesystem::path& dir, const Report& r, const json& config) {
  std::filesystem::create_directories(dir);
  const std::size_t ne = r.epsilons.size();
  std::vector<std::size_t> attacked;  // epsilon indices with a real attack
  for (std::size_t e = 0; e < ne; ++e) {
    if (r.epsilons[e] > 0.0) attacked.push_back(e);
  }
  const auto fn = format_number;

  {
    auto out = open_out(dir / "table1_eer.csv");
    out << "epsilon,eer,max_linf_pcm16\n";
    out << "none," << fn(r.genuine_eer) << ",0\n";
    for (std::size_t e = 0; e < ne; ++e) {
      out << epsilon_label(r.epsilons[e]) << ',' << fn(r.attacked_eer[e]) << ',' << fn(r.max_linf[e]) << '\n';
    }
  }
  {
    auto out = open_out(dir / "table2_auc.csv");
    out << "method";
    for (auto e : attacked) out << ",eps_" << epsilon_label(r.epsilons[e]);
    out << '\n';
    for (const auto& mr : r.per_method) {
      out << mr.method;
      for (auto e : attacked) out << ',' << fn(mr.auc[e]);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "table3_dr.csv");
    out << "method,fpr_given,tau,achieved_fpr";
    for (auto e : attacked) out << ",eps_" << epsilon_label(r.epsilons[e]);
    out << '\n';
    for (const auto& mr : r.per_method) {
      for (std::size_t f = 0; f < r.fpr_given.size(); ++f) {
        out << mr.method << ',' << fn(r.fpr_given[f]) << ',' << fn(mr.thresholds[f].tau) << ','
            << fn(mr.thresholds[f].achieved_fpr);
        for (auto e : attacked) out << ',' << fn(mr.detection_rate[f][e]);
        out << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "control_dr.csv");
    out << "method,fpr_given,tau,detection_rate\n";
    for (const auto& mr : r.per_method) {
      for (std::size_t f = 0; f < r.fpr_given.size(); ++f) {
        out << mr.method << ',' << fn(r.fpr_given[f]) << ',' << fn(mr.thresholds[f].tau) << ','
            << fn(mr.control_rate[f]) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "hist_d.csv");
    out << "method,bin_lo,bin_hi,genuine";
    for (std::size_t e = 0; e < ne; ++e) out << ",eps_" << epsilon_label(r.epsilons[e]);
    out << '\n';
    for (const auto& mr : r.per_method) {
      for (const auto& b : mr.histogram) {
        out << mr.method << ',' << fn(b.lo) << ',' << fn(b.hi);
        for (auto c : b.counts) out << ',' << c;
        out << '\n';
      }
    }
  }
  for (auto e : attacked) {
    auto out = open_out(dir / ("roc_eps" + epsilon_label(r.epsilons[e]) + ".csv"));
    out << "method,threshold,fpr,tpr\n";
    for (const auto& mr : r.per_method) {
      const auto& roc = mr.roc[e];
      for (std::size_t i = 0; i < roc.points.size(); ++i) {
        out << mr.method << ',' << fn(roc.thresholds[i]) << ',' << fn(roc.points[i].fpr) << ','
            << fn(roc.points[i].tpr) << '\n';
      }
    }
  }

  json j;
  j["format"] = kReportFormat;
  j["version"] = kVersion;
  j["config"] = config;
  j["n_trials"] = r.n_trials;
  j["n_target"] = r.n_target;
  j["genuine_eer"] = r.genuine_eer;
  j["epsilons"] = r.epsilons;
  j["fpr_given"] = r.fpr_given;
  json eer = json::array();
  for (std::size_t e = 0; e < ne; ++e) {
    eer.push_back({{"epsilon", r.epsilons[e]}, {"eer", r.attacked_eer[e]}, {"max_linf_pcm16", r.max_linf[e]}});
  }
  j["attacked_eer"] = eer;
  json methods = json::object();
  for (const auto& mr : r.per_method) {
    json m;
    json auc = json::object();
    for (auto e : attacked) auc[epsilon_label(r.epsilons[e])] = num(mr.auc[e]);
    m["auc"] = auc;
    json det = json::array();
    for (std::size_t f = 0; f < r.fpr_given.size(); ++f) {
      json rates = json::object();
      for (auto e : attacked) rates[epsilon_label(r.epsilons[e])] = num(mr.detection_rate[f][e]);
      det.push_back({{"fpr_given", r.fpr_given[f]},
                     {"tau", num(mr.thresholds[f].tau)},
                     {"achieved_fpr", mr.thresholds[f].achieved_fpr},
                     {"detection_rate", rates},
                     {"control_detection_rate", mr.control_rate[f]}});
    }
    m["detection"] = det;
    methods[mr.method] = m;
  }
  j["methods"] = methods;
  auto out = open_out(dir / "report.json");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + (dir / "report.json").string());
}

}  // namespace resyndet::harness
