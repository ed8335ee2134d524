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

#include "resyndet/asv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "resyndet/detect.hpp"
#include "resyndet/error.hpp"
#include "resyndet/fft.hpp"
#include "resyndet/random.hpp"

namespace resyndet::asv {

void FeatureConfig::validate() const {
  if (n_mels < 1) throw InvalidArgument("feature n_mels must be at least 1");
  if (!(log_floor > 0.0)) throw InvalidArgument("feature log_floor must be positive");
  if (!(window_ms > 0.0) || !(hop_ms > 0.0)) throw InvalidArgument("feature window/hop must be positive");
  if (sample_rate <= 0) throw InvalidArgument("feature sample_rate must be positive");
}

dsp::StftConfig FeatureConfig::stft_config() const {
  return dsp::StftConfig::from_ms(window_ms, hop_ms, sample_rate, dsp::WindowKind::kHamming);
}

FeatureExtractor::FeatureExtractor(const FeatureConfig& cfg)
    : cfg_(cfg),
      stft_(cfg.stft_config()),
      window_(dsp::make_window(stft_.window_kind, stft_.window_len)),
      fb_(dsp::mel_filterbank(cfg.n_mels, stft_, cfg.sample_rate, cfg.fmin, cfg.effective_fmax())) {
  cfg_.validate();
}

void FeatureExtractor::check_input(const Waveform& x) const {
  if (x.sample_rate != cfg_.sample_rate) {
    throw DataError("waveform sample rate " + std::to_string(x.sample_rate) +
                    " does not match feature config " + std::to_string(cfg_.sample_rate));
  }
  if (x.size() < stft_.window_len) {
    throw DataError("waveform of " + std::to_string(x.size()) +
                    " samples is shorter than one analysis window (" +
                    std::to_string(stft_.window_len) + ")");
  }
}

Matrix FeatureExtractor::extract(const Waveform& x) const {
  check_input(x);
  const auto spec = dsp::stft(x, stft_, Execution::kSerial);
  Matrix power(static_cast<Eigen::Index>(spec.n_frames), static_cast<Eigen::Index>(spec.n_bins));
  for (std::size_t i = 0; i < spec.values.size(); ++i) power.data()[i] = std::norm(spec.values[i]);
  Matrix feats = power * fb_.weights.transpose();
  feats = (feats.array() + cfg_.log_floor).log().matrix();
  return feats;
}

std::vector<double> FeatureExtractor::backward(const Waveform& x, const Matrix& dfeat) const {
  check_input(x);
  const auto spec = dsp::stft(x, stft_, Execution::kSerial);
  const auto n_frames = spec.n_frames;
  const auto n_bins = spec.n_bins;
  if (static_cast<std::size_t>(dfeat.rows()) != n_frames ||
      static_cast<std::size_t>(dfeat.cols()) != cfg_.n_mels) {
    throw InvalidArgument("feature gradient shape does not match the waveform's features");
  }
  Matrix power(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(n_bins));
  for (std::size_t i = 0; i < spec.values.size(); ++i) power.data()[i] = std::norm(spec.values[i]);
  const Matrix mel = power * fb_.weights.transpose();
  // d/d mel of log(mel + floor), then back through the filterbank to power.
  const Matrix dmel = (dfeat.array() / (mel.array() + cfg_.log_floor)).matrix();
  const Matrix dpower = dmel * fb_.weights;

  const RealFft fft(stft_.fft_len);
  const std::size_t nyquist = stft_.fft_len / 2;
  const long long pad = static_cast<long long>(stft_.pad());
  std::vector<double> grad(x.size(), 0.0);
  std::vector<std::complex<double>> half(n_bins);
  std::vector<double> dframe(stft_.fft_len);
  for (std::size_t t = 0; t < n_frames; ++t) {
    // dP_k/dy_n = 2 Re(X_k e^{+i w k n}); the c2r transform doubles the
    // interior bins itself, so only DC and Nyquist need the explicit factor.
    for (std::size_t k = 0; k < n_bins; ++k) {
      half[k] = dpower(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) * spec.at(t, k);
    }
    half[0] *= 2.0;
    half[nyquist] *= 2.0;
    fft.inverse(half, dframe);
    const long long start = static_cast<long long>(t * stft_.hop_len) - pad;
    for (std::size_t n = 0; n < stft_.window_len; ++n) {
      const long long idx = start + static_cast<long long>(n);
      const std::size_t src = (idx >= 0 && idx < static_cast<long long>(x.size()))
                                  ? static_cast<std::size_t>(idx)
                                  : dsp::reflect_index(idx, x.size());
      grad[src] += window_[n] * dframe[n];
    }
  }
  return grad;
}

Matrix extract_features(const Waveform& x, const FeatureConfig& cfg) {
  return FeatureExtractor(cfg).extract(x);
}

void AsvModel::validate() const {
  features.validate();
  const auto n_mels = static_cast<Eigen::Index>(features.n_mels);
  if (w1.rows() < 1 || w1.cols() != n_mels) throw DataError("model W1 must be hidden x n_mels");
  if (b1.size() != w1.rows()) throw DataError("model b1 length must equal hidden dim");
  if (w2.cols() != w1.rows()) throw DataError("model W2 must be embedding x hidden");
  if (w2.rows() < 2) throw DataError("model embedding dim must be at least 2");
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite()) {
    throw DataError("model parameters must be finite");
  }
}

Vector mean_pool(const Matrix& features) {
  if (features.rows() == 0) throw InvalidArgument("cannot pool an empty feature matrix");
  return features.colwise().mean().transpose();
}

namespace {

struct Forward {
  Vector pooled;
  Vector hidden;  // tanh activations
  Vector z;       // pre-normalization embedding
  double norm = 0.0;
  Vector e;
};

Forward forward(const Vector& pooled, const AsvModel& m) {
  Forward f;
  f.pooled = pooled;
  f.hidden = (m.w1 * pooled + m.b1).array().tanh().matrix();
  f.z = m.w2 * f.hidden;
  f.norm = f.z.norm();
  if (!(f.norm > 0.0) || !std::isfinite(f.norm)) {
    throw NumericalError("embedding has zero or non-finite norm before normalization");
  }
  f.e = f.z / f.norm;
  return f;
}

// Gradient of (e . target) with respect to the pooled features, plus
// parameter gradients when requested.
struct Backward {
  Vector dpooled;
  Matrix dw1;
  Vector db1;
  Matrix dw2;
};

Backward backward(const Forward& f, const Vector& de, const AsvModel& m, bool params) {
  Backward b;
  const double proj = f.e.dot(de);
  const Vector dz = (de - proj * f.e) / f.norm;
  const Vector dh = m.w2.transpose() * dz;
  const Vector da = (dh.array() * (1.0 - f.hidden.array().square())).matrix();
  b.dpooled = m.w1.transpose() * da;
  if (params) {
    b.dw2 = dz * f.hidden.transpose();
    b.dw1 = da * f.pooled.transpose();
    b.db1 = da;
  }
  return b;
}

}  // namespace

Embedding embed_pooled(const Vector& pooled, const AsvModel& model) {
  if (static_cast<std::size_t>(pooled.size()) != model.features.n_mels) {
    throw InvalidArgument("pooled feature size does not match model n_mels");
  }
  return {forward(pooled, model).e};
}

Embedding embed(const Matrix& features, const AsvModel& model) {
  if (static_cast<std::size_t>(features.cols()) != model.features.n_mels) {
    throw InvalidArgument("feature matrix has " + std::to_string(features.cols()) +
                          " columns, model expects " + std::to_string(model.features.n_mels));
  }
  return embed_pooled(mean_pool(features), model);
}

Embedding embed_waveform(const Waveform& x, const AsvModel& model) {
  return embed(extract_features(x, model.features), model);
}

double cosine_score(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) throw InvalidArgument("embedding dimensions differ");
  return std::clamp(a.values.dot(b.values), -1.0, 1.0);
}

double score(const Waveform& test, const Waveform& enroll, const AsvModel& model) {
  return cosine_score(embed_waveform(test, model), embed_waveform(enroll, model));
}

ScoreGradient score_gradient(const Waveform& test, const Embedding& enroll, const AsvModel& model) {
  const FeatureExtractor extractor(model.features);
  const Matrix feats = extractor.extract(test);
  const Forward f = forward(mean_pool(feats), model);
  ScoreGradient out;
  // The unclamped dot product; clamping only matters for rounding at +-1.
  out.score = std::clamp(f.e.dot(enroll.values), -1.0, 1.0);
  const Backward b = backward(f, enroll.values, model, false);
  const double inv_frames = 1.0 / static_cast<double>(feats.rows());
  Matrix dfeat(feats.rows(), feats.cols());
  for (Eigen::Index t = 0; t < feats.rows(); ++t) dfeat.row(t) = b.dpooled.transpose() * inv_frames;
  out.grad = extractor.backward(test, dfeat);
  return out;
}

ScoreGradient score_gradient(const Waveform& test, const Waveform& enroll, const AsvModel& model) {
  return score_gradient(test, embed_waveform(enroll, model), model);
}

namespace {

// Per-dimension standardization of pooled features: z = (p - mean) * scale.
struct Standardizer {
  Vector mean;
  Vector scale;
};

Standardizer fit_standardizer(const std::vector<Vector>& pooled, Eigen::Index n_mels) {
  Standardizer st{Vector::Zero(n_mels), Vector::Ones(n_mels)};
  if (pooled.empty()) return st;
  for (const auto& p : pooled) st.mean += p;
  st.mean /= static_cast<double>(pooled.size());
  Vector var = Vector::Zero(n_mels);
  for (const auto& p : pooled) var += (p - st.mean).array().square().matrix();
  var /= static_cast<double>(pooled.size());
  for (Eigen::Index i = 0; i < n_mels; ++i) st.scale(i) = 1.0 / std::sqrt(var(i) + 1e-6);
  return st;
}

// Seeded weights acting on standardized input.
AsvModel standardized_init(const TrainConfig& cfg) {
  cfg.features.validate();
  if (cfg.hidden_dim < 1 || cfg.embedding_dim < 2) {
    throw InvalidArgument("hidden_dim must be >= 1 and embedding_dim >= 2");
  }
  const auto n_mels = static_cast<Eigen::Index>(cfg.features.n_mels);
  const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
  const auto d = static_cast<Eigen::Index>(cfg.embedding_dim);
  Rng rng(cfg.seed);
  AsvModel m;
  m.features = cfg.features;
  m.w1.resize(h, n_mels);
  m.w2.resize(d, h);
  m.b1 = Vector::Zero(h);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(n_mels));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < n_mels; ++j) m.w1(i, j) = rng.normal() * s1;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) m.w2(i, j) = rng.normal() * s2;
  }
  return m;
}

// A level change shifts every log-mel entry by the same constant, which in
// standardized coordinates is the direction `scale`. Rows of W1 orthogonal to
// it make the folded W1 sum to zero per row, so gain drops out of the score.
void remove_gain_direction(Matrix& w1, const Vector& scale) {
  const Vector u = scale.normalized();
  w1 -= (w1 * u) * u.transpose();
}

// W1 z + b1 = (W1 diag(scale)) p + (b1 - W1 diag(scale) mean).
AsvModel fold(const AsvModel& standardized, const Standardizer& st) {
  AsvModel m = standardized;
  m.w1 = standardized.w1 * st.scale.asDiagonal();
  m.b1 = standardized.b1 - m.w1 * st.mean;
  return m;
}

}  // namespace

AsvModel initialize_model(const std::vector<Vector>& pooled, const TrainConfig& cfg) {
  AsvModel m = standardized_init(cfg);
  const Standardizer st = fit_standardizer(pooled, m.w1.cols());
  remove_gain_direction(m.w1, st.scale);
  return fold(m, st);
}

namespace {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

double validation_eer(const std::vector<Vector>& pooled, const std::vector<std::size_t>& speaker,
                      const Split& split, const AsvModel& m) {
  std::vector<Vector> emb(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) emb[i] = forward(pooled[i], m).e;
  std::vector<double> tar;
  std::vector<double> non;
  for (std::size_t v : split.validation) {
    for (std::size_t t : split.train) {
      const double s = emb[v].dot(emb[t]);
      (speaker[v] == speaker[t] ? tar : non).push_back(s);
    }
  }
  return detect::compute_eer(tar, non);
}

}  // namespace

TrainResult train_model(const std::vector<LabeledUtterance>& corpus, const TrainConfig& cfg) {
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_speaker[corpus[i].speaker].push_back(i);
  if (by_speaker.size() < 2) throw DataError("training corpus needs at least 2 speakers");
  for (const auto& [spk, utts] : by_speaker) {
    if (utts.size() < 2) throw DataError("speaker '" + spk + "' has fewer than 2 utterances");
  }
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw InvalidArgument("validation_fraction must lie in (0, 1)");
  }
  if (cfg.batch_pairs < 2) throw InvalidArgument("batch_pairs must be at least 2");

  const FeatureExtractor extractor(cfg.features);
  std::vector<Vector> pooled(corpus.size());
  for_each_index(corpus.size(), Execution::kParallel,
                 [&](std::size_t i) { pooled[i] = mean_pool(extractor.extract(corpus[i].audio)); });

  // Per speaker, the last utterances (in corpus order) are held out.
  Split split;
  std::vector<std::size_t> speaker_of(corpus.size());
  std::vector<std::vector<std::size_t>> train_by_speaker;
  std::size_t spk_index = 0;
  for (const auto& [spk, utts] : by_speaker) {
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(utts.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, utts.size() - 1);
    std::vector<std::size_t> train_utts(utts.begin(), utts.end() - static_cast<long>(n_val));
    split.train.insert(split.train.end(), train_utts.begin(), train_utts.end());
    split.validation.insert(split.validation.end(), utts.end() - static_cast<long>(n_val), utts.end());
    for (std::size_t u : utts) speaker_of[u] = spk_index;
    train_by_speaker.push_back(std::move(train_utts));
    ++spk_index;
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());

  std::vector<Vector> train_pooled;
  for (std::size_t i : split.train) train_pooled.push_back(pooled[i]);

  TrainResult result;
  AsvModel m = standardized_init(cfg);
  const Standardizer st = fit_standardizer(train_pooled, m.w1.cols());
  remove_gain_direction(m.w1, st.scale);
  for (auto& p : pooled) p = ((p - st.mean).array() * st.scale.array()).matrix();
  result.initial_validation_eer = validation_eer(pooled, speaker_of, split, m);

  Rng rng(derive_seed(cfg.seed, 1));
  const std::size_t n_spk = train_by_speaker.size();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Matrix gw1 = Matrix::Zero(m.w1.rows(), m.w1.cols());
    Vector gb1 = Vector::Zero(m.b1.size());
    Matrix gw2 = Matrix::Zero(m.w2.rows(), m.w2.cols());
    double loss = 0.0;
    for (std::size_t pair = 0; pair < cfg.batch_pairs; ++pair) {
      const bool same = pair % 2 == 0;
      std::size_t a = 0;
      std::size_t b = 0;
      if (same) {
        const auto& utts = train_by_speaker[rng.index(n_spk)];
        a = utts[rng.index(utts.size())];
        do {
          b = utts[rng.index(utts.size())];
        } while (b == a && utts.size() > 1);
      } else {
        const std::size_t sa = rng.index(n_spk);
        std::size_t sb = rng.index(n_spk - 1);
        if (sb >= sa) ++sb;
        a = train_by_speaker[sa][rng.index(train_by_speaker[sa].size())];
        b = train_by_speaker[sb][rng.index(train_by_speaker[sb].size())];
      }
      const double y = same ? 1.0 : 0.0;
      const Forward fa = forward(pooled[a], m);
      const Forward fb = forward(pooled[b], m);
      const double s = fa.e.dot(fb.e);
      loss += (s - y) * (s - y);
      const double dl_ds = 2.0 * (s - y) / static_cast<double>(cfg.batch_pairs);
      const Backward ba = backward(fa, fb.e * dl_ds, m, true);
      const Backward bb = backward(fb, fa.e * dl_ds, m, true);
      gw1 += ba.dw1 + bb.dw1;
      gb1 += ba.db1 + bb.db1;
      gw2 += ba.dw2 + bb.dw2;
    }
    result.loss_history.push_back(loss / static_cast<double>(cfg.batch_pairs));
    remove_gain_direction(gw1, st.scale);
    m.w1 -= cfg.learning_rate * gw1;
    m.b1 -= cfg.learning_rate * gb1;
    m.w2 -= cfg.learning_rate * gw2;
  }
  result.final_validation_eer = validation_eer(pooled, speaker_of, split, m);
  result.model = fold(m, st);
  result.model.validate();
  return result;
}

namespace {

using nlohmann::json;

constexpr const char* kModelFormat = "resyndet-asv-model";
constexpr int kModelVersion = 1;

json matrix_to_json(const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw DataError(std::string("model field '") + name + "' has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(rows * cols));
  }
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

std::string model_to_json(const AsvModel& model) {
  model.validate();
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  const auto& f = model.features;
  j["features"] = {{"window_ms", f.window_ms}, {"hop_ms", f.hop_ms},       {"n_mels", f.n_mels},
                   {"fmin", f.fmin},           {"fmax", f.fmax},           {"log_floor", f.log_floor},
                   {"sample_rate", f.sample_rate}};
  j["hidden_dim"] = model.hidden_dim();
  j["embedding_dim"] = model.embedding_dim();
  j["w1"] = matrix_to_json(model.w1);
  j["b1"] = std::vector<double>(model.b1.data(), model.b1.data() + model.b1.size());
  j["w2"] = matrix_to_json(model.w2);
  return j.dump(1);
}

AsvModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw DataError("not a resyndet model file");
    if (j.at("version").get<int>() != kModelVersion) {
      throw DataError("unsupported model version " + std::to_string(j.at("version").get<int>()));
    }
    AsvModel m;
    const auto& f = j.at("features");
    m.features.window_ms = f.at("window_ms").get<double>();
    m.features.hop_ms = f.at("hop_ms").get<double>();
    m.features.n_mels = f.at("n_mels").get<std::size_t>();
    m.features.fmin = f.at("fmin").get<double>();
    m.features.fmax = f.at("fmax").get<double>();
    m.features.log_floor = f.at("log_floor").get<double>();
    m.features.sample_rate = f.at("sample_rate").get<int>();
    const auto h = j.at("hidden_dim").get<Eigen::Index>();
    const auto d = j.at("embedding_dim").get<Eigen::Index>();
    const auto n_mels = static_cast<Eigen::Index>(m.features.n_mels);
    m.w1 = matrix_from_json(j.at("w1"), h, n_mels, "w1");
    const Matrix b1 = matrix_from_json(j.at("b1"), h, 1, "b1");
    m.b1 = Eigen::Map<const Vector>(b1.data(), h);
    m.w2 = matrix_from_json(j.at("w2"), d, h, "w2");
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const AsvModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << model_to_json(model) << '\n';
}

AsvModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace resyndet::asv
