#include "chordrec/acoustic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "chordrec/error.hpp"
#include "chordrec/training.hpp"

namespace chordrec {

void CalibrationConfig::validate() const {
  if (!(tau > 0)) throw ParameterError("tau must be positive");
  if (!(beta > 0 && beta <= 1)) throw ParameterError("beta must lie in (0, 1]");
}

ProbMatrix temperature_softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits, double tau) {
  if (!(tau > 0)) throw ParameterError("softmax temperature must be positive");
  if (logits.cols() != kNumClasses) throw ShapeError("logits need 25 columns");
  ProbMatrix p(logits.rows(), kNumClasses);
  for (Eigen::Index t = 0; t < logits.rows(); ++t) p.row(t) = temperature_softmax(logits.row(t).transpose(), tau).transpose();
  return p;
}

ClassVector smooth_targets(ChordClass truth, double beta) {
  if (!(beta > 0 && beta <= 1)) throw ParameterError("beta must lie in (0, 1]");
  ClassVector q = ClassVector::Constant((1 - beta) / (kNumClasses - 1));
  q(truth.index()) = beta;
  return q;
}

// ---------------------------------------------------------------------------

FrameClassifier::FrameClassifier(int bands, int context)
    : bands_(bands),
      context_(context),
      weights_(Eigen::MatrixXd::Zero(kNumClasses, static_cast<Eigen::Index>(bands) * context)),
      bias_(ClassVector::Zero()),
      mean_(Eigen::VectorXd::Zero(bands)),
      scale_(Eigen::VectorXd::Ones(bands)) {
  if (bands < 1) throw ParameterError("classifier needs at least one band");
  if (context < 1 || context % 2 == 0) throw ParameterError("context must be a positive odd number of frames");
}

void FrameClassifier::check_bands(const Spectrogram& s) const {
  if (s.frames.cols() != bands_) {
    throw ShapeError("spectrogram has " + std::to_string(s.frames.cols()) + " bands, classifier expects " +
                     std::to_string(bands_));
  }
}

Eigen::VectorXd FrameClassifier::window(const Spectrogram& s, Eigen::Index t) const {
  const Eigen::Index T = s.frames.rows();
  const int half = context_ / 2;
  Eigen::VectorXd x(inputs());
  for (int k = 0; k < context_; ++k) {
    const Eigen::Index src = std::clamp<Eigen::Index>(t + k - half, 0, T - 1);
    x.segment(static_cast<Eigen::Index>(k) * bands_, bands_) =
        (s.frames.row(src).transpose() - mean_).cwiseProduct(scale_);
  }
  return x;
}

Eigen::MatrixXd FrameClassifier::logits(const Spectrogram& s) const {
  check_bands(s);
  Eigen::MatrixXd z(s.frames.rows(), kNumClasses);
  for (Eigen::Index t = 0; t < s.frames.rows(); ++t) z.row(t) = (weights_ * window(s, t) + bias_).transpose();
  return z;
}

PosteriorMatrix FrameClassifier::predict(const Spectrogram& s, double tau) const {
  if (s.frames.rows() == 0) throw ValidationError("empty spectrogram");
  PosteriorMatrix p;
  p.probs = temperature_softmax_rows(logits(s), tau);
  p.frame_rate = s.frame_rate;
  return p;
}

namespace {

std::vector<double> to_vec(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  // row-major flattening
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return v;
}

std::vector<double> array_at(const nlohmann::json& j, const char* key, std::size_t expected) {
  if (!j.contains(key)) throw ValidationError(std::string("classifier JSON lacks '") + key + "'");
  auto v = j.at(key).get<std::vector<double>>();
  if (expected && v.size() != expected) {
    throw ShapeError(std::string("classifier array '") + key + "' has " + std::to_string(v.size()) +
                     " entries, expected " + std::to_string(expected));
  }
  return v;
}

}  // namespace

nlohmann::json FrameClassifier::to_json() const {
  return {{"bands", {static_cast<double>(bands_)}},
          {"context", {static_cast<double>(context_)}},
          {"weights", to_vec(weights_)},
          {"bias", to_vec(bias_)},
          {"feature_mean", to_vec(mean_)},
          {"feature_scale", to_vec(scale_)}};
}

FrameClassifier FrameClassifier::from_json(const nlohmann::json& j) {
  try {
    const int bands = static_cast<int>(array_at(j, "bands", 1)[0]);
    const int context = static_cast<int>(array_at(j, "context", 1)[0]);
    FrameClassifier c(bands, context);
    const auto w = array_at(j, "weights", static_cast<std::size_t>(kNumClasses * c.inputs()));
    c.weights_ = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), kNumClasses, c.inputs());
    const auto b = array_at(j, "bias", kNumClasses);
    c.bias_ = Eigen::Map<const ClassVector>(b.data());
    const auto m = array_at(j, "feature_mean", static_cast<std::size_t>(bands));
    c.mean_ = Eigen::Map<const Eigen::VectorXd>(m.data(), bands);
    const auto s = array_at(j, "feature_scale", static_cast<std::size_t>(bands));
    c.scale_ = Eigen::Map<const Eigen::VectorXd>(s.data(), bands);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad classifier JSON: ") + e.what());
  } catch (const ParameterError& e) {
    throw ValidationError(std::string("bad classifier JSON: ") + e.what());
  }
}

FrameClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return FrameClassifier::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_classifier(const std::filesystem::path& path, const FrameClassifier& c) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << c.to_json().dump() << '\n';
}

// ---------------------------------------------------------------------------

StandinResult train_standin(std::span<const Spectrogram> spectrograms,
                            std::span<const std::vector<MaybeChord>> labels, const StandinConfig& config) {
  config.calibration.validate();
  if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0)) {
    throw ParameterError("invalid stand-in training parameters");
  }
  if (spectrograms.size() != labels.size()) {
    throw AlignmentError("got " + std::to_string(spectrograms.size()) + " spectrograms but " +
                         std::to_string(labels.size()) + " label sequences");
  }
  if (spectrograms.empty()) throw ValidationError("no training data");
  const auto bands = static_cast<int>(spectrograms.front().frames.cols());

  // (song, frame) of every labelled frame, plus band statistics.
  std::vector<std::pair<std::size_t, Eigen::Index>> items;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(bands), sq = Eigen::VectorXd::Zero(bands);
  double count = 0;
  for (std::size_t i = 0; i < spectrograms.size(); ++i) {
    const auto& s = spectrograms[i];
    if (s.frames.cols() != bands) throw ShapeError("spectrograms differ in band count");
    if (static_cast<std::size_t>(s.frames.rows()) != labels[i].size()) {
      throw AlignmentError("song " + std::to_string(i) + ": " + std::to_string(s.frames.rows()) + " frames but " +
                           std::to_string(labels[i].size()) + " labels");
    }
    for (Eigen::Index t = 0; t < s.frames.rows(); ++t) {
      sum += s.frames.row(t).transpose();
      sq += s.frames.row(t).transpose().cwiseAbs2();
      count += 1;
      if (labels[i][static_cast<std::size_t>(t)]) items.emplace_back(i, t);
    }
  }
  if (items.empty()) throw ValidationError("no labelled frames to train on");

  StandinResult result{FrameClassifier(bands, config.context), {}};
  FrameClassifier& c = result.classifier;
  c.feature_mean() = sum / count;
  const Eigen::VectorXd var = (sq / count - c.feature_mean().cwiseAbs2()).cwiseMax(0.0);
  c.feature_scale() = var.unaryExpr([](double v) { return v > 1e-16 ? 1.0 / std::sqrt(v) : 1.0; });

  // Windows are cached once; they do not change during training.
  const Eigen::Index n_in = c.inputs();
  Eigen::MatrixXf X(n_in, static_cast<Eigen::Index>(items.size()));
  std::vector<int> y(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto [song, t] = items[k];
    X.col(static_cast<Eigen::Index>(k)) = c.window(spectrograms[song], t).cast<float>();
    y[k] = labels[song][static_cast<std::size_t>(t)]->index();
  }

  const double beta = config.calibration.beta;
  const double off = (1 - beta) / (kNumClasses - 1);
  const Eigen::Index n_params = kNumClasses * n_in + kNumClasses;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(n_params);
  neural::Adam adam(n_params, {});
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd grad(n_params);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto nb = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd xb(n_in, nb);
      for (Eigen::Index k = 0; k < nb; ++k) xb.col(k) = X.col(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(k)])).cast<double>();
      Eigen::Map<Eigen::MatrixXd> W(params.data(), kNumClasses, n_in);
      Eigen::Map<ClassVector> b(params.data() + kNumClasses * n_in);
      Eigen::MatrixXd z = W * xb;
      z.colwise() += b;
      // dz = softmax(z) - q
      for (Eigen::Index k = 0; k < nb; ++k) {
        const int truth = y[order[start + static_cast<std::size_t>(k)]];
        const double m = z.col(k).maxCoeff();
        const double lse = m + std::log((z.col(k).array() - m).exp().sum());
        const Eigen::VectorXd logp = z.col(k).array() - lse;
        epoch_loss -= off * (logp.sum() - logp(truth)) + beta * logp(truth);
        z.col(k) = logp.array().exp();
        z.col(k).array() -= off;
        z(truth, k) += off - beta;
      }
      Eigen::Map<Eigen::MatrixXd> gW(grad.data(), kNumClasses, n_in);
      gW.noalias() = z * xb.transpose() / static_cast<double>(nb);
      grad.tail(kNumClasses) = z.rowwise().mean();
      adam.apply(params, grad, config.learning_rate);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw DivergenceError("stand-in training diverged", epoch);
    result.loss_curve.push_back(epoch_loss);
  }
  c.weights() = Eigen::Map<Eigen::MatrixXd>(params.data(), kNumClasses, n_in);
  c.bias() = params.tail(kNumClasses);
  return result;
}

double standin_accuracy(const FrameClassifier& c, std::span<const Spectrogram> spectrograms,
                        std::span<const std::vector<MaybeChord>> labels) {
  if (spectrograms.size() != labels.size()) throw AlignmentError("spectrogram/label count mismatch");
  double correct = 0, total = 0;
  for (std::size_t i = 0; i < spectrograms.size(); ++i) {
    const Eigen::MatrixXd z = c.logits(spectrograms[i]);
    if (static_cast<std::size_t>(z.rows()) != labels[i].size()) throw AlignmentError("frame/label length mismatch");
    for (Eigen::Index t = 0; t < z.rows(); ++t) {
      const auto& l = labels[i][static_cast<std::size_t>(t)];
      if (!l) continue;
      Eigen::Index arg;
      z.row(t).maxCoeff(&arg);
      total += 1;
      correct += arg == l->index();
    }
  }
  return total > 0 ? correct / total : 0.0;
}

}  // namespace chordrec
