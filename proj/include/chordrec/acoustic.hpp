#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "chordrec/chord.hpp"
#include "chordrec/features.hpp"
#include "chordrec/posteriors.hpp"

namespace chordrec {

using ClassVector = Eigen::Matrix<double, kNumClasses, 1>;

struct CalibrationConfig {
  double tau = 1.3;   // softmax temperature
  double beta = 0.9;  // target mass on the true class

  void validate() const;
};

// exp(z / tau) / sum exp(z / tau), max-subtracted.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, 1> temperature_softmax(
    const Eigen::MatrixBase<Derived>& z, typename Derived::Scalar tau);

// Row-wise temperature softmax of a T x 25 logit matrix.
ProbMatrix temperature_softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits, double tau);

// beta on the true class, (1 - beta) / 24 on each other class.
ClassVector smooth_targets(ChordClass truth, double beta);

// Multinomial logistic regression over a centred window of spectrogram
// frames. Bands are standardised with training statistics; edge frames are
// replicated.
class FrameClassifier {
 public:
  FrameClassifier(int bands, int context);

  int bands() const { return bands_; }
  int context() const { return context_; }
  Eigen::Index inputs() const { return static_cast<Eigen::Index>(bands_) * context_; }

  Eigen::MatrixXd& weights() { return weights_; }  // 25 x inputs
  const Eigen::MatrixXd& weights() const { return weights_; }
  ClassVector& bias() { return bias_; }
  const ClassVector& bias() const { return bias_; }
  Eigen::VectorXd& feature_mean() { return mean_; }
  Eigen::VectorXd& feature_scale() { return scale_; }

  // Standardised context window around frame t (length inputs()).
  Eigen::VectorXd window(const Spectrogram& s, Eigen::Index t) const;
  Eigen::MatrixXd logits(const Spectrogram& s) const;  // T x 25
  PosteriorMatrix predict(const Spectrogram& s, double tau = CalibrationConfig{}.tau) const;

  nlohmann::json to_json() const;
  static FrameClassifier from_json(const nlohmann::json& j);

 private:
  void check_bands(const Spectrogram& s) const;

  int bands_;
  int context_;
  Eigen::MatrixXd weights_;
  ClassVector bias_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

struct StandinConfig {
  int context = 15;
  CalibrationConfig calibration;
  int epochs = 100;
  double learning_rate = 1e-3;
  int batch_size = 256;
  std::uint64_t seed = 0;
};

struct StandinResult {
  FrameClassifier classifier;
  std::vector<double> loss_curve;  // mean smoothed cross-entropy per epoch
};

// Frames labelled "X" (nullopt) are skipped. Labels and spectrogram frames
// must have the same length.
StandinResult train_standin(std::span<const Spectrogram> spectrograms,
                            std::span<const std::vector<MaybeChord>> labels, const StandinConfig& config = {});

double standin_accuracy(const FrameClassifier& c, std::span<const Spectrogram> spectrograms,
                        std::span<const std::vector<MaybeChord>> labels);

FrameClassifier load_classifier(const std::filesystem::path& path);
void save_classifier(const std::filesystem::path& path, const FrameClassifier& c);

// ---------------------------------------------------------------------------

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, 1> temperature_softmax(
    const Eigen::MatrixBase<Derived>& z, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw ParameterError("softmax temperature must be positive");
  Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, 1> e = ((z.derived().array() - z.maxCoeff()) / tau).exp();
  return e / e.sum();
}

}  // namespace chordrec
