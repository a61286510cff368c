#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "chordrec/gru.hpp"
#include "chordrec/language_model.hpp"
#include "chordrec/timeline.hpp"
#include "chordrec/training.hpp"

namespace chordrec {

// One flag per frame after the first: 1 if the label differs from the
// previous frame's.
using ChangeSequence = std::vector<std::uint8_t>;

ChangeSequence change_sequence(std::span<const MaybeChord> frames);
// Durations (frames) of the complete segments, i.e. every segment that is
// followed by a change. The final segment of a piece is censored.
std::vector<int> complete_durations(const ChangeSequence& flags);
// All segment durations including the final one.
std::vector<int> segment_durations(const ChangeSequence& flags);

struct FlagLogProbs {
  double stay;
  double change;
};

// Per-decode view of a duration model. A state summarizes the change flags
// seen so far in the piece; start() is the state on the first frame.
class DurationSession {
 public:
  virtual ~DurationSession() = default;
  virtual StateId start() = 0;
  virtual StateId advance(StateId state, bool change) = 0;
  virtual void flush() {}
  // Probability that the next frame starts a new segment.
  virtual double hazard(StateId state) = 0;
  virtual FlagLogProbs log_probs(StateId state) = 0;
};

class DurationModel {
 public:
  virtual ~DurationModel() = default;
  virtual std::unique_ptr<DurationSession> session() const = 0;
  virtual std::string family() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

// Models whose state is the number of frames d since the last change
// (d = 1 on the first frame of a segment).
class ParametricDuration : public DurationModel {
 public:
  virtual double hazard(int d) const = 0;
  virtual double log_pmf(int d) const = 0;
  virtual int sample(std::mt19937_64& rng) const = 0;
};

class GeometricDuration final : public ParametricDuration {
 public:
  explicit GeometricDuration(double p_change);
  double p() const { return p_; }

  double hazard(int) const override { return p_; }
  double log_pmf(int d) const override;
  int sample(std::mt19937_64& rng) const override;
  std::unique_ptr<DurationSession> session() const override;
  std::string family() const override { return "geometric"; }
  nlohmann::json to_json() const override;

 private:
  double p_;
};

// n left-to-right stages per chord; each frame the chain advances one stage
// with probability p and stays with 1 - p. Leaving the last stage ends the
// segment.
class NegBinomialDuration final : public ParametricDuration {
 public:
  NegBinomialDuration(int stages, double p);
  int n() const { return n_; }
  double p() const { return p_; }

  // Hazards h(1..max_d) by forward propagation of the stage posterior.
  std::vector<double> hazards(int max_d) const;
  double hazard(int d) const override;
  double log_pmf(int d) const override;
  int sample(std::mt19937_64& rng) const override;
  std::unique_ptr<DurationSession> session() const override;
  std::string family() const override { return "negative_binomial"; }
  nlohmann::json to_json() const override;

 private:
  int n_;
  double p_;
};

// Incremental stage posterior: distribution over completed stages given
// survival so far.
class StagePosterior {
 public:
  StagePosterior(int stages, double p);
  double hazard() const { return post_[post_.size() - 1] * p_; }
  void stay();
  void reset();

 private:
  std::vector<double> post_;
  double p_;
};

enum class DurationFamily { kGeometric, kNegBinomial };

constexpr int kMaxStages = 32;

// Maximum-likelihood fit. Negative binomial searches n in 1..kMaxStages with
// p = n / mean, clamped to [1e-9, 1 - 1e-9].
std::unique_ptr<ParametricDuration> fit_mle(std::span<const int> durations, DurationFamily family);
GeometricDuration fit_geometric(std::span<const int> durations);
NegBinomialDuration fit_negbinomial(std::span<const int> durations);

std::vector<int> simulate_durations(const ParametricDuration& model, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// GRU hazard model over the flag sequence.

struct GruDurationConfig {
  int hidden = 256;
  int epochs = 100;
  int batch_size = 10;
  double learning_rate = 0.001;
  int anneal_start_epoch = 0;
  double clip = 0.001;
  neural::ClipMode clip_mode = neural::ClipMode::kGlobalNorm;
  double init_scale = 0.08;
  int excerpt_length = 200;
  std::uint64_t seed = 0;
};

class GruDuration final : public DurationModel {
 public:
  static constexpr int kStay = 0;
  static constexpr int kChange = 1;
  static constexpr int kStartToken = 2;

  explicit GruDuration(neural::GruNetwork<double> network);

  const neural::GruNetwork<double>& network() const { return network_; }
  std::unique_ptr<DurationSession> session() const override;
  std::string family() const override { return "gru"; }
  nlohmann::json to_json() const override;
  static GruDuration from_json(const nlohmann::json& j);

  const GruDurationConfig& config() const { return config_; }
  void set_config(const GruDurationConfig& config) { config_ = config; }
  const std::vector<double>& loss_curve() const { return loss_curve_; }
  void set_loss_curve(std::vector<double> curve) { loss_curve_ = std::move(curve); }

 private:
  neural::GruNetwork<double> network_;
  neural::GruNetwork<float> inference_;
  GruDurationConfig config_;
  std::vector<double> loss_curve_;
};

// Inputs [start, f_1 .. f_{T-2}], targets [f_1 .. f_{T-1}], cut into
// consecutive excerpts of at most `excerpt_length` steps.
std::vector<neural::Sequence> duration_training_sequences(std::span<const ChangeSequence> pieces,
                                                          int excerpt_length);

GruDuration train_gru_duration(std::span<const ChangeSequence> pieces, const GruDurationConfig& config);

// ---------------------------------------------------------------------------

// Mean over complete segments of the summed log-probability of the segment's
// flags (its stays and the closing change). For parametric models this is
// the mean log pmf of the durations.
double avg_duration_log_prob(const DurationModel& model, std::span<const ChangeSequence> pieces);

// Predicted hazard for each flag of the piece, feeding the true flags.
std::vector<double> hazard_trace(const DurationModel& model, const ChangeSequence& flags);

std::unique_ptr<DurationModel> duration_model_from_json(const nlohmann::json& j);
std::unique_ptr<DurationModel> load_duration_model(const std::filesystem::path& path);

}  // namespace chordrec
