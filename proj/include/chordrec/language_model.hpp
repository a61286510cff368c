#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "chordrec/chord.hpp"
#include "chordrec/gru.hpp"
#include "chordrec/training.hpp"

namespace chordrec {

using StateId = std::uint32_t;
using ClassLogProbs = Eigen::Array<double, kNumClasses, 1>;
using ClassProbs = Eigen::Array<double, kNumClasses, 1>;

// A chord sequence after compression (no adjacent duplicates).
using ChordSequence = std::vector<ChordClass>;

// Per-decode view of a harmonic language model. States are identified by
// small integers owned by the session; equal ids denote equivalent states,
// so finite-context models map equal contexts to equal ids.
class LmSession {
 public:
  virtual ~LmSession() = default;

  // State before the first chord.
  virtual StateId start() = 0;
  // State after appending `chord` to the history of `state`. The result may
  // be evaluated lazily; call flush() before querying a new state.
  virtual StateId advance(StateId state, ChordClass chord) = 0;
  virtual void flush() {}
  // Model probabilities for the next chord, before the repeat constraint.
  virtual const ClassProbs& raw_next(StateId state) = 0;
  // Last chord consumed, if any.
  virtual std::optional<ChordClass> last(StateId state) const = 0;

  // log P_L(next | history): raw probabilities with the current chord's
  // mass removed and the rest renormalized. Cached per state.
  const ClassLogProbs& log_next(StateId state);

 private:
  std::vector<std::optional<ClassLogProbs>> log_cache_;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual std::unique_ptr<LmSession> session() const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

// Distribution over legal successors: the mass on `current` is removed and
// the rest renormalized. With no current chord the input is returned.
ClassProbs exclude_repeat(const ClassProbs& raw, std::optional<ChordClass> current);

// Probability of the next chord after `history` (a compressed prefix), with
// the repeat constraint applied.
ClassProbs lm_next(const LanguageModel& model, std::span<const ChordClass> history);

// Mean natural-log probability of each true next chord, over every chord of
// every piece. Uses the model's raw distribution unless exclude_repeats.
double avg_log_prob(const LanguageModel& model, std::span<const ChordSequence> corpus,
                    bool exclude_repeats = false);

// ---------------------------------------------------------------------------
// n-gram model with Lidstone smoothing.

class NgramModel final : public LanguageModel {
 public:
  static constexpr int kStartToken = kNumClasses;

  NgramModel(int order, double alpha);

  // Accumulates counts from compressed sequences; with key_shift every piece
  // is counted in all 12 transpositions. Throws ValidationError on adjacent
  // duplicates.
  void add_corpus(std::span<const ChordSequence> corpus, bool key_shift);

  int order() const { return order_; }
  double alpha() const { return alpha_; }

  // P(next | context) where context holds up to order-1 previous symbols
  // (chord indices or kStartToken), oldest first.
  ClassProbs probabilities(std::span<const int> context) const;
  double count(std::span<const int> context, ChordClass next) const;

  std::unique_ptr<LmSession> session() const override;
  std::string kind() const override { return "ngram"; }
  nlohmann::json to_json() const override;
  static NgramModel from_json(const nlohmann::json& j);

 private:
  using Context = std::vector<int>;
  struct Counts {
    std::array<double, kNumClasses> next{};
    double total = 0.0;
  };
  int order_;
  double alpha_;
  std::map<Context, Counts> counts_;
};

NgramModel train_ngram(std::span<const ChordSequence> corpus, int order, double alpha, bool key_shift);

// ---------------------------------------------------------------------------
// GRU language model.

struct GruLmConfig {
  int hidden = 512;
  int embedding_dim = 16;  // 0 = one-hot
  int epochs = 100;
  int batch_size = 4;
  double learning_rate = 0.005;
  int anneal_start_epoch = 50;
  double clip = 0.0;
  neural::ClipMode clip_mode = neural::ClipMode::kNone;
  double init_scale = 0.08;
  bool key_shift = true;
  bool crop = true;
  std::uint64_t seed = 0;
};

class GruLanguageModel final : public LanguageModel {
 public:
  static constexpr int kStartToken = kNumClasses;

  explicit GruLanguageModel(neural::GruNetwork<double> network);

  const neural::GruNetwork<double>& network() const { return network_; }
  std::unique_ptr<LmSession> session() const override;
  std::string kind() const override { return "gru_lm"; }
  nlohmann::json to_json() const override;
  static GruLanguageModel from_json(const nlohmann::json& j);

  const GruLmConfig& config() const { return config_; }
  void set_config(const GruLmConfig& config) { config_ = config; }
  const std::vector<double>& loss_curve() const { return loss_curve_; }
  void set_loss_curve(std::vector<double> curve) { loss_curve_ = std::move(curve); }

 private:
  neural::GruNetwork<double> network_;
  neural::GruNetwork<float> inference_;
  GruLmConfig config_;
  std::vector<double> loss_curve_;
};

// Training sequences: start token followed by the chords, predicting each
// chord from its prefix.
neural::Sequence to_training_sequence(std::span<const ChordClass> piece);

// Random key shift (0..11, no-chord fixed) and random crop (length uniform
// in [2, n], start uniform) of a training sequence.
neural::Sequence augment_lm_sequence(const neural::Sequence& s, std::mt19937_64& rng, bool key_shift,
                                     bool crop);

GruLanguageModel train_gru_lm(std::span<const ChordSequence> corpus, const GruLmConfig& config);

// 2-D PCA of the learned chord embedding: one row per chord class.
Eigen::Matrix<double, kNumClasses, 2> embedding_pca(const GruLanguageModel& model);

// ---------------------------------------------------------------------------

std::unique_ptr<LanguageModel> language_model_from_json(const nlohmann::json& j);
std::unique_ptr<LanguageModel> load_language_model(const std::filesystem::path& path);

// Corpus file: one piece per line, space-separated chord labels. Labels are
// reduced to the maj/min alphabet, "X" is dropped, and the result compressed.
std::vector<ChordSequence> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const ChordSequence> corpus);

}  // namespace chordrec
