#include <algorithm>
#include <cmath>

#include "chordrec/error.hpp"
#include "chordrec/gru_io.hpp"
#include "chordrec/language_model.hpp"
#include "chordrec/pca.hpp"
#include "chordrec/recurrent_trie.hpp"

namespace chordrec {
namespace {

class GruLmSession final : public LmSession {
 public:
  explicit GruLmSession(const neural::GruNetwork<float>& net) : trie_(net) {}

  StateId start() override { return intern(trie_.root(GruLanguageModel::kStartToken)); }

  StateId advance(StateId state, ChordClass chord) override {
    return intern(trie_.child(state, chord.index()));
  }

  void flush() override { trie_.flush(); }

  const ClassProbs& raw_next(StateId state) override {
    auto& slot = probs_[state];
    if (!slot) {
      const Eigen::ArrayXd z = trie_.logits(state).template cast<double>().array();
      const Eigen::ArrayXd e = (z - z.maxCoeff()).exp();
      slot = ClassProbs(e / e.sum());
    }
    return *slot;
  }

  std::optional<ChordClass> last(StateId state) const override {
    const int symbol = trie_.symbol(state);
    if (symbol == GruLanguageModel::kStartToken) return std::nullopt;
    return ChordClass(symbol);
  }

 private:
  StateId intern(neural::RecurrentTrie<float>::NodeId id) {
    if (id >= probs_.size()) probs_.resize(static_cast<std::size_t>(id) + 1);
    return id;
  }

  neural::RecurrentTrie<float> trie_;
  std::vector<std::optional<ClassProbs>> probs_;
};

}  // namespace

GruLanguageModel::GruLanguageModel(neural::GruNetwork<double> network)
    : network_(std::move(network)), inference_(network_.cast<float>()) {
  const auto& shape = network_.shape();
  if (shape.input_vocab != kNumClasses + 1 || shape.outputs != kNumClasses) {
    throw ShapeError("GRU language model needs 26 input symbols and 25 outputs");
  }
}

std::unique_ptr<LmSession> GruLanguageModel::session() const {
  return std::make_unique<GruLmSession>(inference_);
}

nlohmann::json GruLanguageModel::to_json() const {
  nlohmann::json j = neural::network_to_json(network_);
  j["type"] = "gru_lm";
  j["start_token"] = kStartToken;
  j["config"] = {{"hidden", config_.hidden},
                 {"embedding_dim", config_.embedding_dim},
                 {"epochs", config_.epochs},
                 {"batch_size", config_.batch_size},
                 {"learning_rate", config_.learning_rate},
                 {"anneal_start_epoch", config_.anneal_start_epoch},
                 {"clip", config_.clip},
                 {"clip_mode", neural::clip_mode_name(config_.clip_mode)},
                 {"init_scale", config_.init_scale},
                 {"key_shift", config_.key_shift},
                 {"crop", config_.crop},
                 {"seed", config_.seed}};
  j["adam"] = neural::adam_to_json(neural::AdamConfig{});
  j["loss_curve"] = loss_curve_;
  return j;
}

GruLanguageModel GruLanguageModel::from_json(const nlohmann::json& j) {
  GruLanguageModel model(neural::network_from_json(j));
  if (j.contains("config")) {
    const auto& c = j["config"];
    GruLmConfig config;
    config.hidden = c.value("hidden", config.hidden);
    config.embedding_dim = c.value("embedding_dim", config.embedding_dim);
    config.epochs = c.value("epochs", config.epochs);
    config.batch_size = c.value("batch_size", config.batch_size);
    config.learning_rate = c.value("learning_rate", config.learning_rate);
    config.anneal_start_epoch = c.value("anneal_start_epoch", config.anneal_start_epoch);
    config.clip = c.value("clip", config.clip);
    config.clip_mode = neural::clip_mode_from(c.value("clip_mode", std::string("none")));
    config.init_scale = c.value("init_scale", config.init_scale);
    config.key_shift = c.value("key_shift", config.key_shift);
    config.crop = c.value("crop", config.crop);
    config.seed = c.value("seed", config.seed);
    model.set_config(config);
  }
  if (j.contains("loss_curve")) model.set_loss_curve(j["loss_curve"].get<std::vector<double>>());
  return model;
}

neural::Sequence to_training_sequence(std::span<const ChordClass> piece) {
  neural::Sequence s;
  s.inputs.reserve(piece.size());
  s.targets.reserve(piece.size());
  s.inputs.push_back(GruLanguageModel::kStartToken);
  for (std::size_t i = 0; i < piece.size(); ++i) {
    s.targets.push_back(piece[i].index());
    if (i + 1 < piece.size()) s.inputs.push_back(piece[i].index());
  }
  return s;
}

neural::Sequence augment_lm_sequence(const neural::Sequence& s, std::mt19937_64& rng, bool key_shift,
                                     bool crop) {
  const auto n = s.targets.size();
  std::size_t begin = 0, length = n;
  if (crop && n >= 2) {
    length = std::uniform_int_distribution<std::size_t>(2, n)(rng);
    begin = std::uniform_int_distribution<std::size_t>(0, n - length)(rng);
  }
  const int shift = key_shift ? std::uniform_int_distribution<int>(0, kNumRoots - 1)(rng) : 0;
  std::vector<ChordClass> piece;
  piece.reserve(length);
  for (std::size_t i = begin; i < begin + length; ++i) {
    piece.push_back(transpose(ChordClass(s.targets[i]), shift));
  }
  return to_training_sequence(piece);
}

GruLanguageModel train_gru_lm(std::span<const ChordSequence> corpus, const GruLmConfig& config) {
  std::vector<neural::Sequence> sequences;
  for (const ChordSequence& piece : corpus) {
    for (std::size_t i = 1; i < piece.size(); ++i) {
      if (piece[i] == piece[i - 1]) throw ValidationError("language model corpus is not compressed");
    }
    if (!piece.empty()) sequences.push_back(to_training_sequence(piece));
  }
  if (sequences.empty()) throw ValidationError("cannot train on an empty corpus");

  const neural::GruShape shape{kNumClasses + 1, config.embedding_dim, config.hidden, kNumClasses};
  auto net = neural::GruNetwork<double>::random(shape, config.seed, config.init_scale);

  neural::TrainConfig train;
  train.epochs = config.epochs;
  train.batch_size = config.batch_size;
  train.learning_rate = config.learning_rate;
  train.anneal_start_epoch = config.anneal_start_epoch;
  train.clip = config.clip;
  train.clip_mode = config.clip_mode;
  train.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
  if (config.key_shift || config.crop) {
    train.augment = [&config](const neural::Sequence& s, std::mt19937_64& rng) {
      return augment_lm_sequence(s, rng, config.key_shift, config.crop);
    };
  }
  auto result = neural::train_next_step(net, sequences, train);
  GruLanguageModel model(std::move(net));
  model.set_config(config);
  model.set_loss_curve(std::move(result.loss_curve));
  return model;
}

Eigen::Matrix<double, kNumClasses, 2> embedding_pca(const GruLanguageModel& model) {
  const auto& net = model.network();
  if (net.shape().one_hot()) {
    throw UnsupportedOperation("embedding PCA needs a learned embedding; model uses one-hot inputs");
  }
  if (net.shape().embedding_dim < 2) throw UnsupportedOperation("embedding PCA needs at least 2 dimensions");
  const Eigen::MatrixXd rows = net.embedding().leftCols(kNumClasses).transpose();
  const PcaResult result = pca(rows, 2);
  return result.projection;
}

}  // namespace chordrec
