#include <cmath>
#include <optional>

#include "chordrec/duration.hpp"
#include "chordrec/error.hpp"
#include "chordrec/gru_io.hpp"
#include "chordrec/recurrent_trie.hpp"

namespace chordrec {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

class GruDurationSession final : public DurationSession {
 public:
  explicit GruDurationSession(const neural::GruNetwork<float>& net) : trie_(net) {}

  StateId start() override { return intern(trie_.root(GruDuration::kStartToken)); }
  StateId advance(StateId state, bool change) override {
    return intern(trie_.child(state, change ? GruDuration::kChange : GruDuration::kStay));
  }
  void flush() override { trie_.flush(); }

  double hazard(StateId state) override { return std::exp(log_probs(state).change); }

  FlagLogProbs log_probs(StateId state) override {
    auto& slot = cache_[state];
    if (!slot) {
      const double z = static_cast<double>(trie_.logits(state)[0]);
      slot = FlagLogProbs{-softplus(z), -softplus(-z)};
    }
    return *slot;
  }

 private:
  StateId intern(neural::RecurrentTrie<float>::NodeId id) {
    if (id >= cache_.size()) cache_.resize(static_cast<std::size_t>(id) + 1);
    return id;
  }

  neural::RecurrentTrie<float> trie_;
  std::vector<std::optional<FlagLogProbs>> cache_;
};

}  // namespace

GruDuration::GruDuration(neural::GruNetwork<double> network)
    : network_(std::move(network)), inference_(network_.cast<float>()) {
  const auto& shape = network_.shape();
  if (shape.input_vocab != 3 || !shape.sigmoid_head()) {
    throw ShapeError("GRU duration model needs 3 input symbols and a single sigmoid output");
  }
}

std::unique_ptr<DurationSession> GruDuration::session() const {
  return std::make_unique<GruDurationSession>(inference_);
}

nlohmann::json GruDuration::to_json() const {
  nlohmann::json j = neural::network_to_json(network_);
  j["family"] = family();
  j["symbols"] = {{"stay", kStay}, {"change", kChange}, {"start", kStartToken}};
  j["config"] = {{"hidden", config_.hidden},
                 {"epochs", config_.epochs},
                 {"batch_size", config_.batch_size},
                 {"learning_rate", config_.learning_rate},
                 {"anneal_start_epoch", config_.anneal_start_epoch},
                 {"clip", config_.clip},
                 {"clip_mode", neural::clip_mode_name(config_.clip_mode)},
                 {"init_scale", config_.init_scale},
                 {"excerpt_length", config_.excerpt_length},
                 {"seed", config_.seed}};
  j["adam"] = neural::adam_to_json(neural::AdamConfig{});
  j["loss_curve"] = loss_curve_;
  return j;
}

GruDuration GruDuration::from_json(const nlohmann::json& j) {
  GruDuration model(neural::network_from_json(j));
  if (j.contains("config")) {
    const auto& c = j["config"];
    GruDurationConfig config;
    config.hidden = c.value("hidden", config.hidden);
    config.epochs = c.value("epochs", config.epochs);
    config.batch_size = c.value("batch_size", config.batch_size);
    config.learning_rate = c.value("learning_rate", config.learning_rate);
    config.anneal_start_epoch = c.value("anneal_start_epoch", config.anneal_start_epoch);
    config.clip = c.value("clip", config.clip);
    config.clip_mode = neural::clip_mode_from(c.value("clip_mode", std::string("none")));
    config.init_scale = c.value("init_scale", config.init_scale);
    config.excerpt_length = c.value("excerpt_length", config.excerpt_length);
    config.seed = c.value("seed", config.seed);
    model.set_config(config);
  }
  if (j.contains("loss_curve")) model.set_loss_curve(j["loss_curve"].get<std::vector<double>>());
  return model;
}

std::vector<neural::Sequence> duration_training_sequences(std::span<const ChangeSequence> pieces,
                                                          int excerpt_length) {
  if (excerpt_length < 1) throw ParameterError("excerpt length must be >= 1");
  const auto len = static_cast<std::size_t>(excerpt_length);
  std::vector<neural::Sequence> out;
  for (const ChangeSequence& flags : pieces) {
    for (std::size_t begin = 0; begin < flags.size(); begin += len) {
      const std::size_t end = std::min(flags.size(), begin + len);
      neural::Sequence s;
      for (std::size_t t = begin; t < end; ++t) {
        s.inputs.push_back(t == 0 ? GruDuration::kStartToken : flags[t - 1]);
        s.targets.push_back(flags[t]);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

GruDuration train_gru_duration(std::span<const ChangeSequence> pieces, const GruDurationConfig& config) {
  const auto sequences = duration_training_sequences(pieces, config.excerpt_length);
  if (sequences.empty()) throw ValidationError("cannot train on an empty set of change sequences");

  const neural::GruShape shape{3, 0, config.hidden, 1};
  auto net = neural::GruNetwork<double>::random(shape, config.seed, config.init_scale);

  neural::TrainConfig train;
  train.epochs = config.epochs;
  train.batch_size = config.batch_size;
  train.learning_rate = config.learning_rate;
  train.anneal_start_epoch = config.anneal_start_epoch;
  train.clip = config.clip;
  train.clip_mode = config.clip_mode;
  train.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
  auto result = neural::train_next_step(net, sequences, train);
  GruDuration model(std::move(net));
  model.set_config(config);
  model.set_loss_curve(std::move(result.loss_curve));
  return model;
}

}  // namespace chordrec
