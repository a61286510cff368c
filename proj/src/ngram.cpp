#include <algorithm>
#include <string>

#include "chordrec/error.hpp"
#include "chordrec/language_model.hpp"

namespace chordrec {
namespace {

class NgramSession final : public LmSession {
 public:
  explicit NgramSession(const NgramModel& model)
      : model_(model), width_(std::max(model.order() - 1, 1)) {}

  StateId start() override { return intern(std::vector<int>(static_cast<std::size_t>(width_), NgramModel::kStartToken)); }

  StateId advance(StateId state, ChordClass chord) override {
    std::vector<int> key = keys_[state];
    key.erase(key.begin());
    key.push_back(chord.index());
    return intern(std::move(key));
  }

  const ClassProbs& raw_next(StateId state) override { return probs_[state]; }

  std::optional<ChordClass> last(StateId state) const override {
    const int back = keys_[state].back();
    if (back == NgramModel::kStartToken) return std::nullopt;
    return ChordClass(back);
  }

 private:
  StateId intern(std::vector<int> key) {
    if (const auto it = ids_.find(key); it != ids_.end()) return it->second;
    const auto id = static_cast<StateId>(keys_.size());
    const std::size_t context_len = static_cast<std::size_t>(model_.order() - 1);
    const std::span<const int> context(key.data() + key.size() - context_len, context_len);
    probs_.push_back(model_.probabilities(context));
    ids_.emplace(key, id);
    keys_.push_back(std::move(key));
    return id;
  }

  const NgramModel& model_;
  int width_;
  std::map<std::vector<int>, StateId> ids_;
  std::vector<std::vector<int>> keys_;
  std::vector<ClassProbs> probs_;
};

}  // namespace

NgramModel::NgramModel(int order, double alpha) : order_(order), alpha_(alpha) {
  if (order < 1) throw ParameterError("n-gram order must be >= 1");
  if (!(alpha > 0.0)) throw ParameterError("Lidstone alpha must be > 0");
}

void NgramModel::add_corpus(std::span<const ChordSequence> corpus, bool key_shift) {
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    const ChordSequence& piece = corpus[p];
    for (std::size_t i = 1; i < piece.size(); ++i) {
      if (piece[i] == piece[i - 1]) {
        throw ValidationError("piece " + std::to_string(p) + " is not compressed (repeat at position " +
                              std::to_string(i) + ")");
      }
    }
  }
  const int shifts = key_shift ? kNumRoots : 1;
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  for (const ChordSequence& piece : corpus) {
    for (int shift = 0; shift < shifts; ++shift) {
      Context context(width, kStartToken);
      for (ChordClass chord : piece) {
        const ChordClass c = transpose(chord, shift);
        Counts& counts = counts_[context];
        counts.next[static_cast<std::size_t>(c.index())] += 1.0;
        counts.total += 1.0;
        if (width > 0) {
          context.erase(context.begin());
          context.push_back(c.index());
        }
      }
    }
  }
}

ClassProbs NgramModel::probabilities(std::span<const int> context) const {
  const double denom_alpha = alpha_ * kNumClasses;
  const auto it = counts_.find(Context(context.begin(), context.end()));
  if (it == counts_.end()) return ClassProbs::Constant(1.0 / kNumClasses);
  ClassProbs p;
  for (int k = 0; k < kNumClasses; ++k) {
    p[k] = (it->second.next[static_cast<std::size_t>(k)] + alpha_) / (it->second.total + denom_alpha);
  }
  return p;
}

double NgramModel::count(std::span<const int> context, ChordClass next) const {
  const auto it = counts_.find(Context(context.begin(), context.end()));
  return it == counts_.end() ? 0.0 : it->second.next[static_cast<std::size_t>(next.index())];
}

std::unique_ptr<LmSession> NgramModel::session() const { return std::make_unique<NgramSession>(*this); }

nlohmann::json NgramModel::to_json() const {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [context, c] : counts_) {
    counts.push_back({{"context", context}, {"next", c.next}});
  }
  return {{"type", "ngram"},
          {"order", order_},
          {"alpha", alpha_},
          {"vocabulary", kNumClasses},
          {"start_token", kStartToken},
          {"normalization",
           "P(w|h) = (c(h,w) + alpha) / (c(h) + 25 alpha); the start token pads contexts and is never predicted"},
          {"counts", std::move(counts)}};
}

NgramModel NgramModel::from_json(const nlohmann::json& j) {
  try {
    NgramModel model(j.at("order").get<int>(), j.at("alpha").get<double>());
    for (const auto& entry : j.at("counts")) {
      auto context = entry.at("context").get<Context>();
      const auto next = entry.at("next").get<std::vector<double>>();
      if (static_cast<int>(context.size()) != model.order_ - 1 || next.size() != kNumClasses) {
        throw ShapeError("n-gram count entry has wrong context or vocabulary size");
      }
      Counts c;
      for (std::size_t k = 0; k < next.size(); ++k) {
        if (next[k] < 0) throw ValidationError("negative n-gram count");
        c.next[k] = next[k];
        c.total += next[k];
      }
      model.counts_[std::move(context)] = c;
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed n-gram JSON: ") + e.what());
  }
}

NgramModel train_ngram(std::span<const ChordSequence> corpus, int order, double alpha, bool key_shift) {
  NgramModel model(order, alpha);
  model.add_corpus(corpus, key_shift);
  return model;
}

}  // namespace chordrec
