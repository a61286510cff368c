#include "chordrec/language_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "chordrec/error.hpp"

namespace chordrec {

const ClassLogProbs& LmSession::log_next(StateId state) {
  if (state >= log_cache_.size()) log_cache_.resize(static_cast<std::size_t>(state) + 1);
  auto& slot = log_cache_[state];
  if (!slot) slot = exclude_repeat(raw_next(state), last(state)).log();
  return *slot;
}

ClassProbs exclude_repeat(const ClassProbs& raw, std::optional<ChordClass> current) {
  if (!current) return raw;
  ClassProbs out = raw;
  out[current->index()] = 0.0;
  const double rest = out.sum();
  if (rest > 0.0) return out / rest;
  // Degenerate model that puts all mass on repeating: spread uniformly over
  // the legal successors.
  out.setConstant(1.0 / (kNumClasses - 1));
  out[current->index()] = 0.0;
  return out;
}

ClassProbs lm_next(const LanguageModel& model, std::span<const ChordClass> history) {
  auto session = model.session();
  StateId state = session->start();
  for (ChordClass c : history) state = session->advance(state, c);
  session->flush();
  return exclude_repeat(session->raw_next(state), session->last(state));
}

double avg_log_prob(const LanguageModel& model, std::span<const ChordSequence> corpus,
                    bool exclude_repeats) {
  double sum = 0.0;
  std::int64_t events = 0;
  for (const ChordSequence& piece : corpus) {
    auto session = model.session();
    StateId state = session->start();
    for (ChordClass c : piece) {
      session->flush();
      const double p = exclude_repeats ? std::exp(session->log_next(state)[c.index()])
                                       : session->raw_next(state)[c.index()];
      sum += std::log(p);
      ++events;
      state = session->advance(state, c);
    }
  }
  if (events == 0) throw ValidationError("avg_log_prob needs at least one chord");
  return sum / static_cast<double>(events);
}

std::unique_ptr<LanguageModel> language_model_from_json(const nlohmann::json& j) {
  const std::string type = j.value("type", "");
  if (type == "ngram") return std::make_unique<NgramModel>(NgramModel::from_json(j));
  if (type == "gru_lm") return std::make_unique<GruLanguageModel>(GruLanguageModel::from_json(j));
  throw ValidationError("unknown language model type '" + type + "'");
}

std::unique_ptr<LanguageModel> load_language_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open language model " + path.string());
  try {
    return language_model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed language model " + path.string() + ": " + e.what());
  }
}

std::vector<ChordSequence> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus " + path.string());
  std::vector<ChordSequence> corpus;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string token;
    std::vector<ChordClass> piece;
    while (tokens >> token) {
      if (const auto c = classify_label(token)) piece.push_back(*c);
    }
    if (!piece.empty()) corpus.push_back(compress(piece));
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& path, std::span<const ChordSequence> corpus) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write corpus " + path.string());
  for (const ChordSequence& piece : corpus) {
    for (std::size_t i = 0; i < piece.size(); ++i) out << (i ? " " : "") << to_string(piece[i]);
    out << '\n';
  }
}

}  // namespace chordrec
