#include "chordrec/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "chordrec/error.hpp"
#include "decoder_detail.hpp"

namespace chordrec {

namespace detail {

std::vector<ChordClass> resolve_alphabet(const ScoreConfig& config) {
  std::vector<ChordClass> alphabet = config.alphabet;
  if (alphabet.empty()) {
    for (int k = 0; k < kNumClasses; ++k) alphabet.emplace_back(k);
  }
  std::sort(alphabet.begin(), alphabet.end());
  if (std::adjacent_find(alphabet.begin(), alphabet.end()) != alphabet.end()) {
    throw ParameterError("decoder alphabet has duplicate classes");
  }
  return alphabet;
}

}  // namespace detail

void BeamConfig::validate() const {
  if (beam_width < 1) throw ParameterError("beam width must be >= 1");
  if (max_per_hash < 1 || max_per_hash > beam_width) {
    throw ParameterError("max solutions per hash must be in [1, beam width]");
  }
  if (hash_length < 1 || hash_length > 13) throw ParameterError("hash length must be in [1, 13]");
}

nlohmann::json BeamStats::to_json() const {
  return {{"survivors", survivors}, {"buckets", buckets}, {"max_bucket", max_bucket}, {"recombined", recombined}};
}

std::vector<int> DecodeResult::change_points() const {
  std::vector<int> out;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (t == 0 || frames[t] != frames[t - 1]) out.push_back(static_cast<int>(t));
  }
  return out;
}

double temporal_step(const TemporalHypothesis& hyp, ChordClass next, LmSession& lm, DurationSession& dur) {
  const FlagLogProbs lp = dur.log_probs(hyp.dur_state);
  if (next == hyp.current) return lp.stay;
  return lm.log_next(hyp.lm_state)[next.index()] + lp.change;
}

Eigen::Matrix<double, Eigen::Dynamic, kNumClasses, Eigen::RowMajor> emission_scores(const PosteriorMatrix& posteriors,
                                                                                   const ScoreConfig& config) {
  validate_posteriors(posteriors);
  ClassLogProbs log_prior = ClassLogProbs::Constant(std::log(1.0 / kNumClasses));
  if (config.prior) {
    if (!config.prior->allFinite() || (*config.prior <= 0.0).any()) {
      throw ParameterError("label prior must be positive");
    }
    log_prior = config.prior->log();
  }
  Eigen::Matrix<double, Eigen::Dynamic, kNumClasses, Eigen::RowMajor> em =
      posteriors.probs.array().max(kPosteriorFloor).log().matrix();
  em.rowwise() -= log_prior.matrix().transpose();
  return em;
}

double sequence_score(const PosteriorMatrix& posteriors, std::span<const ChordClass> labels,
                      const LanguageModel& lm, const DurationModel& dur, const ScoreConfig& config) {
  const auto em = emission_scores(posteriors, config);
  if (static_cast<Eigen::Index>(labels.size()) != em.rows()) {
    throw ShapeError("label count does not match the number of frames");
  }
  auto lm_s = lm.session();
  auto dur_s = dur.session();
  TemporalHypothesis h;
  h.current = labels[0];
  h.lm_state = lm_s->advance(lm_s->start(), labels[0]);
  h.dur_state = dur_s->start();
  h.log_score = em(0, labels[0].index()) + lm_s->log_next(lm_s->start())[labels[0].index()];
  for (std::size_t t = 1; t < labels.size(); ++t) {
    const ChordClass c = labels[t];
    h.log_score += temporal_step(h, c, *lm_s, *dur_s) + em(static_cast<Eigen::Index>(t), c.index());
    const bool change = c != h.current;
    if (change) h.lm_state = lm_s->advance(h.lm_state, c);
    h.dur_state = dur_s->advance(h.dur_state, change);
    h.current = c;
  }
  return h.log_score;
}

DecodeResult brute_force_decode(const PosteriorMatrix& posteriors, const LanguageModel& lm,
                                const DurationModel& dur, const ScoreConfig& config) {
  const auto em = emission_scores(posteriors, config);
  const auto alphabet = detail::resolve_alphabet(config);
  const auto T = static_cast<int>(em.rows());
  if (std::pow(static_cast<double>(alphabet.size()), T) > kBruteForceLimit) {
    throw ParameterError("brute-force decoding limited to 1e6 labellings (alphabet " +
                         std::to_string(alphabet.size()) + ", " + std::to_string(T) + " frames)");
  }
  auto lm_s = lm.session();
  auto dur_s = dur.session();

  DecodeResult best;
  best.frame_rate = posteriors.frame_rate;
  best.log_score = -std::numeric_limits<double>::infinity();
  std::vector<ChordClass> labels(static_cast<std::size_t>(T));

  // Depth-first over labellings in lexicographic alphabet order; strict
  // improvement keeps the first of tied maxima.
  std::function<void(int, const TemporalHypothesis&)> visit = [&](int t, const TemporalHypothesis& h) {
    if (t == T) {
      if (h.log_score > best.log_score) {
        best.log_score = h.log_score;
        best.frames = labels;
      }
      return;
    }
    for (ChordClass c : alphabet) {
      const double step = temporal_step(h, c, *lm_s, *dur_s) + em(t, c.index());
      if (!std::isfinite(step)) continue;
      TemporalHypothesis next = h;
      next.log_score += step;
      const bool change = c != h.current;
      if (change) next.lm_state = lm_s->advance(h.lm_state, c);
      next.dur_state = dur_s->advance(h.dur_state, change);
      next.current = c;
      labels[static_cast<std::size_t>(t)] = c;
      visit(t + 1, next);
    }
  };

  const StateId lm_start = lm_s->start();
  const ClassLogProbs first = lm_s->log_next(lm_start);
  for (ChordClass c : alphabet) {
    TemporalHypothesis h;
    h.current = c;
    h.lm_state = lm_s->advance(lm_start, c);
    h.dur_state = dur_s->start();
    h.log_score = em(0, c.index()) + first[c.index()];
    if (!std::isfinite(h.log_score)) continue;
    labels[0] = c;
    visit(1, h);
  }
  if (best.frames.empty()) throw ValidationError("no labelling has finite score");
  return best;
}

}  // namespace chordrec
