#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "chordrec/chord.hpp"
#include "chordrec/duration.hpp"
#include "chordrec/language_model.hpp"
#include "chordrec/posteriors.hpp"
#include "chordrec/timeline.hpp"

namespace chordrec {

// Options shared by all decoders.
struct ScoreConfig {
  // Label prior divided out of the posteriors; uniform when unset.
  std::optional<ClassProbs> prior;
  // Chord classes the decoder may output; all 25 when empty.
  std::vector<ChordClass> alphabet;
};

struct BeamConfig : ScoreConfig {
  int beam_width = 25;    // N_b
  int max_per_hash = 4;   // N_s
  int hash_length = 5;    // N_h, at most 13
  // Merge hypotheses whose current chord, LM state and duration state agree,
  // keeping the better one.
  bool recombine = true;
  bool collect_stats = false;

  void validate() const;
};

struct BeamStats {
  std::vector<int> survivors;    // per frame
  std::vector<int> buckets;      // distinct history hashes among survivors
  std::vector<int> max_bucket;   // largest bucket occupancy
  std::vector<int> recombined;   // candidates merged into an equivalent one

  nlohmann::json to_json() const;
};

struct DecodeResult {
  std::vector<ChordClass> frames;
  double log_score = 0.0;
  double frame_rate = 10.0;
  std::optional<BeamStats> stats;

  SegmentTimeline timeline() const { return SegmentTimeline::from_frames(frames, frame_rate); }
  // First frame of each segment, starting with 0.
  std::vector<int> change_points() const;
};

// A beam entry. history_tail encodes the last N_h chords of the compressed
// sequence, base 26 with digit c + 1.
struct TemporalHypothesis {
  double log_score = 0.0;
  ChordClass current;
  std::uint64_t history_tail = 0;
  StateId lm_state = 0;
  StateId dur_state = 0;
  std::uint32_t segment = 0;  // back-pointer arena index
};

// log P_T contribution of moving from the hypothesis to `next` on the next
// frame: log P_D(stay) if next is the current chord, otherwise
// log P_L(next | history) + log P_D(change).
double temporal_step(const TemporalHypothesis& hyp, ChordClass next, LmSession& lm, DurationSession& dur);

// Frame scores log max(P_A, 1e-12) - log prior. Validates the posteriors.
Eigen::Matrix<double, Eigen::Dynamic, kNumClasses, Eigen::RowMajor> emission_scores(const PosteriorMatrix& posteriors,
                                                                                   const ScoreConfig& config);

// Log joint score of a complete labelling under the factorized model.
double sequence_score(const PosteriorMatrix& posteriors, std::span<const ChordClass> labels,
                      const LanguageModel& lm, const DurationModel& dur, const ScoreConfig& config = {});

DecodeResult beam_decode(const PosteriorMatrix& posteriors, const LanguageModel& lm, const DurationModel& dur,
                         const BeamConfig& config = {});

// Exact max-product decoding over (chord, frames since the last change)
// states, O(T^2 |Y| + T |Y|^2); a geometric model needs one state per chord.
// Needs an n-gram LM of order <= 2 and a parametric duration model.
DecodeResult viterbi_exact(const PosteriorMatrix& posteriors, const LanguageModel& lm, const DurationModel& dur,
                           const ScoreConfig& config = {});

constexpr double kBruteForceLimit = 1e6;

// Exhaustive search over alphabet^T labellings (at most 1e6).
DecodeResult brute_force_decode(const PosteriorMatrix& posteriors, const LanguageModel& lm,
                                const DurationModel& dur, const ScoreConfig& config = {});

}  // namespace chordrec
