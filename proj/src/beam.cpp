#include <algorithm>
#include <cmath>
#include <limits>

#include "chordrec/decoder.hpp"
#include "chordrec/error.hpp"
#include "decoder_detail.hpp"

namespace chordrec {
namespace {

constexpr std::uint32_t kNoSegment = std::numeric_limits<std::uint32_t>::max();

struct SegmentNode {
  ChordClass chord;
  int start;
  std::uint32_t parent;
};

struct Candidate {
  double score;
  std::uint32_t parent;  // index into the current beam, kNoSegment on frame 0
  ChordClass chord;
  bool change;
};

std::uint64_t power26(int n) {
  std::uint64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 26;
  return p;
}

class BeamSearch {
 public:
  BeamSearch(const PosteriorMatrix& posteriors, const LanguageModel& lm, const DurationModel& dur,
             const BeamConfig& config)
      : config_(config),
        em_(emission_scores(posteriors, config)),
        alphabet_(detail::resolve_alphabet(config)),
        lm_(lm.session()),
        dur_(dur.session()),
        hash_mod_(power26(config.hash_length)) {
    config.validate();
    result_.frame_rate = posteriors.frame_rate;
    if (config.collect_stats) result_.stats.emplace();
  }

  DecodeResult run() {
    const auto T = static_cast<int>(em_.rows());
    initialize();
    for (int t = 1; t < T; ++t) expand(t);
    if (beam_.empty()) throw ValidationError("beam search found no hypothesis with finite score");
    backtrace(T);
    return std::move(result_);
  }

 private:
  void initialize() {
    const StateId lm_start = lm_->start();
    const ClassLogProbs first = lm_->log_next(lm_start);
    candidates_.clear();
    for (ChordClass c : alphabet_) {
      const double s = em_(0, c.index()) + first[c.index()];
      if (std::isfinite(s)) candidates_.push_back({s, kNoSegment, c, true});
    }
    sort_candidates();
    std::vector<TemporalHypothesis> next;
    buckets_.clear();
    int merged = 0;
    for (const Candidate& cand : candidates_) {
      if (static_cast<int>(next.size()) >= config_.beam_width) break;
      const std::uint64_t tail = static_cast<std::uint64_t>(cand.chord.index() + 1) % hash_mod_;
      if (!admit_bucket(tail)) continue;
      TemporalHypothesis h;
      h.log_score = cand.score;
      h.current = cand.chord;
      h.history_tail = tail;
      h.lm_state = lm_->advance(lm_start, cand.chord);
      h.dur_state = dur_->start();
      h.segment = new_segment(cand.chord, 0, kNoSegment);
      next.push_back(h);
    }
    finish_frame(std::move(next), merged);
  }

  void expand(int t) {
    candidates_.clear();
    for (std::uint32_t i = 0; i < beam_.size(); ++i) {
      const TemporalHypothesis& h = beam_[i];
      const FlagLogProbs lp = dur_->log_probs(h.dur_state);
      const ClassLogProbs& next_chord = lm_->log_next(h.lm_state);
      for (ChordClass c : alphabet_) {
        const bool change = c != h.current;
        const double step = change ? next_chord[c.index()] + lp.change : lp.stay;
        const double s = h.log_score + step + em_(t, c.index());
        if (std::isfinite(s)) candidates_.push_back({s, i, c, change});
      }
    }
    sort_candidates();

    std::vector<TemporalHypothesis> next;
    std::vector<const Candidate*> admitted;
    buckets_.clear();
    int merged = 0;
    for (const Candidate& cand : candidates_) {
      if (static_cast<int>(next.size()) >= config_.beam_width) break;
      const TemporalHypothesis& parent = beam_[cand.parent];
      const std::uint64_t tail = successor_tail(parent, cand);
      if (bucket_full(tail)) continue;
      TemporalHypothesis h;
      h.log_score = cand.score;
      h.current = cand.chord;
      h.history_tail = tail;
      h.lm_state = parent.lm_state;
      if (config_.recombine) {
        // State ids are known before evaluation; equal ids are equivalent.
        if (cand.change) h.lm_state = lm_->advance(parent.lm_state, cand.chord);
        h.dur_state = dur_->advance(parent.dur_state, cand.change);
        const bool dup = std::any_of(next.begin(), next.end(), [&](const TemporalHypothesis& u) {
          return u.current == h.current && u.lm_state == h.lm_state && u.dur_state == h.dur_state;
        });
        if (dup) {
          ++merged;
          continue;
        }
      }
      admit_bucket(tail);
      h.segment = cand.change ? new_segment(cand.chord, t, parent.segment) : parent.segment;
      next.push_back(h);
      admitted.push_back(&cand);
    }
    if (!config_.recombine) {
      for (std::size_t k = 0; k < next.size(); ++k) {
        const Candidate& cand = *admitted[k];
        const TemporalHypothesis& parent = beam_[cand.parent];
        if (cand.change) next[k].lm_state = lm_->advance(parent.lm_state, cand.chord);
        next[k].dur_state = dur_->advance(parent.dur_state, cand.change);
      }
    }
    finish_frame(std::move(next), merged);
  }

  std::uint64_t successor_tail(const TemporalHypothesis& parent, const Candidate& cand) const {
    if (!cand.change) return parent.history_tail;
    return (parent.history_tail * 26 + static_cast<std::uint64_t>(cand.chord.index() + 1)) % hash_mod_;
  }

  bool bucket_full(std::uint64_t tail) const {
    for (const auto& [key, count] : buckets_)
      if (key == tail) return count >= config_.max_per_hash;
    return false;
  }

  bool admit_bucket(std::uint64_t tail) {
    for (auto& [key, count] : buckets_) {
      if (key == tail) {
        if (count >= config_.max_per_hash) return false;
        ++count;
        return true;
      }
    }
    buckets_.emplace_back(tail, 1);
    return true;
  }

  void finish_frame(std::vector<TemporalHypothesis> next, int merged) {
    lm_->flush();
    dur_->flush();
    beam_ = std::move(next);
    if (result_.stats) {
      auto& s = *result_.stats;
      s.survivors.push_back(static_cast<int>(beam_.size()));
      int largest = 0;
      for (const auto& b : buckets_) largest = std::max(largest, b.second);
      s.buckets.push_back(static_cast<int>(buckets_.size()));
      s.max_bucket.push_back(largest);
      s.recombined.push_back(merged);
    }
  }

  // Descending score; ties to the lower chord index, then the earlier parent.
  void sort_candidates() {
    std::sort(candidates_.begin(), candidates_.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.chord != b.chord) return a.chord < b.chord;
      return a.parent < b.parent;
    });
  }

  std::uint32_t new_segment(ChordClass chord, int start, std::uint32_t parent) {
    arena_.push_back({chord, start, parent});
    return static_cast<std::uint32_t>(arena_.size() - 1);
  }

  void backtrace(int T) {
    const TemporalHypothesis& best = beam_.front();
    result_.log_score = best.log_score;
    result_.frames.assign(static_cast<std::size_t>(T), ChordClass());
    int end = T;
    for (std::uint32_t node = best.segment; node != kNoSegment; node = arena_[node].parent) {
      const SegmentNode& seg = arena_[node];
      std::fill(result_.frames.begin() + seg.start, result_.frames.begin() + end, seg.chord);
      end = seg.start;
    }
  }

  const BeamConfig& config_;
  Eigen::Matrix<double, Eigen::Dynamic, kNumClasses, Eigen::RowMajor> em_;
  std::vector<ChordClass> alphabet_;
  std::unique_ptr<LmSession> lm_;
  std::unique_ptr<DurationSession> dur_;
  std::uint64_t hash_mod_;

  std::vector<TemporalHypothesis> beam_;
  std::vector<Candidate> candidates_;
  std::vector<std::pair<std::uint64_t, int>> buckets_;
  std::vector<SegmentNode> arena_;
  DecodeResult result_;
};

}  // namespace

DecodeResult beam_decode(const PosteriorMatrix& posteriors, const LanguageModel& lm, const DurationModel& dur,
                         const BeamConfig& config) {
  return BeamSearch(posteriors, lm, dur, config).run();
}

}  // namespace chordrec
