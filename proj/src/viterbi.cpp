#include <cmath>
#include <limits>

#include "chordrec/decoder.hpp"
#include "chordrec/error.hpp"
#include "decoder_detail.hpp"

namespace chordrec {

DecodeResult viterbi_exact(const PosteriorMatrix& posteriors, const LanguageModel& lm, const DurationModel& dur,
                           const ScoreConfig& config) {
  const auto* ngram = dynamic_cast<const NgramModel*>(&lm);
  if (!ngram) throw UnsupportedOperation("exact decoding needs an n-gram language model, got " + lm.kind());
  if (ngram->order() > 2) {
    throw UnsupportedOperation("exact decoding supports n-gram order <= 2, got " + std::to_string(ngram->order()));
  }
  if (!dynamic_cast<const ParametricDuration*>(&dur)) {
    throw UnsupportedOperation("exact decoding needs a geometric or negative binomial duration model, got " +
                               dur.family());
  }

  const auto em = emission_scores(posteriors, config);
  const auto alphabet = detail::resolve_alphabet(config);
  const auto T = static_cast<int>(em.rows());
  const int A = static_cast<int>(alphabet.size());
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  auto chord = [&](int i) { return alphabet[static_cast<std::size_t>(i)]; };

  // Flag log-probs after d frames of a segment, d = 1..D. When the first
  // no-change step is a fixed point (geometric) a single d suffices.
  std::vector<FlagLogProbs> flag;
  {
    auto session = dur.session();
    StateId s = session->start();
    for (int d = 1; d <= std::max(T, 1); ++d) {
      flag.push_back(session->log_probs(s));
      const StateId n = session->advance(s, false);
      if (d == 1 && n == s) break;
      s = n;
    }
  }
  const int D = static_cast<int>(flag.size());
  const bool memoryless = D == 1;

  auto session = ngram->session();
  const StateId start = session->start();
  const ClassLogProbs first = session->log_next(start);
  Eigen::MatrixXd trans(A, A);  // trans(from, to)
  for (int i = 0; i < A; ++i) {
    const ClassLogProbs next = session->log_next(session->advance(start, chord(i)));
    for (int j = 0; j < A; ++j) trans(i, j) = next[chord(j).index()];
  }

  // delta(d - 1, chord): best score with the current segment d frames long.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Constant(D, A, kNegInf), next(D, A);
  // Predecessor (chord, d) of each segment start; stays are implied.
  std::vector<std::pair<std::int32_t, std::int32_t>> back(static_cast<std::size_t>(T) * static_cast<std::size_t>(A),
                                                          {-1, -1});
  for (int i = 0; i < A; ++i) delta(0, i) = em(0, chord(i).index()) + first[chord(i).index()];

  Eigen::VectorXd leave(A);
  Eigen::VectorXi leave_d(A);
  for (int t = 1; t < T; ++t) {
    const int reach = std::min(t, D);  // d values live at t - 1
    for (int i = 0; i < A; ++i) {
      double best = kNegInf;
      int arg = -1;
      for (int d = 0; d < reach; ++d) {
        const double v = delta(d, i) + flag[static_cast<std::size_t>(d)].change;
        if (v > best) {
          best = v;
          arg = d;
        }
      }
      leave[i] = best;
      leave_d[i] = arg;
    }
    next.setConstant(kNegInf);
    auto* bp = back.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(A);
    for (int j = 0; j < A; ++j) {
      const double e = em(t, chord(j).index());
      double best = kNegInf;
      for (int i = 0; i < A; ++i) {
        if (i == j) continue;
        const double v = leave[i] + trans(i, j);
        if (v > best) {
          best = v;
          bp[j] = {i, leave_d[i]};
        }
      }
      next(0, j) = best + e;
      for (int d = 1; d < std::min(t + 1, D); ++d) next(d, j) = delta(d - 1, j) + flag[static_cast<std::size_t>(d - 1)].stay + e;
      if (memoryless) {
        // One state holds starts and stays; starts win ties.
        const double stay = delta(0, j) + flag[0].stay + e;
        if (stay > next(0, j)) {
          next(0, j) = stay;
          bp[j] = {-1, -1};
        }
      }
    }
    delta.swap(next);
  }

  Eigen::Index best_d = 0, best_i = 0;
  const double best = delta.maxCoeff(&best_d, &best_i);
  if (!(best > kNegInf)) throw ValidationError("no labelling has finite score");

  DecodeResult result;
  result.frame_rate = posteriors.frame_rate;
  result.log_score = best;
  result.frames.resize(static_cast<std::size_t>(T));
  int i = static_cast<int>(best_i), d = static_cast<int>(best_d);
  for (int t = T - 1; t >= 0; --t) {
    result.frames[static_cast<std::size_t>(t)] = chord(i);
    if (t == 0) break;
    const auto [pi, pd] = back[static_cast<std::size_t>(t) * static_cast<std::size_t>(A) + static_cast<std::size_t>(i)];
    if (d > 0) {
      --d;
    } else if (pi >= 0) {
      i = pi;
      d = pd;
    }
    // pi < 0 with d == 0: geometric stay, same chord.
  }
  return result;
}

}  // namespace chordrec
