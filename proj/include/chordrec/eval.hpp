#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "chordrec/timeline.hpp"

namespace chordrec {

struct Recall {
  double correct = 0.0;    // t_c, seconds
  double annotated = 0.0;  // t_a, seconds; excludes "X" spans
  // NaN when nothing is annotated.
  double ratio() const;
};

// The estimate is clipped to the annotation span and padded with no-chord.
Recall wcsr(const SegmentTimeline& annotation, const SegmentTimeline& estimate);
Recall root_recall(const SegmentTimeline& annotation, const SegmentTimeline& estimate);
double root_accuracy(const SegmentTimeline& annotation, const SegmentTimeline& estimate);

// Directional Hamming distance from `from` to `to`: the fraction of `from`
// not covered by the best-overlapping segment of `to`.
double directional_hamming(const SegmentTimeline& from, const SegmentTimeline& to);
// 1 - max of both directions; labels are ignored.
double segmentation_score(const SegmentTimeline& annotation, const SegmentTimeline& estimate);

struct SongScore {
  std::string id;
  double duration = 0.0;  // annotation span, seconds
  Recall majmin;
  Recall root;
  double segmentation = 0.0;
};

SongScore score_song(std::string id, const SegmentTimeline& annotation, const SegmentTimeline& estimate);

struct ScoreReport {
  double root = 0.0;          // pooled sum t_c / sum t_a
  double majmin = 0.0;        // pooled
  double segmentation = 0.0;  // weighted by song duration
  std::vector<SongScore> songs;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

ScoreReport corpus_report(std::vector<SongScore> songs);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
  // Zero variance of the differences: t is 0 (equal means) or infinite.
  bool degenerate_variance = false;
};

// Paired two-sided t-test on per-song scores.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double student_t_two_sided(double t, double df);

}  // namespace chordrec
