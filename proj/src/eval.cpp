#include "chordrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "chordrec/error.hpp"

namespace chordrec {
namespace {

using Match = std::function<bool(ChordClass annotated, ChordClass estimated)>;

// Sum of intersection lengths over annotated (non-"X") segment pairs, and
// the annotated time.
Recall overlap_recall(const SegmentTimeline& annotation, const SegmentTimeline& estimate, const Match& match) {
  Recall r;
  if (annotation.empty()) return r;
  const SegmentTimeline est = estimate.fitted_to(annotation.start(), annotation.end());
  const auto& A = annotation.segments();
  const auto& E = est.segments();
  std::size_t j = 0;
  for (const Segment& a : A) {
    if (!a.label) continue;
    r.annotated += a.duration();
    while (j < E.size() && E[j].end <= a.start) ++j;
    for (std::size_t k = j; k < E.size() && E[k].start < a.end; ++k) {
      const double overlap = std::min(a.end, E[k].end) - std::max(a.start, E[k].start);
      if (overlap > 0 && E[k].label && match(*a.label, *E[k].label)) r.correct += overlap;
    }
  }
  return r;
}

bool same_root(ChordClass a, ChordClass b) {
  if (a.is_nochord() || b.is_nochord()) return a.is_nochord() && b.is_nochord();
  return a.root() == b.root();
}

}  // namespace

double Recall::ratio() const {
  return annotated > 0 ? correct / annotated : std::numeric_limits<double>::quiet_NaN();
}

Recall wcsr(const SegmentTimeline& annotation, const SegmentTimeline& estimate) {
  return overlap_recall(annotation, estimate, [](ChordClass a, ChordClass b) { return a == b; });
}

Recall root_recall(const SegmentTimeline& annotation, const SegmentTimeline& estimate) {
  return overlap_recall(annotation, estimate, same_root);
}

double root_accuracy(const SegmentTimeline& annotation, const SegmentTimeline& estimate) {
  return root_recall(annotation, estimate).ratio();
}

double directional_hamming(const SegmentTimeline& from, const SegmentTimeline& to) {
  if (from.empty()) return 0.0;
  const SegmentTimeline other = to.fitted_to(from.start(), from.end());
  const auto& B = other.segments();
  double missed = 0.0;
  std::size_t j = 0;
  for (const Segment& a : from.segments()) {
    while (j < B.size() && B[j].end <= a.start) ++j;
    double best = 0.0;
    for (std::size_t k = j; k < B.size() && B[k].start < a.end; ++k) {
      best = std::max(best, std::min(a.end, B[k].end) - std::max(a.start, B[k].start));
    }
    missed += a.duration() - best;
  }
  return missed / from.duration();
}

double segmentation_score(const SegmentTimeline& annotation, const SegmentTimeline& estimate) {
  if (annotation.empty()) throw ValidationError("cannot score against an empty annotation");
  const SegmentTimeline est = estimate.fitted_to(annotation.start(), annotation.end());
  return 1.0 - std::max(directional_hamming(annotation, est), directional_hamming(est, annotation));
}

SongScore score_song(std::string id, const SegmentTimeline& annotation, const SegmentTimeline& estimate) {
  SongScore s;
  s.id = std::move(id);
  s.duration = annotation.duration();
  s.majmin = wcsr(annotation, estimate);
  s.root = root_recall(annotation, estimate);
  s.segmentation = segmentation_score(annotation, estimate);
  return s;
}

ScoreReport corpus_report(std::vector<SongScore> songs) {
  if (songs.empty()) throw ValidationError("corpus report needs at least one song");
  ScoreReport r;
  double tc_mm = 0, tc_root = 0, ta = 0, seg = 0, total = 0;
  for (const SongScore& s : songs) {
    tc_mm += s.majmin.correct;
    tc_root += s.root.correct;
    ta += s.majmin.annotated;
    seg += s.segmentation * s.duration;
    total += s.duration;
  }
  r.majmin = ta > 0 ? tc_mm / ta : std::numeric_limits<double>::quiet_NaN();
  r.root = ta > 0 ? tc_root / ta : std::numeric_limits<double>::quiet_NaN();
  r.segmentation = total > 0 ? seg / total : std::numeric_limits<double>::quiet_NaN();
  r.songs = std::move(songs);
  return r;
}

nlohmann::json ScoreReport::to_json() const {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  nlohmann::json per_song = nlohmann::json::array();
  for (const SongScore& s : songs) {
    per_song.push_back({{"id", s.id},
                        {"duration", s.duration},
                        {"majmin", num(s.majmin.ratio())},
                        {"root", num(s.root.ratio())},
                        {"segmentation", s.segmentation},
                        {"t_c", s.majmin.correct},
                        {"t_a", s.majmin.annotated}});
  }
  return {{"root", num(root)},
          {"majmin", num(majmin)},
          {"segmentation", num(segmentation)},
          {"songs", songs.size()},
          {"weighting",
           {{"majmin", "pooled: sum t_c / sum t_a"},
            {"root", "pooled: sum t_c / sum t_a"},
            {"segmentation", "mean weighted by annotated song duration"}}},
          {"per_song", std::move(per_song)}};
}

void ScoreReport::write_csv(std::ostream& out) const {
  out << "song,duration,t_a,t_c_majmin,t_c_root,majmin,root,segmentation\n";
  for (const SongScore& s : songs) {
    out << s.id << ',' << s.duration << ',' << s.majmin.annotated << ',' << s.majmin.correct << ','
        << s.root.correct << ',' << s.majmin.ratio() << ',' << s.root.ratio() << ',' << s.segmentation << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw ParameterError("incomplete beta needs a, b > 0");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
  if (x < (a + 1) / (a + b + 2)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0)) throw ParameterError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired t-test needs samples of equal length");
  if (a.size() < 2) throw ValidationError("paired t-test needs at least 2 pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = std::sqrt(ss / (n - 1));

  TTestResult r;
  r.df = static_cast<int>(a.size()) - 1;
  if (sd == 0.0) {
    r.degenerate_variance = true;
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

}  // namespace chordrec
