#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chordrec/chord.hpp"

namespace chordrec {

struct Segment {
  double start = 0.0;
  double end = 0.0;
  MaybeChord label;

  double duration() const { return end - start; }
};

// Contiguous, non-overlapping labelled segments.
class SegmentTimeline {
 public:
  SegmentTimeline() = default;
  // Throws ValidationError unless segments are contiguous with end > start.
  explicit SegmentTimeline(std::vector<Segment> segments);

  // Merges runs of equal frame labels; frame t covers [t, t+1) / frame_rate.
  static SegmentTimeline from_frames(std::span<const ChordClass> frames, double frame_rate);

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double start() const { return segments_.empty() ? 0.0 : segments_.front().start; }
  double end() const { return segments_.empty() ? 0.0 : segments_.back().end; }
  double duration() const { return end() - start(); }

  // Clips to [start, end]; uncovered parts become no-chord.
  SegmentTimeline fitted_to(double start, double end) const;

  // Label at the centre of each frame; uncovered frames are no-chord.
  std::vector<MaybeChord> sample_frames(int num_frames, double frame_rate) const;

  SegmentTimeline transposed(int shift) const;

 private:
  std::vector<Segment> segments_;
};

// `.lab` reader: "<start> <end> <label>" per line, tabs or spaces, blank
// lines ignored. Labels are reduced to the maj/min alphabet.
SegmentTimeline read_lab(std::istream& in);
SegmentTimeline read_lab(const std::filesystem::path& path);

// Raw labels as written in the file, no reduction.
struct RawSegment {
  double start;
  double end;
  std::string label;
};
std::vector<RawSegment> read_lab_raw(std::istream& in);

void write_lab(std::ostream& out, const SegmentTimeline& timeline);
void write_lab(const std::filesystem::path& path, const SegmentTimeline& timeline);

}  // namespace chordrec
