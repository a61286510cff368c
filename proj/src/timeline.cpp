#include "chordrec/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "chordrec/error.hpp"

namespace chordrec {
namespace {

constexpr double kContiguityTolerance = 1e-6;

}  // namespace

SegmentTimeline::SegmentTimeline(std::vector<Segment> segments) : segments_(std::move(segments)) {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (!std::isfinite(s.start) || !std::isfinite(s.end) || !(s.end > s.start)) {
      std::ostringstream msg;
      msg << "segment " << i << " has non-positive duration [" << s.start << ", " << s.end << ")";
      throw ValidationError(msg.str());
    }
    if (i > 0) {
      const double gap = s.start - segments_[i - 1].end;
      if (std::abs(gap) > kContiguityTolerance) {
        std::ostringstream msg;
        msg << "timeline not contiguous at segment " << i << ": previous ends at "
            << segments_[i - 1].end << ", next starts at " << s.start;
        throw ValidationError(msg.str());
      }
      segments_[i].start = segments_[i - 1].end;
    }
  }
}

SegmentTimeline SegmentTimeline::from_frames(std::span<const ChordClass> frames, double frame_rate) {
  std::vector<Segment> segments;
  std::size_t begin = 0;
  for (std::size_t t = 1; t <= frames.size(); ++t) {
    if (t == frames.size() || frames[t] != frames[begin]) {
      segments.push_back({static_cast<double>(begin) / frame_rate,
                          static_cast<double>(t) / frame_rate, frames[begin]});
      begin = t;
    }
  }
  return SegmentTimeline(std::move(segments));
}

SegmentTimeline SegmentTimeline::fitted_to(double start, double end) const {
  std::vector<Segment> out;
  if (segments_.empty()) {
    if (end > start) out.push_back({start, end, ChordClass::nochord()});
    return SegmentTimeline(std::move(out));
  }
  if (this->start() > start + kContiguityTolerance) {
    out.push_back({start, this->start(), ChordClass::nochord()});
  }
  for (const Segment& s : segments_) {
    const double a = std::max(s.start, start);
    const double b = std::min(s.end, end);
    if (b > a + kContiguityTolerance) out.push_back({a, b, s.label});
  }
  if (end > this->end() + kContiguityTolerance) {
    out.push_back({std::max(this->end(), start), end, ChordClass::nochord()});
  }
  return SegmentTimeline(std::move(out));
}

std::vector<MaybeChord> SegmentTimeline::sample_frames(int num_frames, double frame_rate) const {
  std::vector<MaybeChord> out(static_cast<std::size_t>(num_frames), ChordClass::nochord());
  std::size_t seg = 0;
  for (int t = 0; t < num_frames; ++t) {
    const double centre = (t + 0.5) / frame_rate;
    while (seg < segments_.size() && segments_[seg].end <= centre) ++seg;
    if (seg == segments_.size()) break;
    if (segments_[seg].start <= centre) out[static_cast<std::size_t>(t)] = segments_[seg].label;
  }
  return out;
}

SegmentTimeline SegmentTimeline::transposed(int shift) const {
  std::vector<Segment> out = segments_;
  for (Segment& s : out) {
    if (s.label) s.label = transpose(*s.label, shift);
  }
  return SegmentTimeline(std::move(out));
}

std::vector<RawSegment> read_lab_raw(std::istream& in) {
  std::vector<RawSegment> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::istringstream fields(line);
    RawSegment seg;
    if (!(fields >> seg.start)) {
      std::string token;
      fields.clear();
      if (std::istringstream(line) >> token) {
        throw ParseError("lab line " + std::to_string(line_number) + ": bad start time '" +
                         token + "'");
      }
      continue;  // blank line
    }
    if (!(fields >> seg.end)) {
      throw ParseError("lab line " + std::to_string(line_number) + ": missing or bad end time");
    }
    if (!(fields >> seg.label)) {
      throw ParseError("lab line " + std::to_string(line_number) + ": missing label");
    }
    out.push_back(std::move(seg));
  }
  return out;
}

SegmentTimeline read_lab(std::istream& in) {
  std::vector<Segment> segments;
  for (RawSegment& raw : read_lab_raw(in)) {
    segments.push_back({raw.start, raw.end, classify_label(raw.label)});
  }
  return SegmentTimeline(std::move(segments));
}

SegmentTimeline read_lab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open lab file " + path.string());
  return read_lab(in);
}

void write_lab(std::ostream& out, const SegmentTimeline& timeline) {
  out << std::fixed << std::setprecision(6);
  for (const Segment& s : timeline.segments()) {
    out << s.start << '\t' << s.end << '\t' << to_string(s.label) << '\n';
  }
}

void write_lab(const std::filesystem::path& path, const SegmentTimeline& timeline) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write lab file " + path.string());
  write_lab(out, timeline);
}

}  // namespace chordrec
