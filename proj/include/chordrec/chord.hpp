#pragma once

#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chordrec {

inline constexpr int kNumRoots = 12;
inline constexpr int kNumClasses = 25;
inline constexpr int kNoChordIndex = 24;

class PitchClass {
 public:
  constexpr PitchClass() = default;
  // Any integer; reduced modulo 12.
  constexpr explicit PitchClass(int semitone)
      : value_(static_cast<std::uint8_t>(((semitone % 12) + 12) % 12)) {}

  constexpr int value() const { return value_; }
  constexpr PitchClass shifted(int semitones) const {
    return PitchClass(value_ + semitones);
  }
  friend constexpr bool operator==(PitchClass, PitchClass) = default;

 private:
  std::uint8_t value_ = 0;
};

// Interval content of a parsed annotation label. Bass notes are dropped.
struct ParsedChord {
  std::optional<PitchClass> root;
  std::bitset<12> intervals;
  bool is_nochord = false;
  bool is_unknown = false;  // "X"

  static ParsedChord nochord() { return {std::nullopt, {}, true, false}; }
  static ParsedChord unknown() { return {std::nullopt, {}, false, true}; }
};

enum class Quality : std::uint8_t { kMajor, kMinor, kNoChord };

// One of the 25 decoder labels: 0-11 major by root, 12-23 minor by root,
// 24 no-chord.
class ChordClass {
 public:
  constexpr ChordClass() = default;
  constexpr explicit ChordClass(int index) : index_(static_cast<std::uint8_t>(index)) {}

  static constexpr ChordClass major(PitchClass root) { return ChordClass(root.value()); }
  static constexpr ChordClass minor(PitchClass root) { return ChordClass(12 + root.value()); }
  static constexpr ChordClass nochord() { return ChordClass(kNoChordIndex); }

  constexpr int index() const { return index_; }
  constexpr bool is_nochord() const { return index_ == kNoChordIndex; }
  constexpr Quality quality() const {
    return index_ == kNoChordIndex ? Quality::kNoChord
           : index_ < 12           ? Quality::kMajor
                                   : Quality::kMinor;
  }
  // Undefined for no-chord.
  constexpr PitchClass root() const { return PitchClass(index_ % 12); }

  friend constexpr bool operator==(ChordClass, ChordClass) = default;
  friend constexpr auto operator<=>(ChordClass a, ChordClass b) { return a.index_ <=> b.index_; }

 private:
  std::uint8_t index_ = kNoChordIndex;
};

// A label on a timeline: a chord class, or nullopt for labels excluded from
// evaluation ("X").
using MaybeChord = std::optional<ChordClass>;

ParsedChord parse_label(std::string_view text);

// nullopt for "X".
MaybeChord reduce_to_majmin(const ParsedChord& chord);

// Convenience: parse + reduce.
MaybeChord classify_label(std::string_view text);

std::vector<ChordClass> compress(std::span<const ChordClass> labels);

ChordClass transpose(ChordClass chord, int shift);
ParsedChord transpose(const ParsedChord& chord, int shift);

// "C:maj", "A:min", "N".
std::string to_string(ChordClass chord);
std::string to_string(const MaybeChord& chord);

// Names of all supported shorthands, in table order.
std::span<const std::string_view> supported_shorthands();

}  // namespace chordrec
