#include "chordrec/chord.hpp"

#include <array>
#include <cctype>
#include <string>

#include "chordrec/error.hpp"

namespace chordrec {
namespace {

struct Shorthand {
  std::string_view name;
  std::initializer_list<int> intervals;
};

constexpr std::array<std::string_view, 18> kShorthandNames = {
    "maj", "min", "7", "maj7", "min7", "dim", "aug", "dim7", "hdim7",
    "sus2", "sus4", "min6", "maj6", "9", "maj9", "min9", "1", "5"};

std::bitset<12> shorthand_intervals(std::string_view name) {
  static const std::array<Shorthand, 18> table = {{
      {"maj", {0, 4, 7}},
      {"min", {0, 3, 7}},
      {"7", {0, 4, 7, 10}},
      {"maj7", {0, 4, 7, 11}},
      {"min7", {0, 3, 7, 10}},
      {"dim", {0, 3, 6}},
      {"aug", {0, 4, 8}},
      {"dim7", {0, 3, 6, 9}},
      {"hdim7", {0, 3, 6, 10}},
      {"sus2", {0, 2, 7}},
      {"sus4", {0, 5, 7}},
      {"min6", {0, 3, 7, 9}},
      {"maj6", {0, 4, 7, 9}},
      {"9", {0, 4, 7, 10, 2}},
      {"maj9", {0, 4, 7, 11, 2}},
      {"min9", {0, 3, 7, 10, 2}},
      {"1", {0}},
      {"5", {0, 7}},
  }};
  for (const auto& entry : table) {
    if (entry.name == name) {
      std::bitset<12> bits;
      for (int i : entry.intervals) bits.set(static_cast<std::size_t>(i));
      return bits;
    }
  }
  std::string message = "unknown chord shorthand '" + std::string(name) + "'; supported:";
  for (auto n : kShorthandNames) message += " " + std::string(n);
  throw ParseError(message);
}

int letter_semitone(char letter) {
  switch (letter) {
    case 'C': return 0;
    case 'D': return 2;
    case 'E': return 4;
    case 'F': return 5;
    case 'G': return 7;
    case 'A': return 9;
    case 'B': return 11;
    default: return -1;
  }
}

// Degree like "b3", "#5", "9", "13" to a semitone offset mod 12.
int degree_semitone(std::string_view token, std::string_view label) {
  static constexpr std::array<int, 7> kDegree = {0, 2, 4, 5, 7, 9, 11};
  int shift = 0;
  std::size_t i = 0;
  while (i < token.size() && (token[i] == 'b' || token[i] == '#')) {
    shift += token[i] == '#' ? 1 : -1;
    ++i;
  }
  if (i == token.size()) {
    throw ParseError("malformed interval '" + std::string(token) + "' in label '" +
                     std::string(label) + "'");
  }
  int degree = 0;
  for (; i < token.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(token[i])) || degree > 100) {
      throw ParseError("malformed interval '" + std::string(token) + "' in label '" +
                       std::string(label) + "'");
    }
    degree = degree * 10 + (token[i] - '0');
  }
  if (degree < 1) {
    throw ParseError("malformed interval '" + std::string(token) + "' in label '" +
                     std::string(label) + "'");
  }
  int semitone = kDegree[static_cast<std::size_t>((degree - 1) % 7)] + 12 * ((degree - 1) / 7);
  return (((semitone + shift) % 12) + 12) % 12;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::span<const std::string_view> supported_shorthands() { return kShorthandNames; }

ParsedChord parse_label(std::string_view text) {
  const std::string_view label = trim(text);
  if (label.empty()) throw ParseError("empty chord label");
  if (label == "N") return ParsedChord::nochord();
  if (label == "X") return ParsedChord::unknown();

  const int base = letter_semitone(label.front());
  if (base < 0) {
    throw ParseError("malformed root '" + std::string(label.substr(0, 1)) + "' in label '" +
                     std::string(label) + "'");
  }
  std::size_t pos = 1;
  int root = base;
  while (pos < label.size() && (label[pos] == '#' || label[pos] == 'b')) {
    root += label[pos] == '#' ? 1 : -1;
    ++pos;
  }

  // Split off the bass; it does not influence classification but must be
  // well-formed.
  std::string_view rest = label.substr(pos);
  if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
    degree_semitone(rest.substr(slash + 1), label);
    rest = rest.substr(0, slash);
  }

  std::string_view shorthand;
  std::string_view additions;
  bool has_additions = false;
  if (!rest.empty()) {
    if (rest.front() != ':') {
      throw ParseError("unexpected token '" + std::string(rest) + "' in label '" +
                       std::string(label) + "'");
    }
    rest.remove_prefix(1);
    const auto open = rest.find('(');
    shorthand = rest.substr(0, open);
    if (open != std::string_view::npos) {
      if (rest.back() != ')') {
        throw ParseError("unterminated interval list '" + std::string(rest.substr(open)) +
                         "' in label '" + std::string(label) + "'");
      }
      additions = rest.substr(open + 1, rest.size() - open - 2);
      has_additions = true;
    }
    if (shorthand.empty() && !has_additions) {
      throw ParseError("missing shorthand after ':' in label '" + std::string(label) + "'");
    }
  }

  ParsedChord chord;
  chord.root = PitchClass(root);
  if (!shorthand.empty()) {
    chord.intervals = shorthand_intervals(shorthand);
  } else if (!has_additions) {
    chord.intervals = shorthand_intervals("maj");
  }

  while (has_additions && !additions.empty()) {
    const auto comma = additions.find(',');
    std::string_view token = trim(additions.substr(0, comma));
    additions = comma == std::string_view::npos ? std::string_view{} : additions.substr(comma + 1);
    if (token.empty()) {
      throw ParseError("empty interval in label '" + std::string(label) + "'");
    }
    const bool omit = token.front() == '*';
    if (omit) token.remove_prefix(1);
    const int semitone = degree_semitone(token, label);
    chord.intervals.set(static_cast<std::size_t>(semitone), !omit);
  }
  chord.intervals.set(0);
  return chord;
}

MaybeChord reduce_to_majmin(const ParsedChord& chord) {
  if (chord.is_unknown) return std::nullopt;
  if (chord.is_nochord) return ChordClass::nochord();
  return chord.intervals.test(3) ? ChordClass::minor(*chord.root) : ChordClass::major(*chord.root);
}

MaybeChord classify_label(std::string_view text) { return reduce_to_majmin(parse_label(text)); }

std::vector<ChordClass> compress(std::span<const ChordClass> labels) {
  std::vector<ChordClass> out;
  out.reserve(labels.size());
  for (ChordClass c : labels) {
    if (out.empty() || out.back() != c) out.push_back(c);
  }
  return out;
}

ChordClass transpose(ChordClass chord, int shift) {
  switch (chord.quality()) {
    case Quality::kMajor: return ChordClass::major(chord.root().shifted(shift));
    case Quality::kMinor: return ChordClass::minor(chord.root().shifted(shift));
    case Quality::kNoChord: break;
  }
  return chord;
}

ParsedChord transpose(const ParsedChord& chord, int shift) {
  ParsedChord out = chord;
  if (out.root) out.root = out.root->shifted(shift);
  return out;
}

std::string to_string(ChordClass chord) {
  static constexpr std::array<std::string_view, 12> kNames = {
      "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
  if (chord.is_nochord()) return "N";
  return std::string(kNames[static_cast<std::size_t>(chord.root().value())]) +
         (chord.quality() == Quality::kMajor ? ":maj" : ":min");
}

std::string to_string(const MaybeChord& chord) { return chord ? to_string(*chord) : "X"; }

}  // namespace chordrec
