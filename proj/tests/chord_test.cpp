#include <random>
#include <sstream>

#include "chordrec/chord.hpp"
#include "chordrec/error.hpp"
#include "chordrec/timeline.hpp"
#include "doctest.h"

using namespace chordrec;

namespace {

std::bitset<12> bits(std::initializer_list<int> xs) {
  std::bitset<12> b;
  for (int x : xs) b.set(static_cast<std::size_t>(x));
  return b;
}

ChordClass random_class(std::mt19937& rng) {
  return ChordClass(std::uniform_int_distribution<int>(0, kNumClasses - 1)(rng));
}

}  // namespace

TEST_CASE("parse_label examples") {
  const auto c_min7 = parse_label("C:min7");
  REQUIRE(c_min7.root);
  CHECK(c_min7.root->value() == 0);
  CHECK(c_min7.intervals == bits({0, 3, 7, 10}));

  CHECK(parse_label("N").is_nochord);
  CHECK_FALSE(parse_label("N").root);

  const auto d_sharp = parse_label("D#:maj");
  CHECK(d_sharp.root->value() == 3);
  CHECK(d_sharp.intervals == bits({0, 4, 7}));
}

TEST_CASE("shorthand table matches chord spellings") {
  // Spelled on C: pitch classes of the chord tones.
  struct Row {
    const char* label;
    std::initializer_list<int> notes;
  };
  const Row rows[] = {
      {"C:maj", {0, 4, 7}},         {"C:min", {0, 3, 7}},          {"C:7", {0, 4, 7, 10}},
      {"C:maj7", {0, 4, 7, 11}},    {"C:min7", {0, 3, 7, 10}},     {"C:dim", {0, 3, 6}},
      {"C:aug", {0, 4, 8}},         {"C:dim7", {0, 3, 6, 9}},      {"C:hdim7", {0, 3, 6, 10}},
      {"C:sus2", {0, 2, 7}},        {"C:sus4", {0, 5, 7}},         {"C:min6", {0, 3, 7, 9}},
      {"C:maj6", {0, 4, 7, 9}},     {"C:9", {0, 2, 4, 7, 10}},     {"C:maj9", {0, 2, 4, 7, 11}},
      {"C:min9", {0, 2, 3, 7, 10}}, {"C:1", {0}},                  {"C:5", {0, 7}},
  };
  for (const auto& row : rows) {
    CAPTURE(row.label);
    CHECK(parse_label(row.label).intervals == bits(row.notes));
  }
  CHECK(supported_shorthands().size() == 18);
}

TEST_CASE("parse_label syntax variants") {
  CHECK(parse_label("G").intervals == bits({0, 4, 7}));
  CHECK(parse_label("Bb:min/b3").root->value() == 10);
  CHECK(parse_label("Cb").root->value() == 11);
  CHECK(parse_label("B#:min").root->value() == 0);
  CHECK(parse_label("Ebb").root->value() == 2);
  CHECK(parse_label("C:(1,b3,5)").intervals == bits({0, 3, 7}));
  CHECK(parse_label("C:min(*b3)").intervals == bits({0, 7}));
  CHECK(parse_label("C:maj(b3)").intervals == bits({0, 3, 4, 7}));
  CHECK(parse_label("C:7(#9)").intervals == bits({0, 3, 4, 7, 10}));
  CHECK(parse_label("A:min/5").root->value() == 9);
  CHECK(parse_label("X").is_unknown);
}

TEST_CASE("parse_label errors name the offending token") {
  auto message_of = [](const char* label) {
    try {
      parse_label(label);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of("H:maj").find("'H'") != std::string::npos);
  CHECK(message_of("C:foo").find("supported: maj min") != std::string::npos);
  CHECK(message_of("C:maj(b3").find("unterminated") != std::string::npos);
  CHECK(message_of("C:maj(x)").find("'x'") != std::string::npos);
  CHECK(message_of("Cmaj").find("'maj'") != std::string::npos);
  CHECK(message_of("").find("empty") != std::string::npos);
  CHECK(message_of("C:").find("missing shorthand") != std::string::npos);
  CHECK(message_of("C/").find("malformed interval") != std::string::npos);
}

TEST_CASE("reduce_to_majmin examples") {
  CHECK(reduce_to_majmin(parse_label("C:min7")) == ChordClass(12));
  CHECK(reduce_to_majmin(parse_label("N")) == ChordClass(24));
  CHECK(reduce_to_majmin(parse_label("C:dim")) == ChordClass(12));
  CHECK(reduce_to_majmin(parse_label("C:hdim7")) == ChordClass::minor(PitchClass(0)));
  CHECK(reduce_to_majmin(parse_label("D:7")) == ChordClass::major(PitchClass(2)));
  CHECK(reduce_to_majmin(parse_label("C:sus4")) == ChordClass::major(PitchClass(0)));
  CHECK(reduce_to_majmin(parse_label("C:min(*b3)")) == ChordClass::major(PitchClass(0)));
  CHECK(reduce_to_majmin(parse_label("C:7(#9)")) == ChordClass::minor(PitchClass(0)));
  CHECK_FALSE(reduce_to_majmin(parse_label("X")).has_value());
}

TEST_CASE("compress examples") {
  const ChordClass C(0), F(5), G(7);
  CHECK(compress(std::vector{C, C, F, F, G}) == std::vector{C, F, G});
  CHECK(compress(std::vector{C}) == std::vector{C});
  CHECK(compress(std::vector{G, G, G, G}) == std::vector{G});
  CHECK(compress(std::vector<ChordClass>{}).empty());
}

TEST_CASE("transpose examples") {
  CHECK(transpose(ChordClass(0), 12) == ChordClass(0));
  CHECK(transpose(ChordClass::nochord(), 5) == ChordClass::nochord());
  CHECK(transpose(ChordClass::minor(PitchClass(9)), 3) == ChordClass::minor(PitchClass(0)));
  CHECK(transpose(ChordClass::major(PitchClass(2)), -3) == ChordClass::major(PitchClass(11)));
}

TEST_CASE("transpose composes additively") {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> shift(-40, 40);
  for (int i = 0; i < 2000; ++i) {
    const ChordClass c = random_class(rng);
    const int a = shift(rng), b = shift(rng);
    CHECK(transpose(transpose(c, a), b) == transpose(c, a + b));
    CHECK(transpose(c, a).quality() == c.quality());
  }
}

TEST_CASE("compress is idempotent and keeps first occurrence order") {
  std::mt19937 rng(2);
  for (int i = 0; i < 500; ++i) {
    std::vector<ChordClass> seq(std::uniform_int_distribution<std::size_t>(0, 30)(rng));
    for (auto& c : seq) c = ChordClass(std::uniform_int_distribution<int>(0, 3)(rng));
    const auto once = compress(seq);
    CHECK(compress(once) == once);
    for (std::size_t k = 1; k < once.size(); ++k) CHECK(once[k] != once[k - 1]);
    if (!seq.empty()) CHECK(once.front() == seq.front());
    // Expanding back: every element of seq equals some element of once in order.
    std::size_t j = 0;
    for (ChordClass c : seq) {
      if (c != once[j]) ++j;
      REQUIRE(j < once.size());
      CHECK(c == once[j]);
    }
  }
}

TEST_CASE("reduction commutes with transposition") {
  std::mt19937 rng(3);
  const char* roots[] = {"C", "C#", "Db", "D", "Eb", "E", "F", "F#", "Gb", "G", "Ab", "A", "Bb", "B", "Cb"};
  const auto shorthands = supported_shorthands();
  for (const char* root : roots) {
    for (auto sh : shorthands) {
      const std::string label = std::string(root) + ":" + std::string(sh);
      const auto parsed = parse_label(label);
      const int shift = std::uniform_int_distribution<int>(-12, 12)(rng);
      const auto a = reduce_to_majmin(transpose(parsed, shift));
      const auto b = reduce_to_majmin(parsed);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(*a == transpose(*b, shift));
    }
  }
}

TEST_CASE("to_string round trips through classify_label") {
  for (int i = 0; i < kNumClasses; ++i) {
    CHECK(classify_label(to_string(ChordClass(i))) == ChordClass(i));
  }
}

TEST_CASE("lab reader tolerates tabs, spaces and blank lines") {
  std::istringstream in("0.0 1.5\tC:maj\n\n1.5\t3.0  A:min7\n3.0 4.0 X\n  \n");
  const auto tl = read_lab(in);
  REQUIRE(tl.segments().size() == 3);
  CHECK(tl.segments()[0].label == ChordClass(0));
  CHECK(tl.segments()[1].label == ChordClass::minor(PitchClass(9)));
  CHECK_FALSE(tl.segments()[2].label.has_value());
  CHECK(tl.end() == doctest::Approx(4.0));

  std::istringstream gap("0 1 C\n1.5 2 G\n");
  CHECK_THROWS_AS(read_lab(gap), ValidationError);
  std::istringstream bad("0 one C\n");
  CHECK_THROWS_AS(read_lab(bad), ParseError);
}

TEST_CASE("timeline from frames and write/read round trip") {
  const std::vector<ChordClass> frames = {ChordClass(0), ChordClass(0), ChordClass(7),
                                          ChordClass(24)};
  const auto tl = SegmentTimeline::from_frames(frames, 10.0);
  REQUIRE(tl.segments().size() == 3);
  CHECK(tl.segments()[1].start == doctest::Approx(0.2));
  CHECK(tl.end() == doctest::Approx(0.4));
  std::stringstream io;
  write_lab(io, tl);
  const auto back = read_lab(io);
  REQUIRE(back.segments().size() == 3);
  CHECK(back.segments()[2].label == ChordClass(24));
  const auto sampled = back.sample_frames(4, 10.0);
  for (std::size_t t = 0; t < 4; ++t) CHECK(sampled[t] == frames[t]);
}
