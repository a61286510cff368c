#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "chordrec/chord.hpp"
#include "chordrec/duration.hpp"
#include "chordrec/language_model.hpp"
#include "chordrec/posteriors.hpp"

namespace chordrec {

// Key-invariant third-order chord source over the six diatonic triads of a
// major key (I ii iii IV V vi). Each context of three degrees has a sparse
// Dirichlet-drawn successor distribution. A song draws a random key and a
// loop of loop_min..loop_max chords from the source, then repeats the loop;
// each chord deviates with probability `deviation` and is redrawn from the
// source given the song so far.
struct LoopSourceConfig {
  double concentration = 0.3;
  int loop_min = 4;
  int loop_max = 8;
  double deviation = 0.1;
};

class LoopedChordSource {
 public:
  static constexpr int kDegrees = 6;
  static constexpr int kStart = kDegrees;  // context padding

  LoopedChordSource(const LoopSourceConfig& config, std::uint64_t table_seed);

  const LoopSourceConfig& config() const { return config_; }
  // P(next degree | d1 d2 d3), oldest first; kStart pads short histories.
  const std::array<double, kDegrees>& successors(int d1, int d2, int d3) const;
  static ChordClass degree_chord(int key, int degree);

  // Degrees of one song's loop (first and last differ, adjacent differ).
  std::vector<int> sample_loop(std::mt19937_64& rng) const;
  int sample_next(std::span<const int> history, std::mt19937_64& rng) const;

 private:
  LoopSourceConfig config_;
  std::vector<std::array<double, kDegrees>> table_;
};

// Segment lengths are period * m with m drawn from `multiples`; large m are
// the no-change gaps.
struct RhythmConfig {
  std::vector<int> periods = {8};
  std::vector<std::pair<int, double>> multiples = {{1, 0.6}, {2, 0.3}, {4, 0.08}, {12, 0.02}};

  void validate() const;
};

struct SynthConfig {
  int songs = 200;
  int frames = 1800;
  double frame_rate = 10.0;
  // 0 gives one-hot posteriors, 1 uniform ones.
  double noise = 0.7;
  // Posterior logits (1 - noise) * (scale * (1 - noise) / noise * onehot + g_t)
  // with g_t a unit-variance AR(1) process per class.
  double noise_scale = 5.0;
  double noise_correlation = 0.5;
  double valid_fraction = 0.1;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  LoopSourceConfig source;
  RhythmConfig rhythm;

  void validate() const;
  nlohmann::json to_json() const;
};

struct SynthSong {
  std::string id;
  std::vector<ChordClass> labels;  // one per frame
  PosteriorMatrix posteriors;
};

struct SynthSplit {
  std::vector<std::string> train, valid, test;
};

// Chords come from `lm` and segment lengths from `duration` when given,
// otherwise from the built-in looped source and periodic rhythm.
std::vector<SynthSong> synth_songs(const SynthConfig& config, const LanguageModel* lm = nullptr,
                                   const ParametricDuration* duration = nullptr);
SynthSplit synth_split(const std::vector<SynthSong>& songs, const SynthConfig& config);

PosteriorMatrix noisy_posteriors(std::span<const ChordClass> labels, double noise, double scale, double correlation,
                                 double frame_rate, std::mt19937_64& rng);

// Layout: songs/<id>.lab, songs/<id>.posteriors.csv, {train,valid,test}.txt
// (song ids), {train,valid,test}.chords (compressed chord corpus),
// metadata.json.
void write_synth_dataset(const std::filesystem::path& dir, const std::vector<SynthSong>& songs,
                         const SynthSplit& split, const nlohmann::json& metadata);

// One id per line; blank lines and '#' comments skipped.
std::vector<std::string> read_id_list(const std::filesystem::path& path);

}  // namespace chordrec
