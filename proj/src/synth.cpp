#include "chordrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "chordrec/error.hpp"
#include "chordrec/timeline.hpp"

namespace chordrec {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

int context_index(int d1, int d2, int d3) {
  constexpr int k = LoopedChordSource::kDegrees + 1;
  return (d1 * k + d2) * k + d3;
}

template <std::size_t N>
int draw(const std::array<double, N>& p, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t i = 0; i < N; ++i) {
    u -= p[i];
    if (u < 0) return static_cast<int>(i);
  }
  for (std::size_t i = N; i-- > 0;)
    if (p[i] > 0) return static_cast<int>(i);
  return 0;
}

int draw(const ClassProbs& p, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * p.sum();
  for (int i = 0; i < kNumClasses; ++i) {
    u -= p(i);
    if (u < 0) return i;
  }
  return kNumClasses - 1;
}

// Endless chord generator for one song.
class ChordStream {
 public:
  virtual ~ChordStream() = default;
  virtual ChordClass next(std::mt19937_64& rng) = 0;
};

class LoopStream final : public ChordStream {
 public:
  LoopStream(const LoopedChordSource& source, std::mt19937_64& rng)
      : source_(source), key_(static_cast<int>(rng() % 12)), loop_(source.sample_loop(rng)) {}

  ChordClass next(std::mt19937_64& rng) override {
    int d = loop_[pos_ % loop_.size()];
    ++pos_;
    const bool deviate = std::bernoulli_distribution(source_.config().deviation)(rng);
    if (deviate || (!history_.empty() && d == history_.back())) d = source_.sample_next(history_, rng);
    history_.push_back(d);
    return LoopedChordSource::degree_chord(key_, d);
  }

 private:
  const LoopedChordSource& source_;
  int key_;
  std::vector<int> loop_;
  std::size_t pos_ = 0;
  std::vector<int> history_;
};

class LmStream final : public ChordStream {
 public:
  explicit LmStream(const LanguageModel& lm) : session_(lm.session()), state_(session_->start()) {}

  ChordClass next(std::mt19937_64& rng) override {
    const ClassProbs p = exclude_repeat(session_->raw_next(state_), session_->last(state_));
    const ChordClass c(draw(p, rng));
    state_ = session_->advance(state_, c);
    session_->flush();
    return c;
  }

 private:
  std::unique_ptr<LmSession> session_;
  StateId state_;
};

int segment_length(const RhythmConfig& rhythm, int period, std::mt19937_64& rng) {
  std::vector<double> w;
  for (const auto& [m, weight] : rhythm.multiples) w.push_back(weight);
  const auto k = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
  return period * rhythm.multiples[k].first;
}

}  // namespace

LoopedChordSource::LoopedChordSource(const LoopSourceConfig& config, std::uint64_t table_seed) : config_(config) {
  if (!(config.concentration > 0)) throw ParameterError("source concentration must be positive");
  if (config.loop_min < 2 || config.loop_max < config.loop_min) throw ParameterError("invalid loop length range");
  if (!(config.deviation >= 0 && config.deviation <= 1)) throw ParameterError("deviation must lie in [0, 1]");
  std::mt19937_64 rng(table_seed);
  std::gamma_distribution<double> gamma(config.concentration, 1.0);
  constexpr int k = kDegrees + 1;
  table_.resize(k * k * k);
  for (int d1 = 0; d1 < k; ++d1)
    for (int d2 = 0; d2 < k; ++d2)
      for (int d3 = 0; d3 < k; ++d3) {
        auto& p = table_[static_cast<std::size_t>(context_index(d1, d2, d3))];
        double total = 0;
        for (int n = 0; n < kDegrees; ++n) {
          p[static_cast<std::size_t>(n)] = n == d3 ? 0.0 : gamma(rng) + 1e-12;
          total += p[static_cast<std::size_t>(n)];
        }
        for (double& x : p) x /= total;
      }
}

const std::array<double, LoopedChordSource::kDegrees>& LoopedChordSource::successors(int d1, int d2, int d3) const {
  return table_[static_cast<std::size_t>(context_index(d1, d2, d3))];
}

ChordClass LoopedChordSource::degree_chord(int key, int degree) {
  // I ii iii IV V vi
  static constexpr int kRoot[kDegrees] = {0, 2, 4, 5, 7, 9};
  static constexpr bool kMinor[kDegrees] = {false, true, true, false, false, true};
  const int root = (key + kRoot[degree]) % 12;
  return ChordClass(kMinor[degree] ? 12 + root : root);
}

int LoopedChordSource::sample_next(std::span<const int> history, std::mt19937_64& rng) const {
  int ctx[3] = {kStart, kStart, kStart};
  const std::size_t n = history.size();
  for (std::size_t i = 0; i < 3 && i < n; ++i) ctx[2 - i] = history[n - 1 - i];
  return draw(successors(ctx[0], ctx[1], ctx[2]), rng);
}

std::vector<int> LoopedChordSource::sample_loop(std::mt19937_64& rng) const {
  const int len = std::uniform_int_distribution<int>(config_.loop_min, config_.loop_max)(rng);
  for (;;) {
    std::vector<int> loop;
    while (static_cast<int>(loop.size()) < len) loop.push_back(sample_next(loop, rng));
    if (loop.front() != loop.back()) return loop;
  }
}

void RhythmConfig::validate() const {
  if (periods.empty() || multiples.empty()) throw ParameterError("rhythm needs periods and multiples");
  for (int p : periods)
    if (p < 1) throw ParameterError("rhythm periods must be positive");
  double total = 0;
  for (const auto& [m, w] : multiples) {
    if (m < 1 || w < 0) throw ParameterError("rhythm multiples must be positive with non-negative weight");
    total += w;
  }
  if (!(total > 0)) throw ParameterError("rhythm weights sum to zero");
}

void SynthConfig::validate() const {
  if (songs < 1 || frames < 2) throw ParameterError("synth needs at least one song of two frames");
  if (!(noise >= 0 && noise <= 1)) throw ParameterError("noise must lie in [0, 1]");
  if (!(noise_scale > 0)) throw ParameterError("noise scale must be positive");
  if (!(noise_correlation >= 0 && noise_correlation < 1)) throw ParameterError("noise correlation must lie in [0, 1)");
  if (!(frame_rate > 0)) throw ParameterError("frame rate must be positive");
  if (!(valid_fraction >= 0 && test_fraction >= 0 && valid_fraction + test_fraction < 1)) {
    throw ParameterError("split fractions must be non-negative and leave training songs");
  }
  rhythm.validate();
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json mult = nlohmann::json::array();
  for (const auto& [m, w] : rhythm.multiples) mult.push_back({m, w});
  return {{"songs", songs},
          {"frames", frames},
          {"frame_rate", frame_rate},
          {"noise", noise},
          {"noise_scale", noise_scale},
          {"noise_correlation", noise_correlation},
          {"valid_fraction", valid_fraction},
          {"test_fraction", test_fraction},
          {"seed", seed},
          {"source",
           {{"concentration", source.concentration},
            {"loop_min", source.loop_min},
            {"loop_max", source.loop_max},
            {"deviation", source.deviation}}},
          {"rhythm", {{"periods", rhythm.periods}, {"multiples", mult}}}};
}

PosteriorMatrix noisy_posteriors(std::span<const ChordClass> labels, double noise, double scale, double correlation,
                                 double frame_rate, std::mt19937_64& rng) {
  PosteriorMatrix p;
  p.frame_rate = frame_rate;
  const auto T = static_cast<Eigen::Index>(labels.size());
  p.probs = ProbMatrix::Zero(T, kNumClasses);
  if (noise <= 0) {
    for (Eigen::Index t = 0; t < T; ++t) p.probs(t, labels[static_cast<std::size_t>(t)].index()) = 1.0;
    return p;
  }
  if (noise >= 1) {
    p.probs.setConstant(1.0 / kNumClasses);
    return p;
  }
  std::normal_distribution<double> g(0.0, 1.0);
  const double a = scale * (1 - noise) / noise;
  const double innov = std::sqrt(1 - correlation * correlation);
  Eigen::Array<double, kNumClasses, 1> state;
  for (int k = 0; k < kNumClasses; ++k) state(k) = g(rng);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0)
      for (int k = 0; k < kNumClasses; ++k) state(k) = correlation * state(k) + innov * g(rng);
    Eigen::Array<double, kNumClasses, 1> z = state;
    z(labels[static_cast<std::size_t>(t)].index()) += a;
    z *= 1 - noise;
    z = (z - z.maxCoeff()).exp();
    p.probs.row(t) = (z / z.sum()).matrix().transpose();
  }
  return p;
}

std::vector<SynthSong> synth_songs(const SynthConfig& config, const LanguageModel* lm,
                                   const ParametricDuration* duration) {
  config.validate();
  const LoopedChordSource source(config.source, config.seed ^ kGolden);
  std::vector<SynthSong> songs(static_cast<std::size_t>(config.songs));
  for (int s = 0; s < config.songs; ++s) {
    // Per-song stream so songs do not depend on each other's draws.
    std::mt19937_64 rng(config.seed + kGolden * static_cast<std::uint64_t>(s + 1));
    SynthSong& song = songs[static_cast<std::size_t>(s)];
    std::ostringstream id;
    id << "song" << std::setw(4) << std::setfill('0') << s;
    song.id = id.str();

    std::unique_ptr<ChordStream> chords;
    if (lm) {
      chords = std::make_unique<LmStream>(*lm);
    } else {
      chords = std::make_unique<LoopStream>(source, rng);
    }
    const int period =
        config.rhythm.periods[std::uniform_int_distribution<std::size_t>(0, config.rhythm.periods.size() - 1)(rng)];
    while (static_cast<int>(song.labels.size()) < config.frames) {
      const ChordClass c = chords->next(rng);
      const int len = duration ? duration->sample(rng) : segment_length(config.rhythm, period, rng);
      for (int k = 0; k < len && static_cast<int>(song.labels.size()) < config.frames; ++k) song.labels.push_back(c);
    }
    song.posteriors = noisy_posteriors(song.labels, config.noise, config.noise_scale, config.noise_correlation,
                                       config.frame_rate, rng);
  }
  return songs;
}

SynthSplit synth_split(const std::vector<SynthSong>& songs, const SynthConfig& config) {
  std::vector<std::size_t> order(songs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed ^ (kGolden >> 1));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(songs.size());
  const auto n_test = static_cast<std::size_t>(std::lround(n * config.test_fraction));
  const auto n_valid = static_cast<std::size_t>(std::lround(n * config.valid_fraction));
  SynthSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string& id = songs[order[i]].id;
    if (i < n_test) {
      split.test.push_back(id);
    } else if (i < n_test + n_valid) {
      split.valid.push_back(id);
    } else {
      split.train.push_back(id);
    }
  }
  for (auto* v : {&split.train, &split.valid, &split.test}) std::sort(v->begin(), v->end());
  return split;
}

void write_synth_dataset(const std::filesystem::path& dir, const std::vector<SynthSong>& songs,
                         const SynthSplit& split, const nlohmann::json& metadata) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "songs");
  std::map<std::string, const SynthSong*> by_id;
  for (const SynthSong& s : songs) {
    by_id[s.id] = &s;
    write_lab(dir / "songs" / (s.id + ".lab"), SegmentTimeline::from_frames(s.labels, s.posteriors.frame_rate));
    write_posteriors(dir / "songs" / (s.id + ".posteriors.csv"), s.posteriors);
  }
  const std::pair<const char*, const std::vector<std::string>*> parts[] = {
      {"train", &split.train}, {"valid", &split.valid}, {"test", &split.test}};
  for (const auto& [name, ids] : parts) {
    std::ofstream list(dir / (std::string(name) + ".txt"));
    std::vector<ChordSequence> corpus;
    for (const std::string& id : *ids) {
      list << id << '\n';
      corpus.push_back(compress(by_id.at(id)->labels));
    }
    write_corpus(dir / (std::string(name) + ".chords"), corpus);
  }
  std::ofstream meta(dir / "metadata.json");
  meta << metadata.dump(2) << '\n';
  if (!meta) throw ValidationError("cannot write " + (dir / "metadata.json").string());
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open id list " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.push_back(line.substr(b, e - b + 1));
  }
  return ids;
}

}  // namespace chordrec
