#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chordrec/duration.hpp"
#include "chordrec/eval.hpp"
#include "chordrec/features.hpp"
#include "chordrec/language_model.hpp"
#include "chordrec/timeline.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace chordrec;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(CHORDREC_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("chordrec_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("decode --lm a.json").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("noiseless synthetic pipeline scores 1.0 and is deterministic") {
  TempDir t;
  REQUIRE(run("--seed 5 synth --songs 8 --frames 250 --noise 0 --out " + (t / "d")).code == 0);
  REQUIRE(run("--seed 5 synth --songs 8 --frames 250 --noise 0 --out " + (t / "d2")).code == 0);
  CHECK(slurp(t / "d/songs/song0003.posteriors.csv") == slurp(t / "d2/songs/song0003.posteriors.csv"));
  CHECK(slurp(t / "d/songs/song0003.lab") == slurp(t / "d2/songs/song0003.lab"));
  CHECK(slurp(t / "d/test.txt") == slurp(t / "d2/test.txt"));

  REQUIRE(run("lm train-ngram --order 2 --corpus " + (t / "d/train.chords") + " --out " + (t / "ng.json")).code == 0);
  REQUIRE(run("duration fit --family negative_binomial --lab-dir " + (t / "d/songs") + " --ids " + (t / "d/train.txt") +
              " --out " + (t / "nb.json"))
              .code == 0);
  CHECK(fs::exists(t / "ng.json.meta.json"));
  const auto meta = nlohmann::json::parse(slurp(t / "nb.json.meta.json"));
  CHECK(meta["command"] == "duration fit");
  CHECK(meta["seed"] == 0);
  CHECK(meta["inputs"].size() >= 2);

  const std::string dec = "decode --posteriors-dir " + (t / "d/songs") + " --lm " + (t / "ng.json") + " --duration " +
                          (t / "nb.json") + " --beam-width 25 --hash-count 4 --hash-length 5 --threads 3 --out-dir ";
  REQUIRE(run(dec + (t / "est")).code == 0);
  REQUIRE(run(dec + (t / "est2")).code == 0);
  CHECK(slurp(t / "est/song0002.lab") == slurp(t / "est2/song0002.lab"));

  const auto r = run("evaluate --ref-dir " + (t / "d/songs") + " --est-dir " + (t / "est") + " --csv " + (t / "r.csv"));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["majmin"] == 1.0);
  CHECK(j["root"] == 1.0);
  CHECK(j["segmentation"] == 1.0);
  CHECK(j["songs"] == 8);

  const auto one = run("evaluate --ref " + (t / "d/songs/song0001.lab") + " --est " + (t / "est/song0001.lab"));
  CHECK(nlohmann::json::parse(one.out)["majmin"] == 1.0);

  // Exact decoding agrees on noiseless input.
  REQUIRE(run("decode --exact --posteriors " + (t / "d/songs/song0001.posteriors.csv") + " --lm " + (t / "ng.json") +
              " --duration " + (t / "nb.json") + " --out " + (t / "x.lab"))
              .code == 0);
  CHECK(wcsr(read_lab(fs::path(t / "d/songs/song0001.lab")), read_lab(fs::path(t / "x.lab"))).ratio() == 1.0);

  // lm eval wiring matches the library.
  const auto ev = run("lm eval --model " + (t / "ng.json") + " --corpus " + (t / "d/test.chords"));
  REQUIRE(ev.code == 0);
  const auto model = load_language_model(t / "ng.json");
  const double expect = avg_log_prob(*model, read_corpus(t / "d/test.chords"));
  CHECK(nlohmann::json::parse(ev.out)["avg_log_prob"].get<double>() == doctest::Approx(expect).epsilon(1e-14));

  const auto dev = run("duration eval --model " + (t / "nb.json") + " --lab-dir " + (t / "d/songs") + " --ids " +
                       (t / "d/test.txt"));
  REQUIRE(dev.code == 0);
  CHECK(std::isfinite(nlohmann::json::parse(dev.out)["avg_log_prob"].get<double>()));

  REQUIRE(run("duration trace --model " + (t / "nb.json") + " --lab " + (t / "d/songs/song0001.lab") + " --out " +
              (t / "trace.csv"))
              .code == 0);
  std::ifstream trace(t / "trace.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header == "frame,change,hazard");
  int rows = 0;
  for (std::string l; std::getline(trace, l);) ++rows;
  CHECK(rows == 249);

  // Relative paths resolve against the data directory variable.
  ::setenv("CHORDREC_DATA", t.path.c_str(), 1);
  CHECK(run("lm eval --model ng.json --corpus d/test.chords").code == 0);
  ::unsetenv("CHORDREC_DATA");
  CHECK(run("lm eval --model ng.json --corpus d/test.chords").code == 2);
}

TEST_CASE("validation and runtime errors") {
  TempDir t;
  {
    std::ofstream bad(t / "bad.csv");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 24; ++c) bad << (c ? "," : "") << 1.0 / 24;
      bad << '\n';
    }
  }
  {
    std::ofstream c(t / "c.txt");
    c << "C G A:min F\nC F G C\n";
  }
  REQUIRE(run("lm train-ngram --corpus " + (t / "c.txt") + " --out " + (t / "ng.json")).code == 0);
  {
    std::ofstream g(t / "geo.json");
    g << R"({"family": "geometric", "p": 0.2})";
  }
  const std::string models = " --lm " + (t / "ng.json") + " --duration " + (t / "geo.json");
  CHECK(run("decode --posteriors " + (t / "bad.csv") + models + " --out " + (t / "o.lab")).code == 2);
  CHECK(run("decode --posteriors " + (t / "missing.csv") + models + " --out " + (t / "o.lab")).code == 2);
  CHECK(run("acoustic import --in " + (t / "bad.csv") + " --out " + (t / "p.csv")).code == 2);
  CHECK(run("decode --posteriors " + (t / "bad.csv") + models + " --out " + (t / "o.lab") + " --hash-length 14").code == 1);
  CHECK(run("duration fit --family weibull --lab-dir " + t.path.string() + " --out " + (t / "x.json")).code == 1);

  // A GRU LM cannot be decoded exactly.
  REQUIRE(run("lm train-rnn --hidden 4 --embedding 2 --epochs 1 --corpus " + (t / "c.txt") + " --out " + (t / "g.json")).code == 0);
  {
    std::ofstream p(t / "p.csv");
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 25; ++c) p << (c ? "," : "") << 1.0 / 25;
      p << '\n';
    }
  }
  CHECK(run("decode --exact --posteriors " + (t / "p.csv") + " --lm " + (t / "g.json") + " --duration " + (t / "geo.json") +
            " --out " + (t / "o.lab"))
            .code == 1);
  CHECK(run("decode --posteriors " + (t / "p.csv") + " --lm " + (t / "g.json") + " --duration " + (t / "geo.json") +
            " --out " + (t / "o.lab"))
            .code == 0);
  REQUIRE(run("lm pca --model " + (t / "g.json") + " --out " + (t / "pca.csv")).code == 0);
  CHECK(run("lm pca --model " + (t / "ng.json") + " --out " + (t / "pca2.csv")).code == 1);

  // Unwritable output is a runtime failure.
  CHECK(run("lm train-ngram --corpus " + (t / "c.txt") + " --out " + (t / "c.txt/sub/ng.json")).code == 3);
}

TEST_CASE("features and acoustic stand-in") {
  TempDir t;
  fs::create_directories(t.path / "spec");
  fs::create_directories(t.path / "lab");
  // Two 2-second songs: C-ish tone then G-ish tone.
  for (int song = 0; song < 2; ++song) {
    AudioBuffer a;
    a.samples.resize(88200);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      const double f = i < 44100 ? 261.63 : 392.0;
      a.samples[i] = static_cast<float>(0.4 * std::sin(2 * M_PI * f * static_cast<double>(i) / 44100));
    }
    const std::string id = "s" + std::to_string(song);
    write_wav(t.path / (id + ".wav"), a);
    REQUIRE(run("features extract --audio " + (t / (id + ".wav")) + " --out " + (t / ("spec/" + id + ".csv"))).code == 0);
    std::ofstream lab(t.path / "lab" / (id + ".lab"));
    lab << "0 1 C\n1 2 G\n";
  }
  const auto meta = nlohmann::json::parse(slurp(t / "spec/s0.csv.meta.json"));
  CHECK(meta["frames"] == 20);
  CHECK(meta["band_frequencies"].size() == 121);
  CHECK(meta["frame_rate"] == 10.0);

  REQUIRE(run("acoustic train --context 3 --epochs 50 --learning-rate 0.05 --spec-dir " + (t / "spec") + " --lab-dir " +
              (t / "lab") + " --out " + (t / "am.json"))
              .code == 0);
  CHECK(nlohmann::json::parse(slurp(t / "am.json.meta.json"))["train_accuracy"].get<double>() > 0.9);
  REQUIRE(run("acoustic predict --model " + (t / "am.json") + " --spec " + (t / "spec/s1.csv") + " --out " + (t / "p.csv")).code == 0);
  REQUIRE(run("acoustic import --in " + (t / "p.csv") + " --out " + (t / "p2.csv")).code == 0);
  CHECK(run("features extract --audio " + (t / "lab/s0.lab") + " --out " + (t / "x.csv")).code == 2);
}
