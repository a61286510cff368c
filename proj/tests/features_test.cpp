#include <cmath>
#include <random>
#include <sstream>

#include "chordrec/features.hpp"
#include "doctest.h"

using namespace chordrec;

namespace {

AudioBuffer sine(double freq, double amplitude, std::size_t n, int rate = kSampleRate) {
  AudioBuffer a;
  a.sample_rate = rate;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = static_cast<float>(amplitude * std::sin(2 * M_PI * freq * static_cast<double>(i) / rate));
  return a;
}

}  // namespace

TEST_CASE("band count and centres") {
  const auto c = band_centers();
  // k runs while 65 * 2^(k/24) <= 2100: 24 * log2(2100/65) = 120.33.
  CHECK(c.size() == 121);
  CHECK(c.front() == doctest::Approx(65.0));
  CHECK(c.back() <= 2100.0);
  CHECK(65.0 * std::exp2(121.0 / 24) > 2100.0);
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] / c[k - 1] == doctest::Approx(std::exp2(1.0 / 24)));
}

TEST_CASE("filterbank geometry") {
  const FeatureConfig cfg;
  const auto fb = filterbank(cfg);
  const auto c = band_centers(cfg);
  const double bin_hz = 44100.0 / 8192;
  CHECK(fb.rows() == 121);
  CHECK(fb.cols() == 4097);
  CHECK((fb.array() >= 0).all());
  for (Eigen::Index b = 0; b < fb.rows(); ++b) {
    CHECK(fb.row(b).sum() == doctest::Approx(1.0));
    const double lo = b > 0 ? c[static_cast<std::size_t>(b - 1)] : c[0] / std::exp2(1.0 / 24);
    const double hi = b + 1 < fb.rows() ? c[static_cast<std::size_t>(b + 1)] : c.back() * std::exp2(1.0 / 24);
    int nonzero = 0;
    for (Eigen::Index k = 0; k < fb.cols(); ++k) {
      if (fb(b, k) == 0) continue;
      ++nonzero;
      const double f = static_cast<double>(k) * bin_hz;
      // Support lies within the feet, or is the single bin nearest the centre.
      const bool inside = f > lo - 1e-9 && f < hi + 1e-9;
      const bool nearest = std::abs(f - c[static_cast<std::size_t>(b)]) <= bin_hz / 2 + 1e-9;
      CHECK((inside || nearest));
    }
    CHECK(nonzero >= 1);
  }
  // A high band spans several bins: weights follow the triangle shape.
  const Eigen::Index b = 120;
  const double cb = c[120], lo = c[119], hi = cb * std::exp2(1.0 / 24);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(fb.cols());
  for (Eigen::Index k = 0; k < fb.cols(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f > lo && f < hi) expect(k) = f <= cb ? (f - lo) / (cb - lo) : (hi - f) / (hi - cb);
  }
  expect /= expect.sum();
  CHECK((fb.row(b).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("frame count and short input") {
  const auto s = log_filterbank_spectrogram(sine(440, 0.5, 44100));
  CHECK(s.frames.rows() == 10);
  CHECK(s.frames.cols() == 121);
  CHECK(s.frame_rate == doctest::Approx(10.0));
  CHECK((s.frames.array() >= 0).all());
  CHECK(log_filterbank_spectrogram(sine(440, 0.5, 44101)).frames.rows() == 11);
  CHECK_THROWS_AS(log_filterbank_spectrogram(sine(440, 0.5, 8000)), ValidationError);
}

TEST_CASE("sine peaks at its quarter-tone band") {
  for (double freq : {110.0, 261.63, 440.0, 1000.0}) {
    const auto s = log_filterbank_spectrogram(sine(freq, 0.5, 44100));
    Eigen::Index arg;
    s.frames.row(3).maxCoeff(&arg);
    const double centre = s.band_frequencies[static_cast<std::size_t>(arg)];
    // Below ~185 Hz quarter tones are narrower than an FFT bin (5.4 Hz).
    if (freq * (std::exp2(1.0 / 24) - 1) > 44100.0 / 8192) {
      CHECK(std::abs(24 * std::log2(centre / freq)) <= 1.0);
    } else {
      CHECK(std::abs(centre - freq) <= 44100.0 / 8192);
    }
  }
}

TEST_CASE("amplitude monotonicity") {
  const auto quiet = log_filterbank_spectrogram(sine(440, 0.1, 44100));
  const auto loud = log_filterbank_spectrogram(sine(440, 0.5, 44100));
  CHECK((loud.frames.array() >= quiet.frames.array() - 1e-12).all());
  CHECK(loud.frames.sum() > quiet.frames.sum());
}

TEST_CASE("one-hop shift shifts frames") {
  std::mt19937 rng(4);
  std::normal_distribution<float> g(0, 0.2f);
  AudioBuffer a;
  a.samples.resize(60000);
  for (auto& x : a.samples) x = g(rng);
  AudioBuffer shifted;
  shifted.samples.assign(4410, 0.0f);
  shifted.samples.insert(shifted.samples.end(), a.samples.begin(), a.samples.end());
  const auto s1 = log_filterbank_spectrogram(a);
  const auto s2 = log_filterbank_spectrogram(shifted);
  CHECK(s2.frames.rows() == s1.frames.rows() + 1);
  CHECK((s2.frames.bottomRows(s1.frames.rows()) - s1.frames).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("WAV round trip, downmix and resampling") {
  const auto a = sine(440, 0.5, 1000);
  for (auto enc : {WavEncoding::kPcm16, WavEncoding::kFloat32}) {
    std::stringstream ss;
    write_wav(ss, a, enc);
    const auto b = read_wav(ss);
    REQUIRE(b.samples.size() == a.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(std::abs(b.samples[i] - a.samples[i]) < 1e-4);
  }

  // Hand-built stereo PCM16 file: frames (16384, -16384) and (8192, 8192).
  std::string wav;
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) wav.push_back(static_cast<char>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { for (int i = 0; i < 2; ++i) wav.push_back(static_cast<char>(v >> (8 * i))); };
  wav += "RIFF";
  u32(36 + 8 + 12);
  wav += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(2);
  u32(44100);
  u32(44100 * 4);
  u16(4);
  u16(16);
  wav += "LIST";  // unknown chunk is skipped
  u32(4);
  wav += "abcd";
  wav += "data";
  u32(8);
  u16(16384);
  u16(static_cast<std::uint16_t>(-16384));
  u16(8192);
  u16(8192);
  std::stringstream st(wav);
  const auto m = read_wav(st);
  REQUIRE(m.samples.size() == 2);
  CHECK(m.samples[0] == doctest::Approx(0.0));
  CHECK(m.samples[1] == doctest::Approx(0.25));

  AudioBuffer half = sine(100, 0.5, 22050, 22050);
  std::stringstream sh;
  write_wav(sh, half);
  const auto up = read_wav(sh);
  CHECK(up.sample_rate == kSampleRate);
  CHECK(std::abs(static_cast<long>(up.samples.size()) - 44100) <= 1);
  const auto raw = [&] { std::stringstream s2; write_wav(s2, half); return read_wav(s2, false); }();
  CHECK(raw.sample_rate == 22050);

  std::stringstream junk("not a wav file at all");
  CHECK_THROWS_AS(read_wav(junk), FormatError);
  std::string bad = wav;
  bad[20] = 2;  // ADPCM-style compressed format tag
  std::stringstream sb(bad);
  CHECK_THROWS_AS(read_wav(sb), FormatError);
  CHECK_THROWS_AS(load_audio("/nonexistent.wav"), FormatError);
}

TEST_CASE("spectrogram CSV round trip") {
  const auto s = log_filterbank_spectrogram(sine(440, 0.5, 20000));
  std::stringstream ss;
  write_spectrogram_csv(ss, s);
  const auto r = read_spectrogram_csv(ss);
  CHECK(r.frames.rows() == s.frames.rows());
  CHECK((r.frames - s.frames).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(s.metadata()["band_frequencies"].size() == 121);
  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_spectrogram_csv(ragged), ShapeError);
}
