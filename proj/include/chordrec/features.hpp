#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "chordrec/error.hpp"

namespace chordrec {

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

constexpr int kSampleRate = 44100;

struct AudioBuffer {
  std::vector<float> samples;  // mono
  int sample_rate = kSampleRate;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// PCM 16-bit or IEEE float 32-bit WAV, 1 or 2 channels (plain or extensible
// format). Channels are averaged; other rates are linearly resampled to
// 44100 Hz unless `resample` is false.
AudioBuffer load_audio(const std::filesystem::path& path, bool resample = true);
AudioBuffer read_wav(std::istream& in, bool resample = true);

enum class WavEncoding { kPcm16, kFloat32 };
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding = WavEncoding::kPcm16);
void write_wav(std::ostream& out, const AudioBuffer& audio, WavEncoding encoding = WavEncoding::kPcm16);

// Linear interpolation to `rate`; output length round(N * rate / input rate).
AudioBuffer resample_linear(const AudioBuffer& audio, int rate);

struct FeatureConfig {
  int frame_size = 8192;
  int hop_size = 4410;
  double min_frequency = 65.0;
  double max_frequency = 2100.0;
  int bands_per_octave = 24;
  // Output is log(log_floor + m).
  double log_floor = 1.0;
};

struct Spectrogram {
  Eigen::MatrixXd frames;  // T x B
  double frame_rate = 10.0;
  std::vector<double> band_frequencies;

  nlohmann::json metadata() const;
};

// Band centres min * 2^(k / bands_per_octave) up to max_frequency.
std::vector<double> band_centers(const FeatureConfig& config = {});

// B x (frame_size / 2 + 1) matrix of triangular filters, each with peak at
// its centre, feet at the neighbouring centres, and unit sum. A filter that
// falls between FFT bins uses the nearest bin.
Eigen::MatrixXd filterbank(const FeatureConfig& config = {}, int sample_rate = kSampleRate);

// |STFT| with a Hann window; frame t starts at sample t * hop and the last
// frames are zero-padded, so T = ceil(N / hop).
Eigen::MatrixXd magnitude_stft(const AudioBuffer& audio, const FeatureConfig& config = {});

Spectrogram log_filterbank_spectrogram(const AudioBuffer& audio, const FeatureConfig& config = {});

void write_spectrogram_csv(std::ostream& out, const Spectrogram& s);
Spectrogram read_spectrogram_csv(std::istream& in, double frame_rate = 10.0);
Spectrogram read_spectrogram_csv(const std::filesystem::path& path);

}  // namespace chordrec
