#include "chordrec/features.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <unsupported/Eigen/FFT>

namespace chordrec {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

void put32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

std::vector<unsigned char> read_exact(std::istream& in, std::size_t n, const char* what) {
  std::vector<unsigned char> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(std::string("truncated WAV file (") + what + ")");
  return buf;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioBuffer read_wav(std::istream& in, bool resample) {
  const auto riff = read_exact(in, 12, "header");
  if (std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  for (;;) {
    unsigned char head[8];
    in.read(reinterpret_cast<char*>(head), 8);
    if (in.gcount() != 8) throw FormatError("WAV file has no data chunk");
    const std::uint32_t size = le32(head + 4);
    if (std::memcmp(head, "fmt ", 4) == 0) {
      const auto fmt = read_exact(in, size + (size & 1), "fmt chunk");
      if (size < 16) throw FormatError("WAV fmt chunk too short");
      format = le16(fmt.data());
      channels = le16(fmt.data() + 2);
      rate = le32(fmt.data() + 4);
      bits = le16(fmt.data() + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw FormatError("WAV extensible fmt chunk too short");
        format = le16(fmt.data() + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(head, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("WAV data chunk before fmt chunk");
      if (channels < 1 || channels > 2) {
        throw FormatError("unsupported channel count " + std::to_string(channels) + " (1 or 2 supported)");
      }
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool float32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !float32) {
        throw FormatError("unsupported WAV encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                          " bits); need 16-bit PCM or 32-bit float");
      }
      if (rate == 0) throw FormatError("WAV sample rate is zero");
      const std::size_t bytes_per_sample = bits / 8;
      const std::size_t frames = size / (bytes_per_sample * channels);
      const auto data = read_exact(in, frames * bytes_per_sample * channels, "data chunk");
      AudioBuffer audio;
      audio.sample_rate = static_cast<int>(rate);
      audio.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double sum = 0;
        for (std::size_t c = 0; c < channels; ++c) {
          const unsigned char* p = data.data() + (i * channels + c) * bytes_per_sample;
          if (pcm16) {
            sum += static_cast<std::int16_t>(le16(p)) / 32768.0;
          } else {
            const std::uint32_t raw = le32(p);
            float f;
            std::memcpy(&f, &raw, 4);
            sum += f;
          }
        }
        audio.samples[i] = static_cast<float>(sum / channels);
      }
      if (resample && audio.sample_rate != kSampleRate) return resample_linear(audio, kSampleRate);
      return audio;
    } else {
      in.ignore(static_cast<std::streamsize>(size + (size & 1)));
    }
  }
}

AudioBuffer load_audio(const std::filesystem::path& path, bool resample) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open audio file " + path.string());
  try {
    return read_wav(in, resample);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_wav(std::ostream& out, const AudioBuffer& audio, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * bits / 8);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, pcm ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate) * bits / 8);
  put16(out, bits / 8);
  put16(out, bits);
  out.write("data", 4);
  put32(out, data_bytes);
  for (float s : audio.samples) {
    if (pcm) {
      const double v = std::clamp(static_cast<double>(s), -1.0, 32767.0 / 32768.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v * 32768.0))));
    } else {
      std::uint32_t raw;
      std::memcpy(&raw, &s, 4);
      put32(out, raw);
    }
  }
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_wav(out, audio, encoding);
}

AudioBuffer resample_linear(const AudioBuffer& audio, int rate) {
  if (rate <= 0 || audio.sample_rate <= 0) throw ParameterError("sample rates must be positive");
  AudioBuffer out;
  out.sample_rate = rate;
  const std::size_t n = audio.samples.size();
  if (n == 0) return out;
  const double ratio = static_cast<double>(audio.sample_rate) / rate;
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) / ratio));
  out.samples.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= n) {
      out.samples[i] = audio.samples[n - 1];
    } else {
      const double frac = pos - static_cast<double>(k);
      out.samples[i] = static_cast<float>((1 - frac) * audio.samples[k] + frac * audio.samples[k + 1]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> band_centers(const FeatureConfig& config) {
  if (!(config.min_frequency > 0 && config.max_frequency > config.min_frequency && config.bands_per_octave > 0)) {
    throw ParameterError("invalid filterbank frequency range");
  }
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double f = config.min_frequency * std::exp2(static_cast<double>(k) / config.bands_per_octave);
    if (f > config.max_frequency * (1 + 1e-12)) break;
    out.push_back(f);
  }
  return out;
}

Eigen::MatrixXd filterbank(const FeatureConfig& config, int sample_rate) {
  const auto centers = band_centers(config);
  const int bins = config.frame_size / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / config.frame_size;
  const double step = std::exp2(1.0 / config.bands_per_octave);
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(centers.size()), bins);
  for (std::size_t b = 0; b < centers.size(); ++b) {
    const double c = centers[b];
    const double lo = b > 0 ? centers[b - 1] : c / step;
    const double hi = b + 1 < centers.size() ? centers[b + 1] : c * step;
    const auto row = static_cast<Eigen::Index>(b);
    for (int k = static_cast<int>(std::ceil(lo / bin_hz)); k <= static_cast<int>(std::floor(hi / bin_hz)) && k < bins; ++k) {
      const double f = k * bin_hz;
      const double w = f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
      if (w > 0) fb(row, k) = w;
    }
    const double area = fb.row(row).sum();
    if (area > 0) {
      fb.row(row) /= area;
    } else {
      fb(row, std::min(bins - 1, static_cast<int>(std::lround(c / bin_hz)))) = 1.0;
    }
  }
  return fb;
}

Eigen::MatrixXd magnitude_stft(const AudioBuffer& audio, const FeatureConfig& config) {
  const int N = config.frame_size;
  const auto n = static_cast<std::ptrdiff_t>(audio.samples.size());
  if (n < N) {
    throw ValidationError("audio has " + std::to_string(n) + " samples, shorter than one frame (" + std::to_string(N) +
                          ")");
  }
  const std::ptrdiff_t frames = (n + config.hop_size - 1) / config.hop_size;
  const int bins = N / 2 + 1;
  std::vector<double> window(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2 * M_PI * i / N);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<std::size_t>(N));
  std::vector<std::complex<double>> spec;
  Eigen::MatrixXd out(frames, bins);
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = t * config.hop_size;
    for (int i = 0; i < N; ++i) {
      const std::ptrdiff_t s = start + i;
      buf[static_cast<std::size_t>(i)] = s < n ? audio.samples[static_cast<std::size_t>(s)] * window[static_cast<std::size_t>(i)] : 0.0;
    }
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; ++k) out(t, k) = std::abs(spec[static_cast<std::size_t>(k)]);
  }
  return out;
}

Spectrogram log_filterbank_spectrogram(const AudioBuffer& audio, const FeatureConfig& config) {
  if (audio.sample_rate != kSampleRate) {
    throw ValidationError("spectrogram needs 44100 Hz audio, got " + std::to_string(audio.sample_rate));
  }
  if (!(config.log_floor > 0)) throw ParameterError("log floor must be positive");
  const Eigen::MatrixXd mag = magnitude_stft(audio, config);
  const Eigen::MatrixXd fb = filterbank(config, audio.sample_rate);
  Spectrogram s;
  s.frames = ((mag * fb.transpose()).array() + config.log_floor).log().matrix();
  s.frame_rate = static_cast<double>(audio.sample_rate) / config.hop_size;
  s.band_frequencies = band_centers(config);
  return s;
}

nlohmann::json Spectrogram::metadata() const {
  return {{"frames", frames.rows()},
          {"bands", frames.cols()},
          {"frame_rate", frame_rate},
          {"band_frequencies", band_frequencies}};
}

void write_spectrogram_csv(std::ostream& out, const Spectrogram& s) {
  out << std::setprecision(10);
  for (Eigen::Index t = 0; t < s.frames.rows(); ++t) {
    for (Eigen::Index b = 0; b < s.frames.cols(); ++b) out << (b ? "," : "") << s.frames(t, b);
    out << '\n';
  }
}

Spectrogram read_spectrogram_csv(std::istream& in, double frame_rate) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        throw ParseError("spectrogram line " + std::to_string(line_no) + ": bad value '" + field + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ShapeError("spectrogram line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                       " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("spectrogram file is empty");
  Spectrogram s;
  s.frame_rate = frame_rate;
  s.frames.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t b = 0; b < rows[t].size(); ++b) s.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) = rows[t][b];
  }
  return s;
}

Spectrogram read_spectrogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spectrogram " + path.string());
  Spectrogram s = read_spectrogram_csv(in);
  // Sidecar written next to the CSV carries the frame rate and bands.
  std::filesystem::path sidecar = path;
  sidecar += ".meta.json";
  if (std::ifstream meta(sidecar); meta) {
    try {
      const auto j = nlohmann::json::parse(meta);
      s.frame_rate = j.value("frame_rate", s.frame_rate);
      if (j.contains("band_frequencies")) s.band_frequencies = j["band_frequencies"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(sidecar.string() + ": " + e.what());
    }
  }
  return s;
}

}  // namespace chordrec
