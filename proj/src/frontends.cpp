#include "chroma_rsa/frontends.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Lowest CQT window may overhang the zero-padded signal, but by no more than
// this factor of the signal length.
constexpr double kMaxCqtWindowToSignal = 4.0;

std::size_t hop_samples(const FrontendParams& p, int sr) {
  return static_cast<std::size_t>(std::max<long>(1, std::lround(p.hop_s * sr)));
}

std::size_t window_samples(const FrontendParams& p, int sr) {
  return static_cast<std::size_t>(std::max<long>(1, std::lround(p.window_s * sr)));
}

// Frames centered at multiples of the hop, first centered on sample 0.
std::size_t centered_frame_count(std::size_t length, std::size_t hop) {
  return 1 + length / hop;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// FFTW planning is not thread-safe; execution with new-array functions is.
struct RealFft {
  int n = 0;
  fftw_plan plan = nullptr;
  RealFft() = default;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    if (plan) fftw_destroy_plan(plan);
  }
};

const RealFft& real_fft(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<RealFft>> plans;
  std::lock_guard lock(mutex);
  auto& slot = plans[n];
  if (!slot) {
    std::vector<double> in(static_cast<std::size_t>(n));
    std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
    slot = std::make_unique<RealFft>();
    slot->n = n;
    slot->plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  return *slot;
}

void check_kind(const FrontendParams& p, FrontendKind expected) {
  require(p.kind == expected, "front-end called with parameters for " +
                                  std::string(to_string(p.kind)));
}

}  // namespace

std::string_view to_string(FrontendKind kind) noexcept {
  switch (kind) {
    case FrontendKind::mel: return "mel";
    case FrontendKind::cqt: return "cqt";
    case FrontendKind::cochleagram: return "cochleagram";
  }
  return "unknown";
}

FrontendKind frontend_kind_from_string(std::string_view name) {
  if (name == "mel") return FrontendKind::mel;
  if (name == "cqt") return FrontendKind::cqt;
  if (name == "cochleagram") return FrontendKind::cochleagram;
  fail(ErrorCode::invalid_argument, "unknown front-end '" + std::string(name) + "'");
}

FrontendParams FrontendParams::mel_default(int sample_rate_hz) {
  FrontendParams p;
  p.kind = FrontendKind::mel;
  p.n_channels = 128;
  p.fmin_hz = 0.0;
  p.fmax_hz = sample_rate_hz / 2.0;
  return p;
}

FrontendParams FrontendParams::cqt_default(int sample_rate_hz) {
  FrontendParams p;
  p.kind = FrontendKind::cqt;
  p.bins_per_octave = 48;
  p.n_channels = 48 * 7;
  p.fmin_hz = midi_to_freq(24);  // C1
  p.fmax_hz = std::min(sample_rate_hz / 2.0, p.fmin_hz * std::exp2(7.0));
  return p;
}

FrontendParams FrontendParams::cochleagram_default(int sample_rate_hz) {
  FrontendParams p;
  p.kind = FrontendKind::cochleagram;
  p.n_channels = 128;
  p.fmin_hz = 50.0;
  p.fmax_hz = sample_rate_hz / 2.0;
  return p;
}

void FrontendParams::validate(int sample_rate_hz) const {
  require(n_channels >= 2, "front-end needs at least 2 channels");
  require(fmin_hz >= 0.0 && fmin_hz < fmax_hz, "front-end needs fmin < fmax");
  require(fmax_hz <= sample_rate_hz / 2.0, "front-end fmax above Nyquist");
  require(window_s > 0.0 && hop_s > 0.0, "window and hop must be positive");
  if (kind == FrontendKind::cqt) {
    require(fmin_hz > 0.0, "CQT fmin must be positive");
    require(bins_per_octave >= 1, "CQT needs bins_per_octave >= 1");
    require(n_channels % bins_per_octave == 0,
            "CQT bin count must be a whole number of octaves");
    const double top = fmin_hz * std::exp2(static_cast<double>(n_channels - 1) / bins_per_octave);
    require(top <= fmax_hz, "CQT top bin above fmax (fmax above Nyquist?)");
  }
}

nlohmann::json FrontendParams::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind)},
                      {"n_channels", n_channels},
                      {"fmin_hz", fmin_hz},
                      {"fmax_hz", fmax_hz},
                      {"window_s", window_s},
                      {"hop_s", hop_s}};
  if (kind == FrontendKind::cqt) j["bins_per_octave"] = bins_per_octave;
  return j;
}

FrontendParams FrontendParams::from_json(const nlohmann::json& j, int sample_rate_hz) {
  const FrontendKind kind = frontend_kind_from_string(j.at("kind").get<std::string>());
  FrontendParams p = kind == FrontendKind::mel   ? mel_default(sample_rate_hz)
                     : kind == FrontendKind::cqt ? cqt_default(sample_rate_hz)
                                                 : cochleagram_default(sample_rate_hz);
  if (j.contains("n_channels")) p.n_channels = j["n_channels"].get<int>();
  if (j.contains("fmin_hz")) p.fmin_hz = j["fmin_hz"].get<double>();
  if (j.contains("fmax_hz")) p.fmax_hz = j["fmax_hz"].get<double>();
  if (j.contains("bins_per_octave")) p.bins_per_octave = j["bins_per_octave"].get<int>();
  if (j.contains("window_s")) p.window_s = j["window_s"].get<double>();
  if (j.contains("hop_s")) p.hop_s = j["hop_s"].get<double>();
  return p;
}

void TimeFreqMatrix::validate() const {
  require(values.size() == channels * frames, "matrix size does not match its shape");
  require(channel_freqs_hz.size() == channels, "one center frequency per channel required");
  for (std::size_t c = 1; c < channels; ++c)
    require(channel_freqs_hz[c] > channel_freqs_hz[c - 1], "channel frequencies must increase");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::non_finite, "time-frequency matrix has non-finite values");
    require(v >= 0.0, "time-frequency values must be nonnegative");
  }
}

TimeFreqMatrix mel_spectrogram(const AudioBuffer& audio, const FrontendParams& params) {
  check_kind(params, FrontendKind::mel);
  const int sr = audio.sample_rate_hz;
  params.validate(sr);
  const std::size_t win = window_samples(params, sr);
  const std::size_t hop = hop_samples(params, sr);
  require(audio.samples.size() >= win, "audio shorter than one analysis window");

  int n_fft = 1;
  while (static_cast<std::size_t>(n_fft) < win) n_fft *= 2;
  const std::size_t n_bins = static_cast<std::size_t>(n_fft / 2 + 1);

  std::vector<double> window(win);
  for (std::size_t m = 0; m < win; ++m)
    window[m] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(m) / static_cast<double>(win));

  // Area-normalized triangular filters on the HTK mel scale.
  const std::size_t bands = static_cast<std::size_t>(params.n_channels);
  const double mel_lo = hz_to_mel(params.fmin_hz);
  const double mel_hi = hz_to_mel(params.fmax_hz);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  std::vector<double> weights(bands * n_bins, 0.0);
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    const double norm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sr / n_fft;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      weights[b * n_bins + k] = w * norm;
    }
  }

  const std::size_t length = audio.samples.size();
  const std::size_t frames = centered_frame_count(length, hop);
  TimeFreqMatrix out;
  out.channels = bands;
  out.frames = frames;
  out.values.assign(bands * frames, 0.0);
  out.channel_freqs_hz.assign(edges.begin() + 1, edges.end() - 1);
  out.frame_rate_hz = static_cast<double>(sr) / static_cast<double>(hop);

  const RealFft& fft = real_fft(n_fft);
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<fftw_complex> spec(n_bins);
  std::vector<double> mag(n_bins);
  const auto half = static_cast<long>(win / 2);
  for (std::size_t j = 0; j < frames; ++j) {
    std::fill(frame.begin(), frame.end(), 0.0);
    const long start = static_cast<long>(j * hop) - half;
    for (std::size_t m = 0; m < win; ++m) {
      const long i = start + static_cast<long>(m);
      if (i >= 0 && i < static_cast<long>(length))
        frame[m] = audio.samples[static_cast<std::size_t>(i)] * window[m];
    }
    fftw_execute_dft_r2c(fft.plan, frame.data(), spec.data());
    for (std::size_t k = 0; k < n_bins; ++k) mag[k] = std::hypot(spec[k][0], spec[k][1]);
    for (std::size_t b = 0; b < bands; ++b) {
      double acc = 0.0;
      const double* w = &weights[b * n_bins];
      for (std::size_t k = 0; k < n_bins; ++k) acc += w[k] * mag[k];
      out.at(b, j) = acc;
    }
  }
  return out;
}

std::size_t cqt_window_length(const FrontendParams& params, int sample_rate_hz, int bin) {
  const double q = 1.0 / (std::exp2(1.0 / params.bins_per_octave) - 1.0);
  const double fk = params.fmin_hz * std::exp2(static_cast<double>(bin) / params.bins_per_octave);
  return static_cast<std::size_t>(std::ceil(q * sample_rate_hz / fk));
}

TimeFreqMatrix cqt(const AudioBuffer& audio, const FrontendParams& params) {
  check_kind(params, FrontendKind::cqt);
  const int sr = audio.sample_rate_hz;
  params.validate(sr);
  const std::size_t length = audio.samples.size();
  const std::size_t n0 = cqt_window_length(params, sr, 0);
  require(static_cast<double>(n0) <= kMaxCqtWindowToSignal * static_cast<double>(length),
          "CQT fmin too low for buffer length (lowest window " + std::to_string(n0) +
              " samples)");

  const double q = 1.0 / (std::exp2(1.0 / params.bins_per_octave) - 1.0);
  const std::size_t hop = hop_samples(params, sr);
  const std::size_t frames = centered_frame_count(length, hop);
  const auto bins = static_cast<std::size_t>(params.n_channels);

  TimeFreqMatrix out;
  out.channels = bins;
  out.frames = frames;
  out.values.assign(bins * frames, 0.0);
  out.channel_freqs_hz.resize(bins);
  out.frame_rate_hz = static_cast<double>(sr) / static_cast<double>(hop);

  // Hann(m) e^{-i2pi nu m} splits into three complex exponentials at
  // nu and nu +- 1/N, so each windowed frame is a combination of three
  // prefix-sum differences.
  std::vector<std::complex<double>> prefix_mid(length + 1), prefix_lo(length + 1),
      prefix_hi(length + 1);
  const double* x = audio.samples.data();
  constexpr std::size_t kResync = 256;
  for (std::size_t k = 0; k < bins; ++k) {
    const int bin = static_cast<int>(k);
    out.channel_freqs_hz[k] = params.fmin_hz * std::exp2(static_cast<double>(bin) / params.bins_per_octave);
    const std::size_t n = cqt_window_length(params, sr, bin);
    const double nd = static_cast<double>(n);
    const double nu = q / nd;
    const double nus[3] = {nu, nu - 1.0 / nd, nu + 1.0 / nd};
    std::complex<double>* prefixes[3] = {prefix_mid.data(), prefix_lo.data(), prefix_hi.data()};
    for (int s = 0; s < 3; ++s) {
      const std::complex<double> step = std::polar(1.0, -kTwoPi * nus[s]);
      std::complex<double> rot;
      std::complex<double> acc = 0.0;
      std::complex<double>* p = prefixes[s];
      p[0] = 0.0;
      for (std::size_t i = 0; i < length; ++i) {
        if (i % kResync == 0)
          rot = std::polar(1.0, -kTwoPi * std::fmod(nus[s] * static_cast<double>(i), 1.0));
        acc += x[i] * rot;
        p[i + 1] = acc;
        rot *= step;
      }
    }
    const long half = static_cast<long>(n / 2);
    for (std::size_t j = 0; j < frames; ++j) {
      const long t = static_cast<long>(j * hop) - half;
      const auto a = static_cast<std::size_t>(std::max<long>(t, 0));
      const auto b = static_cast<std::size_t>(
          std::min<long>(t + static_cast<long>(n), static_cast<long>(length)));
      if (b <= a) continue;
      const std::complex<double> s_mid = prefix_mid[b] - prefix_mid[a];
      const std::complex<double> s_lo = prefix_lo[b] - prefix_lo[a];
      const std::complex<double> s_hi = prefix_hi[b] - prefix_hi[a];
      const double shift = kTwoPi * std::fmod(static_cast<double>(t) / nd, 1.0);
      const std::complex<double> turn = std::polar(1.0, shift);
      const std::complex<double> sum = 0.5 * s_mid - 0.25 * std::conj(turn) * s_lo - 0.25 * turn * s_hi;
      out.at(k, j) = std::abs(sum) / nd;
    }
  }
  return out;
}

double erb_number(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

double erb_number_to_hz(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437;
}

double erb_bandwidth(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }

std::vector<double> erb_center_frequencies(int n, double fmin_hz, double fmax_hz) {
  require(n >= 2, "need at least 2 ERB-spaced frequencies");
  require(fmin_hz >= 0.0 && fmin_hz < fmax_hz, "ERB spacing needs fmin < fmax");
  const double lo = erb_number(fmin_hz);
  const double hi = erb_number(fmax_hz);
  std::vector<double> f(static_cast<std::size_t>(n));
  f.front() = fmin_hz;
  f.back() = fmax_hz;
  for (int i = 1; i < n - 1; ++i)
    f[static_cast<std::size_t>(i)] = erb_number_to_hz(lo + (hi - lo) * i / (n - 1));
  return f;
}

TimeFreqMatrix cochleagram(const AudioBuffer& audio, const FrontendParams& params) {
  check_kind(params, FrontendKind::cochleagram);
  const int sr = audio.sample_rate_hz;
  params.validate(sr);
  const std::size_t length = audio.samples.size();
  require(length >= window_samples(params, sr), "audio shorter than one analysis window");
  const std::size_t hop = hop_samples(params, sr);
  const std::size_t frames = length / hop;

  TimeFreqMatrix out;
  out.channels = static_cast<std::size_t>(params.n_channels);
  out.frames = frames;
  out.values.assign(out.channels * frames, 0.0);
  out.channel_freqs_hz = erb_center_frequencies(params.n_channels, params.fmin_hz, params.fmax_hz);
  out.frame_rate_hz = static_cast<double>(sr) / static_cast<double>(hop);

  // Base-band gammatone: shift the channel to DC, then four identical
  // one-pole low-pass stages with bandwidth 1.019 ERB(fc).
  constexpr double kExponent = kCochleagramCompression / 2.0;  // applied to |y|^2
  constexpr std::size_t kResync = 256;
  const double* x = audio.samples.data();
  for (std::size_t c = 0; c < out.channels; ++c) {
    const double fc = out.channel_freqs_hz[c];
    const double a = std::exp(-kTwoPi * 1.019 * erb_bandwidth(fc) / sr);
    const double g = 1.0 - a;
    const double omega = kTwoPi * fc / sr;
    const std::complex<double> step = std::polar(1.0, -omega);
    std::complex<double> rot;
    double re[4] = {0, 0, 0, 0}, im[4] = {0, 0, 0, 0};
    double block = 0.0;
    std::size_t frame = 0, in_block = 0;
    for (std::size_t i = 0; i < frames * hop; ++i) {
      if (i % kResync == 0)
        rot = std::polar(1.0, -kTwoPi * std::fmod(fc * static_cast<double>(i) / sr, 1.0));
      double ur = x[i] * rot.real();
      double ui = x[i] * rot.imag();
      for (int s = 0; s < 4; ++s) {
        re[s] = a * re[s] + g * ur;
        im[s] = a * im[s] + g * ui;
        ur = re[s];
        ui = im[s];
      }
      const double power = ur * ur + ui * ui;
      block += power > 0.0 ? std::pow(power, kExponent) : 0.0;
      rot *= step;
      if (++in_block == hop) {
        out.at(c, frame++) = block / static_cast<double>(hop);
        block = 0.0;
        in_block = 0;
      }
    }
  }
  return out;
}

TimeFreqMatrix compute_frontend(const AudioBuffer& audio, const FrontendParams& params) {
  switch (params.kind) {
    case FrontendKind::mel: return mel_spectrogram(audio, params);
    case FrontendKind::cqt: return cqt(audio, params);
    case FrontendKind::cochleagram: return cochleagram(audio, params);
  }
  fail(ErrorCode::invalid_argument, "unknown front-end kind");
}

std::vector<double> pool_time(const TimeFreqMatrix& m) {
  require(m.channels > 0 && m.frames > 0, "cannot pool an empty matrix");
  std::vector<double> pooled(m.channels);
  for (std::size_t c = 0; c < m.channels; ++c) {
    double acc = 0.0;
    for (double v : m.channel(c)) acc += v;
    pooled[c] = acc / static_cast<double>(m.frames);
  }
  return pooled;
}

}  // namespace chroma_rsa
