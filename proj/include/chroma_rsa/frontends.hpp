#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "chroma_rsa/stimulus_bank.hpp"

namespace chroma_rsa {

enum class FrontendKind { mel, cqt, cochleagram };

std::string_view to_string(FrontendKind kind) noexcept;
FrontendKind frontend_kind_from_string(std::string_view name);

struct FrontendParams {
  FrontendKind kind = FrontendKind::mel;
  int n_channels = 128;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  int bins_per_octave = 0;  // cqt only
  double window_s = 0.025;
  double hop_s = 0.010;

  /// 128 triangular mel bands over [0, Nyquist].
  static FrontendParams mel_default(int sample_rate_hz = 16000);
  /// 48 bins per octave over seven octaves from C1: 336 bins.
  static FrontendParams cqt_default(int sample_rate_hz = 16000);
  /// 128 ERB-spaced gammatone channels over [50 Hz, Nyquist].
  static FrontendParams cochleagram_default(int sample_rate_hz = 16000);

  void validate(int sample_rate_hz) const;

  nlohmann::json to_json() const;
  /// Missing fields take the kind's defaults at `sample_rate_hz`.
  static FrontendParams from_json(const nlohmann::json& j, int sample_rate_hz = 16000);
};

/// channels x frames, row-major by channel.
struct TimeFreqMatrix {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::vector<double> values;
  std::vector<double> channel_freqs_hz;
  double frame_rate_hz = 0.0;

  double& at(std::size_t c, std::size_t f) { return values[c * frames + f]; }
  double at(std::size_t c, std::size_t f) const { return values[c * frames + f]; }
  std::span<const double> channel(std::size_t c) const {
    return {values.data() + c * frames, frames};
  }
  void validate() const;
};

TimeFreqMatrix mel_spectrogram(const AudioBuffer& audio, const FrontendParams& params);

/// Constant-Q magnitudes computed per bin in the time domain. Bin k has
/// center fmin * 2^(k/b), quality Q = 1 / (2^(1/b) - 1) and a Hann window of
/// N_k = ceil(Q * sr / f_k) samples; frames are centered every hop with the
/// signal zero-padded outside its support.
TimeFreqMatrix cqt(const AudioBuffer& audio, const FrontendParams& params);

/// Window length of CQT bin k in samples.
std::size_t cqt_window_length(const FrontendParams& params, int sample_rate_hz, int bin);

/// n frequencies equally spaced on the ERB-number scale
/// 21.4 * log10(1 + 0.00437 f), first = fmin, last = fmax.
std::vector<double> erb_center_frequencies(int n, double fmin_hz, double fmax_hz);

double erb_number(double hz);
double erb_number_to_hz(double erb);
/// Glasberg & Moore equivalent rectangular bandwidth at hz.
double erb_bandwidth(double hz);

/// 4th-order gammatone filterbank; channel envelope is the analytic
/// magnitude of each filter's output, compressed by ^0.3 and averaged over
/// hop-length blocks.
TimeFreqMatrix cochleagram(const AudioBuffer& audio, const FrontendParams& params);

inline constexpr double kCochleagramCompression = 0.3;

TimeFreqMatrix compute_frontend(const AudioBuffer& audio, const FrontendParams& params);

/// Mean over frames per channel.
std::vector<double> pool_time(const TimeFreqMatrix& m);

}  // namespace chroma_rsa
