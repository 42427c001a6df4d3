#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace chroma_rsa {

enum class Family { flute, guitar, keyboard };

std::string_view to_string(Family family) noexcept;
Family family_from_string(std::string_view name);

/// One stimulus: a note played by one instrument.
struct NoteSpec {
  int midi = 60;
  std::string instrument_id;
  Family family = Family::flute;
};

/// Additive-synthesis recipe for one instrument. Partial k (1-based) sounds
/// at k * f0 with gain harmonic_amplitudes[k-1].
struct TimbreProfile {
  std::vector<double> harmonic_amplitudes;
  double attack_s = 0.01;
  double decay_s = 0.1;
  double sustain_level = 0.7;
  double release_s = 0.05;
  double detune_cents = 0.0;
  /// Extra exponential decay rate (1/s) of a partial at 1 kHz, growing with
  /// the square of partial frequency, as in damped strings. 0 disables it.
  double damping_per_s = 0.0;

  void validate() const;
};

/// Mono audio, samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  void validate() const;
};

/// 12-TET tuning with A4 (MIDI 69) at 440 Hz.
double midi_to_freq(int midi);

/// Peak level every synthesized note is normalized to.
inline constexpr double kPeakLevel = 0.9;

AudioBuffer synthesize_note(const NoteSpec& spec, const TimbreProfile& timbre,
                            double duration_s, int sample_rate_hz,
                            std::uint64_t seed);

/// Draws a random timbre with the family's character: flutes have few
/// steeply decaying partials and a soft attack, guitars a plucked envelope
/// with moderate partials, keyboards a fast attack and many partials.
TimbreProfile random_timbre(Family family, std::uint64_t seed);

struct FamilyCount {
  Family family;
  int count;
};

struct BankConfig {
  std::vector<FamilyCount> families = {
      {Family::flute, 10}, {Family::guitar, 10}, {Family::keyboard, 10}};
  std::vector<int> octaves = {4, 5, 6};
  double duration_s = 1.0;
  int sample_rate_hz = 16000;

  /// Ascending MIDI numbers covered by the configured octaves.
  std::vector<int> note_midis() const;
  void validate() const;

  nlohmann::json to_json() const;
  static BankConfig from_json(const nlohmann::json& j);
};

struct Instrument {
  std::string id;
  Family family;
  TimbreProfile timbre;
  std::uint64_t seed;
};

struct BankEntry {
  NoteSpec note;
  AudioBuffer audio;
};

/// Instruments in config order; entries grouped by instrument, ascending MIDI
/// within each instrument.
struct Bank {
  BankConfig config;
  std::uint64_t seed = 0;
  std::vector<int> note_midis;
  std::vector<Instrument> instruments;
  std::vector<BankEntry> entries;

  std::size_t notes_per_instrument() const { return note_midis.size(); }
  const BankEntry& entry(std::size_t instrument, std::size_t note) const {
    return entries[instrument * note_midis.size() + note];
  }
};

Bank build_bank(const BankConfig& config, std::uint64_t seed,
                unsigned workers = 1);

/// Relative WAV path for an entry inside a bank directory.
std::string wav_relative_path(const NoteSpec& note);

nlohmann::json bank_manifest(const Bank& bank);

/// Writes every entry as WAV plus manifest.json under `dir`.
void write_bank(const Bank& bank, const std::filesystem::path& dir);

/// Reads a bank previously written by write_bank.
Bank read_bank(const std::filesystem::path& dir);

/// SplitMix64 step; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace chroma_rsa
