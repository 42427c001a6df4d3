#include "chroma_rsa/stimulus_bank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "chroma_rsa/error.hpp"
#include "chroma_rsa/parallel.hpp"
#include "chroma_rsa/wav.hpp"

namespace chroma_rsa {

namespace {

// Portable uniform draw in [lo, hi); std distributions differ between
// standard libraries, the raw mt19937_64 stream does not.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double envelope_level(const TimbreProfile& t, double time, double note_off) {
  auto held = [&](double x) {
    if (x < t.attack_s) return x / t.attack_s;
    x -= t.attack_s;
    if (x < t.decay_s) return 1.0 - (1.0 - t.sustain_level) * (x / t.decay_s);
    return t.sustain_level;
  };
  if (time < note_off) return held(time);
  const double released = time - note_off;
  if (released >= t.release_s) return 0.0;
  return held(note_off) * (1.0 - released / t.release_s);
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::flute: return "flute";
    case Family::guitar: return "guitar";
    case Family::keyboard: return "keyboard";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "flute") return Family::flute;
  if (name == "guitar") return Family::guitar;
  if (name == "keyboard") return Family::keyboard;
  fail(ErrorCode::invalid_argument, "unknown family '" + std::string(name) + "'");
}

void TimbreProfile::validate() const {
  require(!harmonic_amplitudes.empty(), "timbre needs at least one harmonic");
  for (double a : harmonic_amplitudes)
    require(std::isfinite(a) && a >= 0.0, "harmonic amplitudes must be finite and nonnegative");
  require(attack_s > 0 && decay_s >= 0 && release_s > 0,
          "envelope times must be positive");
  require(sustain_level >= 0.0 && sustain_level <= 1.0, "sustain level outside [0, 1]");
  require(std::abs(detune_cents) <= 10.0, "detune exceeds 10 cents");
  require(std::isfinite(damping_per_s) && damping_per_s >= 0.0, "damping must be nonnegative");
}

void AudioBuffer::validate() const {
  require(sample_rate_hz > 0, "sample rate must be positive");
  require(!samples.empty(), "audio buffer is empty");
  for (double s : samples) {
    if (!std::isfinite(s)) fail(ErrorCode::non_finite, "audio contains non-finite samples");
    require(std::abs(s) <= 1.0, "audio sample outside [-1, 1]");
  }
}

double midi_to_freq(int midi) {
  return 440.0 * std::exp2((midi - 69) / 12.0);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

AudioBuffer synthesize_note(const NoteSpec& spec, const TimbreProfile& timbre,
                            double duration_s, int sample_rate_hz,
                            std::uint64_t seed) {
  timbre.validate();
  require(sample_rate_hz > 0, "sample rate must be positive");
  require(duration_s >= 0.5, "note duration must be at least 0.5 s");
  require(duration_s >= timbre.attack_s + timbre.release_s,
          "note duration shorter than attack + release");

  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  const double sr = sample_rate_hz;
  const double nyquist = sr / 2.0;
  const double f0 = midi_to_freq(spec.midi) * std::exp2(timbre.detune_cents / 1200.0);

  std::mt19937_64 rng(seed);
  std::vector<double> out(n, 0.0);
  constexpr std::size_t kResync = 512;
  for (std::size_t k = 1; k <= timbre.harmonic_amplitudes.size(); ++k) {
    const double gain = timbre.harmonic_amplitudes[k - 1];
    const double phase0 = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double freq = static_cast<double>(k) * f0;
    if (freq >= nyquist || gain == 0.0) continue;
    const double omega = 2.0 * std::numbers::pi * freq / sr;
    const double khz = freq / 1000.0;
    const double sigma = timbre.damping_per_s * khz * khz / sr;  // per sample
    const std::complex<double> step = std::polar(std::exp(-sigma), omega);
    std::complex<double> rot;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % kResync == 0) {
        const double t = static_cast<double>(i);
        rot = std::polar(std::exp(-sigma * t), omega * t + phase0);
      }
      out[i] += gain * rot.imag();
      rot *= step;
    }
  }

  const double note_off = duration_s - timbre.release_s;
  for (std::size_t i = 0; i < n; ++i)
    out[i] *= envelope_level(timbre, static_cast<double>(i) / sr, note_off);

  double peak = 0.0;
  for (double s : out) peak = std::max(peak, std::abs(s));
  require(peak > 0.0, "note has no audible partial below Nyquist");
  const double scale = kPeakLevel / peak;
  for (double& s : out) s *= scale;
  return AudioBuffer{std::move(out), sample_rate_hz};
}

TimbreProfile random_timbre(Family family, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TimbreProfile t;
  switch (family) {
    case Family::flute: {
      const int partials = uniform_int(rng, 4, 7);
      const double rolloff = uniform(rng, 2.5, 4.0);
      for (int k = 1; k <= partials; ++k)
        t.harmonic_amplitudes.push_back(std::pow(k, -rolloff) * uniform(rng, 0.8, 1.2));
      t.attack_s = uniform(rng, 0.06, 0.15);
      t.decay_s = uniform(rng, 0.1, 0.2);
      t.sustain_level = uniform(rng, 0.7, 0.9);
      t.release_s = uniform(rng, 0.08, 0.15);
      break;
    }
    case Family::guitar: {
      const int partials = uniform_int(rng, 8, 14);
      const double rolloff = uniform(rng, 1.0, 1.6);
      const double pluck = uniform(rng, 0.1, 0.3);
      for (int k = 1; k <= partials; ++k) {
        const double comb = std::abs(std::sin(std::numbers::pi * k * pluck));
        t.harmonic_amplitudes.push_back(std::pow(k, -rolloff) * (0.2 + 0.8 * comb));
      }
      t.attack_s = uniform(rng, 0.003, 0.008);
      t.decay_s = uniform(rng, 0.4, 0.8);
      t.sustain_level = uniform(rng, 0.0, 0.15);
      t.release_s = uniform(rng, 0.05, 0.1);
      t.damping_per_s = uniform(rng, 6.0, 16.0);
      break;
    }
    case Family::keyboard: {
      const int partials = uniform_int(rng, 16, 28);
      const double rolloff = uniform(rng, 0.8, 1.3);
      for (int k = 1; k <= partials; ++k)
        t.harmonic_amplitudes.push_back(std::pow(k, -rolloff) * uniform(rng, 0.7, 1.3));
      t.attack_s = uniform(rng, 0.002, 0.006);
      t.decay_s = uniform(rng, 0.15, 0.4);
      t.sustain_level = uniform(rng, 0.3, 0.6);
      t.release_s = uniform(rng, 0.08, 0.15);
      t.damping_per_s = uniform(rng, 1.5, 4.0);
      break;
    }
  }
  t.detune_cents = uniform(rng, -8.0, 8.0);
  return t;
}

std::vector<int> BankConfig::note_midis() const {
  std::vector<int> midis;
  for (int octave : octaves)
    for (int pc = 0; pc < 12; ++pc) midis.push_back(12 * (octave + 1) + pc);
  std::sort(midis.begin(), midis.end());
  return midis;
}

void BankConfig::validate() const {
  require(!families.empty(), "bank needs at least one family");
  int total = 0;
  std::set<Family> seen;
  for (const auto& fc : families) {
    require(fc.count >= 0, "family count must be nonnegative");
    require(seen.insert(fc.family).second, "family listed twice");
    total += fc.count;
  }
  require(total >= 1, "bank needs at least one instrument");
  require(!octaves.empty(), "bank needs at least one octave");
  std::set<int> uniq(octaves.begin(), octaves.end());
  require(uniq.size() == octaves.size(), "octave listed twice");
  for (int m : note_midis())
    require(m >= 0 && m <= 127, "octave outside the MIDI range");
  require(duration_s >= 0.5, "note duration must be at least 0.5 s");
  require(sample_rate_hz >= 8000, "sample rate must be at least 8000 Hz");
}

nlohmann::json BankConfig::to_json() const {
  nlohmann::json fams = nlohmann::json::array();
  for (const auto& fc : families)
    fams.push_back({{"family", to_string(fc.family)}, {"count", fc.count}});
  return {{"families", fams},
          {"octaves", octaves},
          {"duration_s", duration_s},
          {"sample_rate_hz", sample_rate_hz}};
}

BankConfig BankConfig::from_json(const nlohmann::json& j) {
  BankConfig c;
  if (j.contains("families")) {
    c.families.clear();
    for (const auto& f : j.at("families"))
      c.families.push_back({family_from_string(f.at("family").get<std::string>()),
                            f.at("count").get<int>()});
  }
  if (j.contains("octaves")) c.octaves = j.at("octaves").get<std::vector<int>>();
  if (j.contains("duration_s")) c.duration_s = j.at("duration_s").get<double>();
  if (j.contains("sample_rate_hz")) c.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  return c;
}

Bank build_bank(const BankConfig& config, std::uint64_t seed, unsigned workers) {
  config.validate();
  Bank bank;
  bank.config = config;
  bank.seed = seed;
  bank.note_midis = config.note_midis();

  for (const auto& fc : config.families) {
    for (int i = 0; i < fc.count; ++i) {
      const auto index = static_cast<std::uint64_t>(bank.instruments.size());
      const std::uint64_t inst_seed = mix_seed(seed, index);
      char id[32];
      std::snprintf(id, sizeof id, "%s_%02d", std::string(to_string(fc.family)).c_str(), i);
      bank.instruments.push_back(
          {id, fc.family, random_timbre(fc.family, mix_seed(inst_seed, 1000)), inst_seed});
    }
  }

  const std::size_t notes = bank.note_midis.size();
  bank.entries.resize(bank.instruments.size() * notes);
  parallel_for(bank.entries.size(), workers, [&](std::size_t idx) {
    const Instrument& inst = bank.instruments[idx / notes];
    NoteSpec spec{bank.note_midis[idx % notes], inst.id, inst.family};
    AudioBuffer audio = synthesize_note(spec, inst.timbre, config.duration_s,
                                        config.sample_rate_hz,
                                        mix_seed(inst.seed, static_cast<std::uint64_t>(spec.midi)));
    bank.entries[idx] = BankEntry{std::move(spec), std::move(audio)};
  });
  return bank;
}

std::string wav_relative_path(const NoteSpec& note) {
  char name[16];
  std::snprintf(name, sizeof name, "%03d.wav", note.midi);
  return note.instrument_id + "/" + name;
}

namespace {

nlohmann::json timbre_json(const TimbreProfile& t) {
  return {{"harmonic_amplitudes", t.harmonic_amplitudes},
          {"attack_s", t.attack_s},
          {"decay_s", t.decay_s},
          {"sustain_level", t.sustain_level},
          {"release_s", t.release_s},
          {"detune_cents", t.detune_cents},
          {"damping_per_s", t.damping_per_s}};
}

TimbreProfile timbre_from_json(const nlohmann::json& j) {
  TimbreProfile t;
  t.harmonic_amplitudes = j.at("harmonic_amplitudes").get<std::vector<double>>();
  t.attack_s = j.at("attack_s").get<double>();
  t.decay_s = j.at("decay_s").get<double>();
  t.sustain_level = j.at("sustain_level").get<double>();
  t.release_s = j.at("release_s").get<double>();
  t.detune_cents = j.at("detune_cents").get<double>();
  t.damping_per_s = j.value("damping_per_s", 0.0);
  return t;
}

}  // namespace

nlohmann::json bank_manifest(const Bank& bank) {
  nlohmann::json instruments = nlohmann::json::array();
  const std::size_t notes = bank.notes_per_instrument();
  for (std::size_t i = 0; i < bank.instruments.size(); ++i) {
    const Instrument& inst = bank.instruments[i];
    nlohmann::json wavs = nlohmann::json::array();
    for (std::size_t k = 0; k < notes; ++k)
      wavs.push_back({{"midi", bank.note_midis[k]},
                      {"wav", wav_relative_path(bank.entry(i, k).note)}});
    instruments.push_back({{"id", inst.id},
                           {"family", to_string(inst.family)},
                           {"seed", inst.seed},
                           {"timbre", timbre_json(inst.timbre)},
                           {"notes", wavs}});
  }
  return {{"schema_version", 1},
          {"seed", bank.seed},
          {"config", bank.config.to_json()},
          {"note_midis", bank.note_midis},
          {"instruments", instruments}};
}

void write_bank(const Bank& bank, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& inst : bank.instruments) fs::create_directories(dir / inst.id);
  for (const auto& e : bank.entries) write_wav(e.audio, dir / wav_relative_path(e.note));
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write manifest in " + dir.string());
  out << bank_manifest(bank).dump(2) << '\n';
  if (!out) fail(ErrorCode::io, "failed writing manifest in " + dir.string());
}

Bank read_bank(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) fail(ErrorCode::missing_stage, "no stimulus manifest in " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed_file, std::string("bad manifest: ") + e.what());
  }
  Bank bank;
  try {
    bank.seed = j.at("seed").get<std::uint64_t>();
    bank.config = BankConfig::from_json(j.at("config"));
    bank.note_midis = j.at("note_midis").get<std::vector<int>>();
    for (const auto& ij : j.at("instruments")) {
      Instrument inst{ij.at("id").get<std::string>(),
                      family_from_string(ij.at("family").get<std::string>()),
                      timbre_from_json(ij.at("timbre")), ij.at("seed").get<std::uint64_t>()};
      const auto& notes = ij.at("notes");
      if (notes.size() != bank.note_midis.size())
        fail(ErrorCode::malformed_file, "instrument " + inst.id + " has wrong note count");
      for (std::size_t k = 0; k < notes.size(); ++k) {
        NoteSpec spec{notes[k].at("midi").get<int>(), inst.id, inst.family};
        if (spec.midi != bank.note_midis[k])
          fail(ErrorCode::malformed_file, "manifest note ordering mismatch for " + inst.id);
        AudioBuffer audio = read_wav(dir / notes[k].at("wav").get<std::string>());
        bank.entries.push_back({std::move(spec), std::move(audio)});
      }
      bank.instruments.push_back(std::move(inst));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed_file, std::string("bad manifest: ") + e.what());
  }
  return bank;
}

}  // namespace chroma_rsa
