// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chroma_rsa/error.hpp"
#include "chroma_rsa/frontends.hpp"
#include "chroma_rsa/hypothesis_models.hpp"
#include "chroma_rsa/interchange.hpp"
#include "chroma_rsa/parallel.hpp"
#include "chroma_rsa/pipeline.hpp"
#include "chroma_rsa/rdm.hpp"
#include "chroma_rsa/rsa_stats.hpp"
#include "chroma_rsa/stimulus_bank.hpp"
#include "oracles.hpp"

using namespace chroma_rsa;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStudySeed = 20240917;

// Collects failed sub-checks of one criterion.
struct Verdict {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

bool report(const std::string& id, const std::string& title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = v.failures.empty();
  std::printf("%s %s: %s (%.1f s)", ok ? "PASS" : "FAIL", id.c_str(), title.c_str(), secs);
  if (!v.notes.empty()) std::printf(" | %s", join(v.notes, "; ").c_str());
  if (!ok) std::printf(" | failed: %s", join(v.failures, "; ").c_str());
  std::printf("\n");
  std::fflush(stdout);
  return ok;
}

std::vector<int> study_notes() {
  std::vector<int> n(36);
  std::iota(n.begin(), n.end(), 60);
  return n;
}

oracle::Matrix to_matrix(const Rdm& r) {
  oracle::Matrix m(r.size(), std::vector<double>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) m[i][j] = r(i, j);
  return m;
}

Rdm random_rdm(std::mt19937_64& rng, std::size_t n) {
  std::vector<int> labels(n);
  std::iota(labels.begin(), labels.end(), 0);
  Rdm r = Rdm::zeros(labels);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) r(i, j) = r(j, i) = u(rng);
  return r;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = ss.str();
  }
  return files;
}

const RsaResult& find(const std::vector<RsaResult>& rs, const std::string& rep, const std::string& model) {
  for (const auto& r : rs)
    if (r.representation_name == rep && r.model_name == model) return r;
  fail(ErrorCode::invalid_argument, "no result for " + rep + "/" + model);
}

std::string describe(const RsaResult& r) {
  return r.representation_name + "/" + r.model_name + " rho=" +
         (r.mean_rho ? fmt("%.4f", *r.mean_rho) : "NA") + " t=" +
         (r.t_vs_zero ? fmt("%.2f", *r.t_vs_zero) : "NA") + " p=" +
         (r.p_vs_zero ? fmt("%.3g", *r.p_vs_zero) : "NA");
}

// Full 30 x 36 study through the stage pipeline.
void study_structure(Verdict& v) {
  const fs::path out = fs::temp_directory_path() / "chroma_rsa_acceptance_study";
  fs::remove_all(out);
  StudyConfig config = StudyConfig::defaults();
  config.seed = kStudySeed;
  config.output_dir = out;
  config.workers = default_workers();
  const auto start = std::chrono::steady_clock::now();
  run_all(config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto results = load_rsa_stage(config);
  v.check(results.size() == 6, "expected 6 results");
  v.check(results.front().per_instrument_rho.size() == 30, "expected 30 instruments");

  for (const char* rep : {"mel", "cochleagram"}) {
    const auto& height = find(results, rep, "pitch_height");
    const auto& chroma = find(results, rep, "chroma_binary");
    v.note(describe(height));
    v.note(describe(chroma));
    v.check(height.significantly_positive(), std::string(rep) + " pitch height not significantly > 0");
    v.check(!chroma.significantly_positive(), std::string(rep) + " chroma significantly > 0");
  }
  const auto& cqt_chroma = find(results, "cqt", "chroma_binary");
  const auto& mel_chroma = find(results, "mel", "chroma_binary");
  v.note(describe(cqt_chroma));
  v.check(cqt_chroma.significantly_positive(), "cqt chroma not significantly > 0");
  v.check(cqt_chroma.mean_rho && mel_chroma.mean_rho && *cqt_chroma.mean_rho > *mel_chroma.mean_rho,
          "cqt chroma not above mel chroma");
  v.note("Bonferroni m=" + std::to_string(results.front().n_comparisons) + ", alpha=0.01");
  v.note("study runtime " + fmt("%.0f", secs) + " s");
  fs::remove_all(out);
}

EmbeddingSet embedding_from(const std::vector<int>& notes, std::size_t dim,
                            const std::function<std::vector<float>(int)>& f) {
  EmbeddingSet s;
  s.representation_name = "oracle";
  s.instrument_id = "oracle";
  s.note_midis = notes;
  s.dim = dim;
  for (int m : notes) {
    const auto row = f(m);
    s.vectors.insert(s.vectors.end(), row.begin(), row.end());
  }
  return s;
}

void oracle_embeddings(Verdict& v) {
  const auto notes = study_notes();

  // (a) [midi, midi^2]
  {
    const auto set = embedding_from(notes, 2, [](int m) {
      return std::vector<float>{static_cast<float>(m), static_cast<float>(m * m)};
    });
    const Rdm rdm = compute_rdm(set);
    const Rdm model = pitch_height_model(notes);
    // brute-force distances straight from the definition
    oracle::Matrix brute(notes.size(), std::vector<double>(notes.size(), 0.0));
    for (std::size_t i = 0; i < notes.size(); ++i)
      for (std::size_t j = 0; j < notes.size(); ++j) {
        if (i == j) continue;
        const std::vector<long double> a = {static_cast<long double>(notes[i]),
                                            static_cast<long double>(notes[i]) * notes[i]};
        const std::vector<long double> b = {static_cast<long double>(notes[j]),
                                            static_cast<long double>(notes[j]) * notes[j]};
        brute[i][j] = static_cast<double>(1.0L - std::fabs(oracle::pearson(a, b)));
      }
    double max_dev = 0;
    for (std::size_t i = 0; i < notes.size(); ++i)
      for (std::size_t j = 0; j < notes.size(); ++j)
        max_dev = std::max(max_dev, std::abs(brute[i][j] - rdm(i, j)));
    v.check(max_dev <= 1e-12, "(a) RDM differs from brute-force distances");
    const double ref = oracle::spearman(oracle::upper(brute), oracle::upper(to_matrix(model)));
    const auto rho = spearman(vectorize(rdm), vectorize(model));
    if (!rho) {
      v.note("(a) every pair of 2-dim vectors has |r| = 1, so the RDM is all zeros and "
             "Spearman is undefined (oracle: " + fmt("%g", ref) + ")");
      v.check(false, "(a) Spearman vs pitch height undefined, cannot exceed 0.95");
    } else {
      v.note("(a) rho=" + fmt("%.6f", *rho));
      v.check(std::abs(*rho - ref) <= 1e-12, "(a) rho differs from oracle");
      v.check(*rho > 0.95, "(a) rho not above 0.95");
    }
  }

  // (b) one-hot pitch class
  {
    const auto set = embedding_from(notes, 12, [](int m) {
      std::vector<float> row(12, 0.0f);
      row[static_cast<std::size_t>(m % 12)] = 1.0f;
      return row;
    });
    const Rdm rdm = compute_rdm(set);
    const Rdm model = chroma_model(notes);
    const auto x = vectorize(rdm), y = vectorize(model);
    bool same_order = true;
    for (std::size_t p = 0; p < x.size() && same_order; ++p)
      for (std::size_t q = 0; q < x.size(); ++q)
        if ((x[p] < x[q]) != (y[p] < y[q]) || (x[p] == x[q]) != (y[p] == y[q])) {
          same_order = false;
          break;
        }
    v.check(same_order, "(b) RDM rank pattern differs from the binary chroma model");
    const auto rho = spearman(x, y);
    v.check(rho && std::abs(*rho - 1.0) <= 1e-12, "(b) Spearman vs chroma model is not 1");
    if (rho) v.note("(b) rho=" + fmt("%.15f", *rho));
  }
}

void statistics_oracles(Verdict& v) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0, 1);
  double dev_spearman = 0, dev_t = 0, dev_p = 0, dev_sem = 0, dev_nc = 0;
  int instances = 0;
  for (int trial = 0; trial < 1000; ++trial, ++instances) {
    const std::size_t len = 3 + rng() % 48;  // 3..50
    std::vector<double> x(len), y(len);
    for (auto& e : x) e = gauss(rng);
    for (auto& e : y) e = (trial % 4 == 0) ? std::round(gauss(rng) * 2) : gauss(rng);
    if (std::all_of(y.begin(), y.end(), [&](double e) { return e == y[0]; })) y[0] += 1.0;
    const auto s = spearman(x, y);
    if (s) dev_spearman = std::max(dev_spearman, std::abs(*s - oracle::spearman(x, y)));
    else v.check(false, "spearman undefined on a random instance");

    const std::size_t n = 2 + rng() % 9;  // 2..10
    std::vector<double> sample(n);
    for (auto& e : sample) e = 0.2 + 0.3 * gauss(rng);
    const double mu = (trial % 2) ? 0.0 : 0.1 * gauss(rng);
    const auto t = one_sample_ttest(sample, mu);
    const double t_ref = oracle::t_statistic(sample, mu);
    if (!t) {
      v.check(false, "t test undefined on a random instance");
      continue;
    }
    dev_t = std::max(dev_t, std::abs(t->t - t_ref) / std::max(1.0, std::abs(t_ref)));
    dev_p = std::max(dev_p, std::abs(t->p_two_sided - oracle::t_two_sided_p(t_ref, n - 1.0)));
    dev_sem = std::max(dev_sem, std::abs(sem(sample) - oracle::sem(sample)));

    const std::size_t k = 2 + rng() % 9, dim = 4 + rng() % 8;
    std::vector<Rdm> rdms;
    std::vector<oracle::Matrix> mats;
    for (std::size_t i = 0; i < k; ++i) {
      rdms.push_back(random_rdm(rng, dim));
      mats.push_back(to_matrix(rdms.back()));
    }
    const auto nc = noise_ceiling(rdms);
    const auto ref = oracle::noise_ceiling(mats);
    if (!nc.lower || !nc.upper) {
      v.check(false, "noise ceiling undefined on a random instance");
      continue;
    }
    dev_nc = std::max({dev_nc, std::abs(*nc.lower - ref.lower), std::abs(*nc.upper - ref.upper)});
  }
  v.check(instances >= 1000, "fewer than 1000 instances");
  v.check(dev_spearman <= 1e-10, "spearman deviates from oracle");
  v.check(dev_t <= 1e-10, "t statistic deviates from oracle");
  v.check(dev_p <= 1e-10, "t test p-value deviates from oracle");
  v.check(dev_sem <= 1e-10, "sem deviates from oracle");
  v.check(dev_nc <= 1e-10, "noise ceiling deviates from oracle");

  struct Frozen {
    double t, df, p;
  };
  // 50-digit references
  const Frozen frozen[] = {
      {0.25, 4, 0.81490201145918122692},   {1.0, 4, 0.37390096630005888501},
      {2.5, 4, 0.066766544811988145039},   {4.242640687119285, 4, 0.013235599563682691067},
      {7.0, 4, 0.0021921298066929389916},  {15.0, 4, 0.0001150870843292216449},
      {0.25, 29, 0.80434988308111724251},  {1.0, 29, 0.32558198801619354111},
      {2.5, 29, 0.018325344338426076914},  {4.242640687119285, 29, 0.0002062716501423592926},
      {7.0, 29, 1.0700271530221398112e-7}, {15.0, 29, 3.3590540615815952991e-15},
  };
  double dev_frozen = 0;
  for (const auto& f : frozen)
    dev_frozen = std::max(dev_frozen, std::abs(student_t_two_sided_p(f.t, f.df) - f.p));
  v.check(dev_frozen <= 1e-10, "t distribution p-values off at df 4/29");
  v.note(std::to_string(instances) + " instances; max dev spearman " + fmt("%.1e", dev_spearman) +
         ", t " + fmt("%.1e", dev_t) + ", p " + fmt("%.1e", dev_p) + ", sem " +
         fmt("%.1e", dev_sem) + ", noise ceiling " + fmt("%.1e", dev_nc) + ", frozen p " +
         fmt("%.1e", dev_frozen));
}

void invariants(Verdict& v) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0, 1);

  bool rdm_ok = true;
  for (int trial = 0; trial < 1000 && rdm_ok; ++trial) {
    EmbeddingSet s;
    const std::size_t notes = 2 + rng() % 20;
    s.dim = 2 + rng() % 30;
    for (std::size_t i = 0; i < notes; ++i) s.note_midis.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < notes * s.dim; ++i) s.vectors.push_back(static_cast<float>(gauss(rng)));
    const Rdm r = compute_rdm(s);
    for (std::size_t i = 0; i < notes; ++i)
      for (std::size_t j = 0; j < notes; ++j)
        if (r(i, i) != 0.0 || r(i, j) != r(j, i) || r(i, j) < 0.0 || r(i, j) > 1.0) rdm_ok = false;
  }
  v.check(rdm_ok, "RDM symmetry / zero diagonal / [0,1] range");

  double dev_affine = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(3 + rng() % 40), b(a.size());
    for (auto& e : a) e = gauss(rng);
    for (auto& e : b) e = gauss(rng);
    double alpha = gauss(rng) * 4;
    if (std::abs(alpha) < 0.05) alpha = 1.5;
    const double beta = gauss(rng) * 10;
    auto a2 = a;
    for (auto& e : a2) e = alpha * e + beta;
    dev_affine = std::max(dev_affine, std::abs(correlation_distance(a2, b).value -
                                               correlation_distance(a, b).value));
  }
  v.check(dev_affine <= 1e-9, "correlation distance not affine invariant");

  double dev_monotone = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(3 + rng() % 48), y(x.size()), ex(x.size());
    for (auto& e : x) e = gauss(rng);
    for (auto& e : y) e = gauss(rng);
    for (std::size_t i = 0; i < x.size(); ++i) ex[i] = std::exp(x[i]) + x[i] * x[i] * x[i];
    dev_monotone = std::max(dev_monotone, std::abs(*spearman(x, y) - *spearman(ex, y)));
  }
  v.check(dev_monotone <= 1e-12, "Spearman not invariant to monotone transforms");

  bool ceiling_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Rdm> rdms;
    const std::size_t k = 2 + rng() % 9, dim = 4 + rng() % 12;
    const Rdm base = random_rdm(rng, dim);
    for (std::size_t i = 0; i < k; ++i) {
      Rdm r = random_rdm(rng, dim);
      const double w = static_cast<double>(trial % 5) / 4.0;  // shared structure from none to full
      for (std::size_t p = 0; p < r.values.size(); ++p) r.values[p] = w * base.values[p] + (1 - w) * r.values[p];
      rdms.push_back(r);
    }
    const auto nc = noise_ceiling(rdms);
    if (nc.lower && nc.upper && *nc.lower > *nc.upper + 1e-12) ceiling_ok = false;
  }
  v.check(ceiling_ok, "noise_lower exceeds noise_upper");

  // CQT octave shift on synthesized harmonic tones
  const auto params = FrontendParams::cqt_default();
  std::vector<TimbreProfile> timbres(3);
  timbres[0].harmonic_amplitudes = {1.0};
  timbres[1].harmonic_amplitudes = {1.0, 0.5, 0.33, 0.25, 0.2};
  timbres[2].harmonic_amplitudes = {1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2};
  std::vector<std::pair<std::size_t, int>> jobs;
  for (std::size_t t = 0; t < timbres.size(); ++t)
    for (int m = 60; m + 12 <= 95; ++m) jobs.emplace_back(t, m);
  std::vector<int> lags(jobs.size());
  parallel_for(jobs.size(), default_workers(), [&](std::size_t j) {
    const auto& [t, m] = jobs[j];
    const auto lo = pool_time(cqt(synthesize_note({m, "x", Family::keyboard}, timbres[t], 1.0, 16000, 5), params));
    const auto hi = pool_time(cqt(synthesize_note({m + 12, "x", Family::keyboard}, timbres[t], 1.0, 16000, 5), params));
    const std::size_t n = lo.size();
    std::size_t best_lag = 0;
    double best = -1;
    for (std::size_t lag = 0; lag < n; ++lag) {
      double c = 0;
      for (std::size_t k = 0; k < n; ++k) c += lo[k] * hi[(k + lag) % n];
      if (c > best) {
        best = c;
        best_lag = lag;
      }
    }
    lags[j] = static_cast<int>(best_lag);
  });
  const auto good = std::count(lags.begin(), lags.end(), params.bins_per_octave);
  v.check(static_cast<std::size_t>(good) == lags.size(), "CQT octave lag differs from bins_per_octave");
  v.note("CQT octave lag = " + std::to_string(params.bins_per_octave) + " for " + std::to_string(good) +
         "/" + std::to_string(lags.size()) + " tone pairs");
}

void formats(Verdict& v) {
  std::mt19937_64 rng(17);
  std::normal_distribution<float> gauss(0.0f, 10.0f);
  bool round_trip = true;
  for (int trial = 0; trial < 500; ++trial) {
    EmbeddingSet s;
    s.representation_name = "rep_" + std::to_string(trial % 7);
    s.instrument_id = "inst_" + std::to_string(trial);
    const std::size_t notes = 1 + rng() % 40;
    for (std::size_t i = 0; i < notes; ++i) s.note_midis.push_back(20 + static_cast<int>(i));
    s.dim = 1 + rng() % 100;
    for (std::size_t i = 0; i < notes * s.dim; ++i) s.vectors.push_back(gauss(rng));
    const auto bytes = encode_embeddings(s);
    const auto back = decode_embeddings(bytes);
    if (!(back == s) || encode_embeddings(back) != bytes) round_trip = false;

    auto code_of = [](std::vector<std::uint8_t> b) -> std::optional<ErrorCode> {
      try {
        decode_embeddings(b);
      } catch (const Error& e) {
        return e.code();
      }
      return std::nullopt;
    };
    auto magic = bytes;
    magic[static_cast<std::size_t>(trial % 4)] ^= 0x20;
    v.check(code_of(magic) == ErrorCode::bad_magic, "corrupted magic not reported as bad_magic");
    auto cut = bytes;
    cut.resize(4 + rng() % (bytes.size() - 4));
    v.check(code_of(cut) == ErrorCode::length_mismatch, "truncation not reported as length_mismatch");
    if (!v.failures.empty()) break;
  }
  v.check(round_trip, "interchange round trip not bit exact");

  // pipeline byte determinism for a fixed (config, seed)
  auto small = [](const fs::path& out, unsigned workers) {
    StudyConfig c = StudyConfig::defaults();
    c.bank.families = {{Family::flute, 2}, {Family::guitar, 2}, {Family::keyboard, 2}};
    c.seed = kStudySeed;
    c.output_dir = out;
    c.workers = workers;
    return c;
  };
  const fs::path a = fs::temp_directory_path() / "chroma_rsa_acceptance_det_a";
  const fs::path b = fs::temp_directory_path() / "chroma_rsa_acceptance_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run_all(small(a, 1));
  run_all(small(b, std::max(2u, default_workers())));
  const auto sa = snapshot(a), sb = snapshot(b);
  v.check(!sa.empty() && sa == sb, "pipeline outputs differ between runs");
  v.note("500 round trips; " + std::to_string(sa.size()) + " pipeline files byte-identical across runs");
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report("AC1", "study structure (mel/cochleagram pitch height, CQT chroma)", study_structure);
  ok &= report("AC2", "oracle embeddings", oracle_embeddings);
  ok &= report("AC3", "statistics oracle suite", statistics_oracles);
  ok &= report("AC4", "invariant suite", invariants);
  ok &= report("AC5", "format suite and pipeline determinism", formats);
  return ok ? 0 : 1;
}
