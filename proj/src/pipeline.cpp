#include "chroma_rsa/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "chroma_rsa/error.hpp"
#include "chroma_rsa/interchange.hpp"
#include "chroma_rsa/parallel.hpp"
#include "chroma_rsa/rdm.hpp"
#include "chroma_rsa/report.hpp"

namespace chroma_rsa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStageFile = "stage.json";

json read_json(const fs::path& path, ErrorCode missing_code,
               ErrorCode parse_code = ErrorCode::malformed_file) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(missing_code, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(parse_code, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void stamp_stage(const fs::path& dir, const std::string& stage, const std::string& hash,
                 json extra = json::object()) {
  extra["stage"] = stage;
  extra["hash"] = hash;
  write_json(dir / kStageFile, extra);
}

json require_stage(const fs::path& dir, const std::string& stage, const std::string& hash) {
  if (!fs::exists(dir / kStageFile))
    fail(ErrorCode::missing_stage, "stage '" + stage + "' has no output at " + dir.string() +
                                       "; run `chroma-rsa " + stage + "` first");
  json j = read_json(dir / kStageFile, ErrorCode::missing_stage);
  if (j.value("stage", "") != stage || j.value("hash", "") != hash)
    fail(ErrorCode::missing_stage, "stage '" + stage + "' output at " + dir.string() +
                                       " belongs to a different configuration");
  return j;
}

void log(const std::string& line) { std::clog << "[chroma-rsa] " << line << '\n'; }

std::string model_file_name(ModelKind kind) { return std::string(to_string(kind)); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

StudyConfig StudyConfig::defaults() {
  StudyConfig c;
  c.frontends = {{"mel", FrontendParams::mel_default()},
                 {"cqt", FrontendParams::cqt_default()},
                 {"cochleagram", FrontendParams::cochleagram_default()}};
  return c;
}

StudyConfig StudyConfig::from_json(const json& j) {
  StudyConfig c = defaults();
  try {
    if (j.contains("bank")) c.bank = BankConfig::from_json(j.at("bank"));
    if (j.contains("frontends")) {
      c.frontends.clear();
      for (const auto& f : j.at("frontends")) {
        const auto kind = f.at("kind").get<std::string>();
        c.frontends.push_back({f.value("name", kind),
                               FrontendParams::from_json(f, c.bank.sample_rate_hz)});
      }
    }
    if (j.contains("embedding_inputs"))
      for (const auto& e : j.at("embedding_inputs"))
        c.embedding_inputs.push_back({e.at("name").get<std::string>(),
                                      fs::path(e.at("dir").get<std::string>())});
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(model_kind_from_string(m.get<std::string>()));
    }
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("family")) c.family = j.at("family").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("bad config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::invalid_argument) throw;
    fail(ErrorCode::config, std::string("bad config: ") + e.what());
  }
  return c;
}

json StudyConfig::to_json() const {
  json fronts = json::array();
  for (const auto& f : frontends) {
    json p = f.params.to_json();
    p["name"] = f.name;
    fronts.push_back(p);
  }
  json inputs = json::array();
  for (const auto& e : embedding_inputs) inputs.push_back({{"name", e.name}, {"dir", e.dir.string()}});
  json models_json = json::array();
  for (auto m : models) models_json.push_back(to_string(m));
  return {{"bank", bank.to_json()},
          {"frontends", fronts},
          {"embedding_inputs", inputs},
          {"models", models_json},
          {"alpha", alpha},
          {"family", family},
          {"output_dir", output_dir.string()},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"workers", workers}};
}

void StudyConfig::validate() const {
  try {
    bank.validate();
    for (const auto& f : frontends) f.params.validate(bank.sample_rate_hz);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::config, "alpha must lie in (0, 1)");
  if (models.empty()) fail(ErrorCode::config, "no hypothesis models configured");
  if (frontends.empty() && embedding_inputs.empty())
    fail(ErrorCode::config, "no representations configured");
  std::set<std::string> names;
  for (const auto& n : representation_names()) {
    if (n.empty() || n.find_first_of("/\\") != std::string::npos)
      fail(ErrorCode::config, "representation name '" + n + "' is not a valid directory name");
    if (!names.insert(n).second) fail(ErrorCode::config, "representation '" + n + "' listed twice");
  }
  std::set<ModelKind> kinds(models.begin(), models.end());
  if (kinds.size() != models.size()) fail(ErrorCode::config, "model listed twice");
}

std::vector<std::string> StudyConfig::representation_names() const {
  std::vector<std::string> names;
  for (const auto& f : frontends) names.push_back(f.name);
  for (const auto& e : embedding_inputs) names.push_back(e.name);
  return names;
}

StudyConfig load_config(const fs::path& path) {
  return StudyConfig::from_json(read_json(path, ErrorCode::config, ErrorCode::config));
}

std::string content_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StagePaths stage_paths(const StudyConfig& config) {
  if (!config.seed) fail(ErrorCode::config, "a seed is required (config 'seed' or --seed)");
  const json full = config.to_json();
  StagePaths p;
  p.synth_hash = content_hash({{"bank", full["bank"]}, {"seed", *config.seed}});
  p.frontend_hash = content_hash({{"parent", p.synth_hash}, {"frontends", full["frontends"]}});
  p.rdm_hash = content_hash({{"parent", p.frontend_hash}, {"inputs", full["embedding_inputs"]}});
  p.rsa_hash = content_hash({{"parent", p.rdm_hash},
                             {"models", full["models"]},
                             {"alpha", config.alpha},
                             {"family", config.family}});
  p.report_hash = content_hash({{"parent", p.rsa_hash}});
  const fs::path& out = config.output_dir;
  p.synth = out / ("stimuli-" + p.synth_hash);
  p.frontend = out / ("embeddings-" + p.frontend_hash);
  p.rdm = out / ("rdms-" + p.rdm_hash);
  p.rsa = out / ("rsa-" + p.rsa_hash);
  p.report = out / ("figures-" + p.report_hash);
  return p;
}

fs::path run_synth(const StudyConfig& config) {
  config.validate();
  const StagePaths paths = stage_paths(config);
  const Bank bank = build_bank(config.bank, *config.seed, config.workers);
  write_bank(bank, paths.synth);
  stamp_stage(paths.synth, "synth", paths.synth_hash);
  log("synth: " + std::to_string(bank.entries.size()) + " notes -> " + paths.synth.string());
  return paths.synth;
}

std::vector<EmbeddingSet> embed_bank(const Bank& bank, const FrontendConfig& frontend,
                                     unsigned workers) {
  const std::size_t notes = bank.notes_per_instrument();
  const std::size_t instruments = bank.instruments.size();
  std::vector<std::vector<double>> pooled(bank.entries.size());
  parallel_for(bank.entries.size(), workers, [&](std::size_t idx) {
    pooled[idx] = pool_time(compute_frontend(bank.entries[idx].audio, frontend.params));
  });
  std::vector<EmbeddingSet> sets(instruments);
  for (std::size_t i = 0; i < instruments; ++i) {
    EmbeddingSet& s = sets[i];
    s.representation_name = frontend.name;
    s.instrument_id = bank.instruments[i].id;
    s.note_midis = bank.note_midis;
    s.dim = pooled[i * notes].size();
    s.vectors.reserve(notes * s.dim);
    for (std::size_t k = 0; k < notes; ++k)
      for (double v : pooled[i * notes + k]) s.vectors.push_back(static_cast<float>(v));
  }
  return sets;
}

fs::path run_frontend(const StudyConfig& config) {
  config.validate();
  const StagePaths paths = stage_paths(config);
  require_stage(paths.synth, "synth", paths.synth_hash);
  const Bank bank = read_bank(paths.synth);
  for (const auto& f : config.frontends) {
    const fs::path dir = paths.frontend / f.name;
    fs::create_directories(dir);
    for (const auto& set : embed_bank(bank, f, config.workers))
      write_embeddings(set, dir / (set.instrument_id + ".aemb"));
    log("frontend: " + f.name + " (" + std::to_string(f.params.n_channels) + " channels) -> " +
        dir.string());
  }
  stamp_stage(paths.frontend, "frontend", paths.frontend_hash);
  return paths.frontend;
}

fs::path run_rdm(const StudyConfig& config) {
  config.validate();
  const StagePaths paths = stage_paths(config);
  std::vector<std::pair<std::string, fs::path>> sources;
  if (!config.frontends.empty()) {
    require_stage(paths.frontend, "frontend", paths.frontend_hash);
    for (const auto& f : config.frontends) sources.emplace_back(f.name, paths.frontend / f.name);
  }
  for (const auto& e : config.embedding_inputs) sources.emplace_back(e.name, e.dir);

  json listing = json::object();
  std::optional<std::vector<int>> shared_notes;
  for (const auto& [name, dir] : sources) {
    const Study study = read_study_dir(dir);
    if (shared_notes && *shared_notes != study.note_midis)
      fail(ErrorCode::invalid_argument, "representation " + name + " uses a different note set");
    shared_notes = study.note_midis;
    const fs::path out = paths.rdm / name;
    fs::create_directories(out);
    std::vector<Rdm> rdms(study.sets.size());
    std::vector<RdmDiagnostics> diags(study.sets.size());
    parallel_for(study.sets.size(), config.workers,
                 [&](std::size_t i) { rdms[i] = compute_rdm(study.sets[i], &diags[i]); });
    json ids = json::array();
    for (std::size_t i = 0; i < rdms.size(); ++i) {
      const auto& id = study.sets[i].instrument_id;
      if (diags[i].degenerate_pairs > 0)
        log("warning: " + name + "/" + id + " has " + std::to_string(diags[i].degenerate_pairs) +
            " zero-variance note pairs (distance set to 1)");
      write_rdm_csv(rdms[i], out / (id + ".csv"));
      ids.push_back(id);
    }
    write_rdm_csv(average_rdms(rdms), out / "mean.csv");
    listing[name] = ids;
    log("rdm: " + name + " (" + std::to_string(rdms.size()) + " instruments) -> " + out.string());
  }
  const fs::path models_dir = paths.rdm / "models";
  fs::create_directories(models_dir);
  for (auto kind : config.models)
    write_rdm_csv(build_model(kind, *shared_notes), models_dir / (model_file_name(kind) + ".csv"));
  stamp_stage(paths.rdm, "rdm", paths.rdm_hash, {{"representations", listing}});
  return paths.rdm;
}

std::vector<RepresentationRdms> load_rdm_stage(const StudyConfig& config) {
  const StagePaths paths = stage_paths(config);
  const json stage = require_stage(paths.rdm, "rdm", paths.rdm_hash);
  std::vector<RepresentationRdms> reps;
  for (const auto& name : config.representation_names()) {
    RepresentationRdms rep;
    rep.name = name;
    for (const auto& id : stage.at("representations").at(name)) {
      rep.instrument_ids.push_back(id.get<std::string>());
      rep.instrument_rdms.push_back(read_rdm_csv(paths.rdm / name / (rep.instrument_ids.back() + ".csv")));
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

fs::path run_rsa(const StudyConfig& config) {
  config.validate();
  const StagePaths paths = stage_paths(config);
  const auto reps = load_rdm_stage(config);
  std::vector<NamedModel> models;
  for (auto kind : config.models)
    models.push_back({model_file_name(kind),
                      read_rdm_csv(paths.rdm / "models" / (model_file_name(kind) + ".csv"))});
  const auto results = analyze_family(config.family, reps, models, config.alpha);
  fs::create_directories(paths.rsa);
  write_tables(results, paths.rsa / "results");
  stamp_stage(paths.rsa, "rsa", paths.rsa_hash);
  log("rsa: " + std::to_string(results.size()) + " results -> " + paths.rsa.string());
  return paths.rsa;
}

std::vector<RsaResult> load_rsa_stage(const StudyConfig& config) {
  const StagePaths paths = stage_paths(config);
  require_stage(paths.rsa, "rsa", paths.rsa_hash);
  const json j = read_json(paths.rsa / "results.json", ErrorCode::missing_stage);
  std::vector<RsaResult> results;
  for (const auto& rj : j.at("results")) {
    RsaResult r;
    r.family = rj.at("family").get<std::string>();
    r.representation_name = rj.at("representation").get<std::string>();
    r.model_name = rj.at("model").get<std::string>();
    r.instrument_ids = rj.at("instrument_ids").get<std::vector<std::string>>();
    for (const auto& v : rj.at("per_instrument_rho"))
      r.per_instrument_rho.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    r.mean_rho = opt_from(rj, "mean_rho");
    r.sem = opt_from(rj, "sem");
    r.t_vs_zero = opt_from(rj, "t_vs_zero");
    r.p_vs_zero = opt_from(rj, "p_vs_zero");
    r.sig_vs_zero = rj.at("sig_vs_zero").get<bool>();
    r.noise_lower = opt_from(rj, "noise_lower");
    r.noise_upper = opt_from(rj, "noise_upper");
    r.t_vs_ceiling = opt_from(rj, "t_vs_ceiling");
    r.p_vs_ceiling = opt_from(rj, "p_vs_ceiling");
    r.sig_below_ceiling = rj.at("sig_below_ceiling").get<bool>();
    r.alpha = rj.at("alpha").get<double>();
    r.n_comparisons = rj.at("n_comparisons").get<int>();
    results.push_back(std::move(r));
  }
  return results;
}

fs::path run_report(const StudyConfig& config) {
  config.validate();
  const StagePaths paths = stage_paths(config);
  const auto results = load_rsa_stage(config);
  const auto reps = load_rdm_stage(config);
  fs::create_directories(paths.report);

  FigureSpec heat;
  heat.kind = FigureKind::rdm_heatmap;
  heat.config_hash = paths.rdm_hash;
  std::size_t written = 0;
  for (const auto& rep : reps) {
    heat.title = rep.name + " RDM (mean over " + std::to_string(rep.instrument_rdms.size()) +
                 " instruments, normalized)";
    write_text(paths.report / ("rdm_" + rep.name + ".svg"),
               render_rdm_heatmap(normalize_rdm(average_rdms(rep.instrument_rdms)), heat));
    ++written;
  }
  for (auto kind : config.models) {
    const Rdm model = read_rdm_csv(paths.rdm / "models" / (model_file_name(kind) + ".csv"));
    heat.title = model_file_name(kind) + " model RDM";
    write_text(paths.report / ("rdm_model_" + model_file_name(kind) + ".svg"),
               render_rdm_heatmap(normalize_rdm(model), heat));
    ++written;
  }

  FigureSpec bars;
  bars.kind = FigureKind::rsa_bars;
  bars.title = "RSA: " + config.family;
  bars.width_px = std::max(480, 70 * static_cast<int>(results.size()) + 80);
  bars.height_px = 420;
  bars.config_hash = paths.rsa_hash;
  write_text(paths.report / ("rsa_" + config.family + ".svg"), render_rsa_bars(results, bars));
  ++written;
  stamp_stage(paths.report, "report", paths.report_hash);
  log("report: " + std::to_string(written) + " figures -> " + paths.report.string());
  return paths.report;
}

void run_all(const StudyConfig& config) {
  if (!config.frontends.empty()) {
    run_synth(config);
    run_frontend(config);
  }
  run_rdm(config);
  run_rsa(config);
  run_report(config);
}

}  // namespace chroma_rsa
