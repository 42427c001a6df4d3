#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chroma_rsa/frontends.hpp"
#include "chroma_rsa/hypothesis_models.hpp"
#include "chroma_rsa/rsa_stats.hpp"
#include "chroma_rsa/stimulus_bank.hpp"

namespace chroma_rsa {

struct FrontendConfig {
  std::string name;
  FrontendParams params;
};

/// Directory of externally produced interchange files, one per instrument.
struct EmbeddingInput {
  std::string name;
  std::filesystem::path dir;
};

struct StudyConfig {
  BankConfig bank;
  std::vector<FrontendConfig> frontends;
  std::vector<EmbeddingInput> embedding_inputs;
  std::vector<ModelKind> models = {ModelKind::pitch_height, ModelKind::chroma_binary};
  double alpha = 0.01;
  std::string family = "baselines";
  std::filesystem::path output_dir = "out";
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;

  /// Full study: 30 instruments, octaves 4-6, mel + CQT + cochleagram.
  static StudyConfig defaults();
  static StudyConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  /// Representation names in analysis order: front-ends, then external inputs.
  std::vector<std::string> representation_names() const;
};

StudyConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string content_hash(const nlohmann::json& j);

/// Stage output directories. Each name carries a hash of everything that
/// stage depends on, chained through earlier stages, so outputs from
/// different configurations never mix.
struct StagePaths {
  std::filesystem::path synth, frontend, rdm, rsa, report;
  std::string synth_hash, frontend_hash, rdm_hash, rsa_hash, report_hash;
};

StagePaths stage_paths(const StudyConfig& config);

std::filesystem::path run_synth(const StudyConfig& config);
std::filesystem::path run_frontend(const StudyConfig& config);
std::filesystem::path run_rdm(const StudyConfig& config);
std::filesystem::path run_rsa(const StudyConfig& config);
std::filesystem::path run_report(const StudyConfig& config);
void run_all(const StudyConfig& config);

/// Loads the per-instrument RDMs written by run_rdm for every representation.
std::vector<RepresentationRdms> load_rdm_stage(const StudyConfig& config);

/// Loads RsaResults written by run_rsa.
std::vector<RsaResult> load_rsa_stage(const StudyConfig& config);

/// Embeds every note of a bank with a front-end: one set per instrument.
std::vector<EmbeddingSet> embed_bank(const Bank& bank, const FrontendConfig& frontend,
                                     unsigned workers);

}  // namespace chroma_rsa
