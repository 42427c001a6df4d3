// chroma-rsa: stimulus synthesis, front-ends, RDMs, RSA statistics and
// figures, one subcommand per stage.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chroma_rsa/error.hpp"
#include "chroma_rsa/parallel.hpp"
#include "chroma_rsa/pipeline.hpp"

namespace {

using chroma_rsa::ErrorCode;

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kMissingStage = 3,
  kBadData = 4,
  kIo = 5,
  kInvalid = 6,
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return kConfig;
    case ErrorCode::missing_stage: return kMissingStage;
    case ErrorCode::bad_magic:
    case ErrorCode::version_mismatch:
    case ErrorCode::length_mismatch:
    case ErrorCode::non_finite:
    case ErrorCode::unsupported_format:
    case ErrorCode::malformed_file: return kBadData;
    case ErrorCode::io: return kIo;
    case ErrorCode::invalid_argument:
    case ErrorCode::degenerate: return kInvalid;
  }
  return kUnexpected;
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<double> alpha;
};

chroma_rsa::StudyConfig resolve(const Options& o) {
  auto config = o.config_path.empty() ? chroma_rsa::StudyConfig::defaults()
                                      : chroma_rsa::load_config(o.config_path);
  if (o.seed) config.seed = o.seed;
  if (o.out) config.output_dir = *o.out;
  if (o.alpha) config.alpha = *o.alpha;
  if (o.workers) {
    config.workers = *o.workers;
  } else if (const char* env = std::getenv("CHROMA_RSA_WORKERS")) {
    try {
      config.workers = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      chroma_rsa::fail(ErrorCode::config, std::string("CHROMA_RSA_WORKERS is not a number: ") + env);
    }
  } else {
    config.workers = chroma_rsa::default_workers();
  }
  if (config.workers == 0) config.workers = chroma_rsa::default_workers();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representational similarity analysis of pitch height and chroma in audio representations"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "Study configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "Output directory (overrides config)");
    cmd->add_option("--workers", opts.workers, "Worker threads (default: CHROMA_RSA_WORKERS or CPU count)");
    cmd->add_option("--alpha", opts.alpha, "Significance level before Bonferroni correction");
  };

  struct Stage {
    const char* name;
    const char* help;
    void (*run)(const chroma_rsa::StudyConfig&);
  };
  const Stage stages[] = {
      {"synth", "Synthesize the stimulus bank and manifest",
       [](const chroma_rsa::StudyConfig& c) { chroma_rsa::run_synth(c); }},
      {"frontend", "Run the front-ends over the bank and write interchange files",
       [](const chroma_rsa::StudyConfig& c) { chroma_rsa::run_frontend(c); }},
      {"rdm", "Build per-instrument, averaged and model RDMs",
       [](const chroma_rsa::StudyConfig& c) { chroma_rsa::run_rdm(c); }},
      {"rsa", "Compare RDMs to the models; noise ceilings and t tests",
       [](const chroma_rsa::StudyConfig& c) { chroma_rsa::run_rsa(c); }},
      {"report", "Render RDM heatmaps and RSA bar charts",
       [](const chroma_rsa::StudyConfig& c) { chroma_rsa::run_report(c); }},
      {"all", "synth -> frontend -> rdm -> rsa -> report",
       [](const chroma_rsa::StudyConfig& c) { chroma_rsa::run_all(c); }},
  };

  const Stage* selected = nullptr;
  for (const auto& stage : stages) {
    CLI::App* cmd = app.add_subcommand(stage.name, stage.help);
    add_common(cmd);
    auto* seed = cmd->add_option("--seed", opts.seed, "Random seed (overrides config)");
    if (std::string(stage.name) == "all") seed->required();
    cmd->callback([&selected, &stage] { selected = &stage; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    selected->run(resolve(opts));
  } catch (const chroma_rsa::Error& e) {
    std::cerr << "chroma-rsa " << selected->name << ": " << chroma_rsa::to_string(e.code())
              << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "chroma-rsa " << selected->name << ": " << e.what() << '\n';
    return kUnexpected;
  }
  return kOk;
}
