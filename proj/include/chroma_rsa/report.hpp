#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "chroma_rsa/rdm.hpp"
#include "chroma_rsa/rsa_stats.hpp"

namespace chroma_rsa {

enum class FigureKind { rdm_heatmap, rsa_bars };

struct FigureSpec {
  FigureKind kind = FigureKind::rdm_heatmap;
  std::string title;
  std::string palette = "blues";  // "blues" or "greys"
  int width_px = 640;
  int height_px = 640;
  /// Recorded in the SVG metadata block.
  std::string config_hash;
};

/// Color of a normalized value under a palette, as "#rrggbb". 0 is the
/// lightest color, 1 the darkest.
std::string palette_color(const std::string& palette, double value);

/// SVG 1.1 heatmap of a normalized RDM (off-diagonal range exactly [0, 1]).
/// Cells carry data-row/data-col attributes; octave boundaries are ruled.
std::string render_rdm_heatmap(const Rdm& rdm, const FigureSpec& spec);

/// SVG 1.1 bar chart: one bar per result at mean rho with SEM whiskers, a
/// grey noise-ceiling band, a half-moon glyph when the mean differs from
/// zero and a dewdrop glyph when it is below the ceiling.
std::string render_rsa_bars(std::span<const RsaResult> results, const FigureSpec& spec);

/// Number formatting shared by tables and figures.
std::string format_number(double v);

std::string results_to_csv(std::span<const RsaResult> results);
nlohmann::json results_to_json(std::span<const RsaResult> results);

/// Writes <stem>.csv and <stem>.json.
void write_tables(std::span<const RsaResult> results, const std::filesystem::path& stem);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace chroma_rsa
