#include "chroma_rsa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

namespace {

struct Rgb {
  int r, g, b;
};

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(const FigureSpec& spec, const std::string& kind) {
  require(spec.width_px > 0 && spec.height_px > 0, "figure size must be positive");
  const nlohmann::json meta = {{"generator", "chroma-rsa"},
                               {"figure", kind},
                               {"config_hash", spec.config_hash}};
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
       std::to_string(spec.width_px) + "\" height=\"" + std::to_string(spec.height_px) +
       "\" viewBox=\"0 0 " + std::to_string(spec.width_px) + " " +
       std::to_string(spec.height_px) + "\">\n";
  s += "<metadata>" + escape_xml(meta.dump()) + "</metadata>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(spec.width_px) + "\" height=\"" +
       std::to_string(spec.height_px) + "\" fill=\"#ffffff\"/>\n";
  s += "<text class=\"title\" x=\"" + px(spec.width_px / 2.0) +
       "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       escape_xml(spec.title) + "</text>\n";
  return s;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string palette_color(const std::string& palette, double value) {
  Rgb light, dark;
  if (palette == "blues") {
    light = {247, 251, 255};
    dark = {8, 48, 107};
  } else if (palette == "greys") {
    light = {250, 250, 250};
    dark = {20, 20, 20};
  } else {
    fail(ErrorCode::invalid_argument, "unknown palette '" + palette + "'");
  }
  const double t = std::clamp(value, 0.0, 1.0);
  auto lerp = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  return hex({lerp(light.r, dark.r), lerp(light.g, dark.g), lerp(light.b, dark.b)});
}

std::string render_rdm_heatmap(const Rdm& rdm, const FigureSpec& spec) {
  require(spec.kind == FigureKind::rdm_heatmap, "figure spec is not a heatmap");
  rdm.validate();
  const std::size_t n = rdm.size();
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        lo = std::min(lo, rdm(i, j));
        hi = std::max(hi, rdm(i, j));
      }
  if (std::abs(lo) > 1e-12 || std::abs(hi - 1.0) > 1e-12)
    fail(ErrorCode::invalid_argument, "heatmap input must be a normalized RDM");
  palette_color(spec.palette, 0.0);

  const double left = 48.0, top = 48.0, right = 16.0, bottom = 40.0;
  const double grid = std::min(spec.width_px - left - right, spec.height_px - top - bottom);
  require(grid > 0, "figure too small for the heatmap");
  const double cell = grid / static_cast<double>(n);
  const double font = std::clamp(cell * 0.8, 4.0, 10.0);

  std::string s = svg_open(spec, "rdm_heatmap");
  s += "<g class=\"cells\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s += "<rect class=\"cell\" data-row=\"" + std::to_string(i) + "\" data-col=\"" +
           std::to_string(j) + "\" x=\"" + px(left + j * cell) + "\" y=\"" + px(top + i * cell) +
           "\" width=\"" + px(cell) + "\" height=\"" + px(cell) + "\" fill=\"" +
           palette_color(spec.palette, rdm(i, j)) + "\"/>\n";
    }
  }
  s += "</g>\n<g class=\"octaves\" stroke=\"#d62728\" stroke-width=\"1\">\n";
  for (std::size_t k = 1; k < n; ++k) {
    if (rdm.labels[k] % 12 != 0) continue;
    const double at = k * cell;
    s += "<line x1=\"" + px(left + at) + "\" y1=\"" + px(top) + "\" x2=\"" + px(left + at) +
         "\" y2=\"" + px(top + grid) + "\"/>\n";
    s += "<line x1=\"" + px(left) + "\" y1=\"" + px(top + at) + "\" x2=\"" + px(left + grid) +
         "\" y2=\"" + px(top + at) + "\"/>\n";
  }
  s += "</g>\n<g class=\"labels\" font-family=\"sans-serif\" font-size=\"" + px(font) + "\">\n";
  for (std::size_t k = 0; k < n; ++k) {
    const std::string label = std::to_string(rdm.labels[k]);
    const double mid = (k + 0.5) * cell;
    s += "<text x=\"" + px(left - 4) + "\" y=\"" + px(top + mid + font / 3) +
         "\" text-anchor=\"end\">" + label + "</text>\n";
    s += "<text x=\"" + px(left + mid) + "\" y=\"" + px(top + grid + font + 4) +
         "\" text-anchor=\"middle\">" + label + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string render_rsa_bars(std::span<const RsaResult> results, const FigureSpec& spec) {
  require(spec.kind == FigureKind::rsa_bars, "figure spec is not a bar chart");
  require(!results.empty(), "bar chart needs at least one result");
  for (const auto& r : results) {
    require(r.family == results.front().family && r.alpha == results.front().alpha &&
                r.n_comparisons == results.front().n_comparisons,
            "bar chart results must share one comparison family");
  }

  std::vector<std::string> models;
  for (const auto& r : results)
    if (std::find(models.begin(), models.end(), r.model_name) == models.end())
      models.push_back(r.model_name);
  static const char* kModelColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};

  const double left = 56.0, right = 16.0, top = 48.0, bottom = 72.0;
  const double plot_w = spec.width_px - left - right;
  const double plot_h = spec.height_px - top - bottom;
  require(plot_w > 0 && plot_h > 0, "figure too small for the bar chart");
  auto y_of = [&](double rho) { return top + (1.0 - std::clamp(rho, -1.0, 1.0)) / 2.0 * plot_h; };
  const double slot = plot_w / static_cast<double>(results.size());
  const double bar_w = slot * 0.6;

  std::string s = svg_open(spec, "rsa_bars");
  s += "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + px(left) + "\" y1=\"" + px(top) + "\" x2=\"" + px(left) + "\" y2=\"" +
       px(top + plot_h) + "\"/>\n";
  s += "<line class=\"zero\" x1=\"" + px(left) + "\" y1=\"" + px(y_of(0.0)) + "\" x2=\"" +
       px(left + plot_w) + "\" y2=\"" + px(y_of(0.0)) + "\"/>\n</g>\n";
  s += "<text x=\"16\" y=\"" + px(top + plot_h / 2) +
       "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
       px(top + plot_h / 2) + ")\" text-anchor=\"middle\">Spearman rho</text>\n";

  for (std::size_t k = 0; k < results.size(); ++k) {
    const RsaResult& r = results[k];
    const double x0 = left + k * slot + (slot - bar_w) / 2.0;
    const double cx = x0 + bar_w / 2.0;
    const auto model_index = static_cast<std::size_t>(
        std::find(models.begin(), models.end(), r.model_name) - models.begin());
    s += "<g class=\"result\" data-representation=\"" + escape_xml(r.representation_name) +
         "\" data-model=\"" + escape_xml(r.model_name) + "\">\n";
    if (r.noise_lower && r.noise_upper) {
      const double y_hi = y_of(*r.noise_upper), y_lo = y_of(*r.noise_lower);
      s += "<rect class=\"ceiling\" x=\"" + px(x0 - slot * 0.15) + "\" y=\"" + px(y_hi) +
           "\" width=\"" + px(bar_w + slot * 0.3) + "\" height=\"" + px(y_lo - y_hi) +
           "\" fill=\"#bdbdbd\" fill-opacity=\"0.6\"/>\n";
      if (r.sig_below_ceiling) {
        // dewdrop: teardrop hanging from the band's lower edge
        s += "<path class=\"sig-ceiling\" d=\"M " + px(cx) + " " + px(y_lo) + " q 5 8 0 11 q -5 -3 0 -11 z\" fill=\"#636363\"/>\n";
      }
    }
    if (r.mean_rho) {
      const double y_mean = y_of(*r.mean_rho), y0 = y_of(0.0);
      s += "<rect class=\"bar\" x=\"" + px(x0) + "\" y=\"" + px(std::min(y_mean, y0)) +
           "\" width=\"" + px(bar_w) + "\" height=\"" + px(std::abs(y0 - y_mean)) +
           "\" fill=\"" + kModelColors[model_index % 4] + "\"/>\n";
      if (r.sem) {
        s += "<line class=\"sem\" x1=\"" + px(cx) + "\" y1=\"" + px(y_of(*r.mean_rho + *r.sem)) +
             "\" x2=\"" + px(cx) + "\" y2=\"" + px(y_of(*r.mean_rho - *r.sem)) +
             "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
      }
      if (r.sig_vs_zero) {
        // half-moon above (or below, for negative means) the bar end
        const double dir = *r.mean_rho >= 0 ? -1.0 : 1.0;
        const double gy = y_mean + dir * 10.0;
        s += "<path class=\"sig-zero\" d=\"M " + px(cx - 5) + " " + px(gy) + " A 5 5 0 0 " +
             (dir < 0 ? "1 " : "0 ") + px(cx + 5) + " " + px(gy) + " Z\" fill=\"#000000\"/>\n";
      }
      s += "<text class=\"value\" x=\"" + px(cx) + "\" y=\"" + px(top + plot_h + 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"8\">" +
           format_number(*r.mean_rho) + "</text>\n";
    }
    s += "<text class=\"label\" x=\"" + px(cx) + "\" y=\"" + px(top + plot_h + 28) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
         escape_xml(r.representation_name) + "</text>\n";
    s += "<text class=\"label\" x=\"" + px(cx) + "\" y=\"" + px(top + plot_h + 42) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
         escape_xml(r.model_name) + "</text>\n";
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string results_to_csv(std::span<const RsaResult> results) {
  std::string out =
      "family,representation,model,n_instruments,mean_rho,sem,t_vs_zero,p_vs_zero,"
      "sig_vs_zero,noise_lower,noise_upper,t_vs_ceiling,p_vs_ceiling,sig_below_ceiling,"
      "alpha,n_comparisons,instrument_ids,per_instrument_rho\n";
  for (const auto& r : results) {
    std::string ids, rhos;
    for (std::size_t i = 0; i < r.instrument_ids.size(); ++i)
      ids += (i ? ";" : "") + r.instrument_ids[i];
    for (std::size_t i = 0; i < r.per_instrument_rho.size(); ++i)
      rhos += (i ? ";" : "") + opt_number(r.per_instrument_rho[i]);
    out += csv_field(r.family) + ',' + csv_field(r.representation_name) + ',' +
           csv_field(r.model_name) + ',' + std::to_string(r.per_instrument_rho.size()) + ',' +
           opt_number(r.mean_rho) + ',' + opt_number(r.sem) + ',' + opt_number(r.t_vs_zero) +
           ',' + opt_number(r.p_vs_zero) + ',' + (r.sig_vs_zero ? "true" : "false") + ',' +
           opt_number(r.noise_lower) + ',' + opt_number(r.noise_upper) + ',' +
           opt_number(r.t_vs_ceiling) + ',' + opt_number(r.p_vs_ceiling) + ',' +
           (r.sig_below_ceiling ? "true" : "false") + ',' + format_number(r.alpha) + ',' +
           std::to_string(r.n_comparisons) + ',' + csv_field(ids) + ',' + csv_field(rhos) + '\n';
  }
  return out;
}

nlohmann::json results_to_json(std::span<const RsaResult> results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json rhos = nlohmann::json::array();
    for (const auto& v : r.per_instrument_rho) rhos.push_back(opt_json(v));
    arr.push_back({{"family", r.family},
                   {"representation", r.representation_name},
                   {"model", r.model_name},
                   {"instrument_ids", r.instrument_ids},
                   {"per_instrument_rho", rhos},
                   {"mean_rho", opt_json(r.mean_rho)},
                   {"sem", opt_json(r.sem)},
                   {"t_vs_zero", opt_json(r.t_vs_zero)},
                   {"p_vs_zero", opt_json(r.p_vs_zero)},
                   {"sig_vs_zero", r.sig_vs_zero},
                   {"noise_lower", opt_json(r.noise_lower)},
                   {"noise_upper", opt_json(r.noise_upper)},
                   {"t_vs_ceiling", opt_json(r.t_vs_ceiling)},
                   {"p_vs_ceiling", opt_json(r.p_vs_ceiling)},
                   {"sig_below_ceiling", r.sig_below_ceiling},
                   {"alpha", r.alpha},
                   {"n_comparisons", r.n_comparisons}});
  }
  return {{"schema_version", 1}, {"results", arr}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

void write_tables(std::span<const RsaResult> results, const std::filesystem::path& stem) {
  auto csv = stem;
  auto json = stem;
  csv += ".csv";
  json += ".json";
  write_text(csv, results_to_csv(results));
  write_text(json, results_to_json(results).dump(2) + "\n");
}

}  // namespace chroma_rsa
