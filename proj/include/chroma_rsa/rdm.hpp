#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chroma_rsa/interchange.hpp"

namespace chroma_rsa {

/// Square symmetric dissimilarity matrix over notes, zero diagonal.
struct Rdm {
  std::vector<int> labels;
  std::vector<double> values;  // n x n row-major

  std::size_t size() const { return labels.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * size() + j]; }

  static Rdm zeros(std::vector<int> labels);

  /// Symmetric within 1e-12, zero diagonal, finite.
  void validate() const;
};

/// Result of one correlation distance; `degenerate` marks a zero-variance
/// input, in which case the distance is 1.
struct Distance {
  double value;
  bool degenerate;
};

/// 1 - |pearson(a, b)|, clamped to [0, 1].
Distance correlation_distance(std::span<const double> a, std::span<const double> b);

struct RdmDiagnostics {
  std::size_t degenerate_pairs = 0;
};

/// Correlation-distance RDM over the notes of one embedding set. Rows are
/// widened to 64-bit before any arithmetic.
Rdm compute_rdm(const EmbeddingSet& set, RdmDiagnostics* diagnostics = nullptr);

Rdm average_rdms(std::span<const Rdm> rdms);

/// Min-max scales off-diagonal entries onto [0, 1] for display; the
/// statistics path always uses unnormalized RDMs.
Rdm normalize_rdm(const Rdm& rdm);

/// Header line of n labels, then n rows of n values.
std::string rdm_to_csv(const Rdm& rdm);
Rdm rdm_from_csv(const std::string& text);

void write_rdm_csv(const Rdm& rdm, const std::filesystem::path& path);
Rdm read_rdm_csv(const std::filesystem::path& path);

}  // namespace chroma_rsa
