#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chroma_rsa {

/// Per-note embedding vectors of one instrument under one representation.
/// `vectors` is notes x dim, row-major, stored at the 32-bit precision of the
/// interchange payload.
struct EmbeddingSet {
  std::string representation_name;
  std::string instrument_id;
  std::vector<int> note_midis;
  std::size_t dim = 0;
  std::vector<float> vectors;

  std::size_t notes() const { return note_midis.size(); }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }

  /// Throws on any invariant violation: empty notes, non-ascending MIDI,
  /// dim < 1, shape mismatch, non-finite values.
  void validate() const;

  bool operator==(const EmbeddingSet&) const = default;
};

/// Wire format (all integers little-endian):
///   "AEMB" | u32 version | u32 len + representation_name bytes
///   | u32 len + instrument_id bytes | u32 note count | u32 dim
///   | u16[count] MIDI numbers | f32[count * dim] row-major payload
inline constexpr char kEmbeddingMagic[4] = {'A', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes);

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

/// Embedding sets of one representation across instruments, sharing dim and
/// note ordering, with distinct instrument ids. Order is preserved.
struct Study {
  std::string representation_name;
  std::vector<int> note_midis;
  std::size_t dim = 0;
  std::vector<EmbeddingSet> sets;
};

Study validate_study(std::vector<EmbeddingSet> sets);

/// Reads every *.aemb file in `dir` (sorted by file name) into a study.
Study read_study_dir(const std::filesystem::path& dir);

}  // namespace chroma_rsa
