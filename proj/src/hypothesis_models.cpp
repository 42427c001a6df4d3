#include "chroma_rsa/hypothesis_models.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <vector>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::pitch_height: return "pitch_height";
    case ModelKind::chroma_binary: return "chroma_binary";
    case ModelKind::chroma_circular: return "chroma_circular";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "pitch_height") return ModelKind::pitch_height;
  if (name == "chroma_binary" || name == "chroma") return ModelKind::chroma_binary;
  if (name == "chroma_circular") return ModelKind::chroma_circular;
  fail(ErrorCode::invalid_argument, "unknown model '" + std::string(name) + "'");
}

Rdm pitch_height_model(std::span<const int> note_midis) {
  require(note_midis.size() >= 2, "model RDM needs at least 2 notes");
  std::set<int> uniq(note_midis.begin(), note_midis.end());
  require(uniq.size() == note_midis.size(), "pitch height model needs distinct notes");
  const double span = *uniq.rbegin() - *uniq.begin();
  Rdm r = Rdm::zeros({note_midis.begin(), note_midis.end()});
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      r(i, j) = std::abs(note_midis[i] - note_midis[j]) / span;
  return r;
}

Rdm chroma_model(std::span<const int> note_midis, ModelKind kind) {
  require(note_midis.size() >= 2, "model RDM needs at least 2 notes");
  require(kind != ModelKind::pitch_height, "chroma model needs a chroma kind");
  Rdm r = Rdm::zeros({note_midis.begin(), note_midis.end()});
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (i == j) continue;
      const int d = ((note_midis[i] - note_midis[j]) % 12 + 12) % 12;
      r(i, j) = kind == ModelKind::chroma_binary ? (d == 0 ? 0.0 : 1.0)
                                                 : std::min(d, 12 - d) / 6.0;
    }
  }
  return r;
}

Rdm build_model(ModelKind kind, std::span<const int> note_midis) {
  return kind == ModelKind::pitch_height ? pitch_height_model(note_midis)
                                         : chroma_model(note_midis, kind);
}

}  // namespace chroma_rsa
