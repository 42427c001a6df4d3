#pragma once

#include <span>
#include <string_view>

#include "chroma_rsa/rdm.hpp"

namespace chroma_rsa {

enum class ModelKind { pitch_height, chroma_binary, chroma_circular };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);

/// |midi_i - midi_j| scaled so the widest pair is 1.
Rdm pitch_height_model(std::span<const int> note_midis);

/// chroma_binary: 0 for the same pitch class, 1 otherwise.
/// chroma_circular: shortest distance around the 12-step chroma circle / 6.
Rdm chroma_model(std::span<const int> note_midis, ModelKind kind = ModelKind::chroma_binary);

Rdm build_model(ModelKind kind, std::span<const int> note_midis);

}  // namespace chroma_rsa
