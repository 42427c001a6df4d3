#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chroma_rsa/stimulus_bank.hpp"

namespace chroma_rsa {

/// RIFF/WAVE, 16-bit PCM, mono, little-endian.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path);
AudioBuffer read_wav(const std::filesystem::path& path);

}  // namespace chroma_rsa
