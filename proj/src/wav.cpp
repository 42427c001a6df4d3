#include "chroma_rsa/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

namespace {

constexpr double kFullScale = 32767.0;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[at + i];
  return v;
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer) {
  buffer.validate();
  const auto data_bytes = static_cast<std::uint32_t>(buffer.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : buffer.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * kFullScale));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

AudioBuffer decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || !tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE"))
    fail(ErrorCode::malformed_file, "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(b, pos, "fmt ")) {
      if (size < 16 || body + 16 > b.size()) fail(ErrorCode::malformed_file, "truncated fmt chunk");
      format = get_u16(b, body);
      channels = get_u16(b, body + 2);
      rate = get_u32(b, body + 4);
      bits = get_u16(b, body + 14);
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      if (!have_fmt) fail(ErrorCode::malformed_file, "data chunk before fmt chunk");
      if (format != 1) fail(ErrorCode::unsupported_format, "only PCM WAV is supported");
      if (channels != 1)
        fail(ErrorCode::unsupported_format,
             "unsupported channel count " + std::to_string(channels) + " (mono only)");
      if (bits != 16)
        fail(ErrorCode::unsupported_format,
             "unsupported bit depth " + std::to_string(bits) + " (16-bit only)");
      if (body + size > b.size() || size % 2 != 0)
        fail(ErrorCode::malformed_file, "truncated data chunk");
      AudioBuffer out;
      out.sample_rate_hz = static_cast<int>(rate);
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto q = static_cast<std::int16_t>(get_u16(b, body + 2 * i));
        out.samples[i] = std::max(-1.0, q / kFullScale);
      }
      if (out.samples.empty()) fail(ErrorCode::malformed_file, "empty data chunk");
      if (out.sample_rate_hz <= 0) fail(ErrorCode::malformed_file, "invalid sample rate");
      return out;
    }
    pos = body + size + (size & 1u);
  }
  fail(ErrorCode::malformed_file, "no data chunk (file truncated?)");
}

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path) {
  const auto bytes = encode_wav(buffer);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

}  // namespace chroma_rsa
