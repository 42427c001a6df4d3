#include "chroma_rsa/interchange.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "payload needs IEEE-754 floats");

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      fail(ErrorCode::length_mismatch,
           std::string("embedding file truncated while reading ") + what);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void EmbeddingSet::validate() const {
  require(!note_midis.empty(), "embedding set has no notes");
  require(dim >= 1, "embedding dim must be at least 1");
  require(vectors.size() == note_midis.size() * dim, "embedding payload does not match notes x dim");
  for (std::size_t i = 0; i < note_midis.size(); ++i) {
    require(note_midis[i] >= 0 && note_midis[i] <= 0xffff, "MIDI number out of range");
    if (i > 0) require(note_midis[i] > note_midis[i - 1], "note MIDI numbers must be strictly ascending");
  }
  for (float v : vectors)
    if (!std::isfinite(v)) fail(ErrorCode::non_finite, "embedding contains non-finite values");
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  set.validate();
  std::vector<std::uint8_t> out;
  out.reserve(32 + set.representation_name.size() + set.instrument_id.size() +
              2 * set.notes() + 4 * set.vectors.size());
  out.insert(out.end(), std::begin(kEmbeddingMagic), std::end(kEmbeddingMagic));
  put_u32(out, kEmbeddingVersion);
  put_string(out, set.representation_name);
  put_string(out, set.instrument_id);
  put_u32(out, static_cast<std::uint32_t>(set.notes()));
  put_u32(out, static_cast<std::uint32_t>(set.dim));
  for (int m : set.note_midis) put_u16(out, static_cast<std::uint16_t>(m));
  for (float v : set.vectors) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0)
    fail(ErrorCode::bad_magic, "not an embedding file (bad magic)");
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32("version");
  if (version != kEmbeddingVersion)
    fail(ErrorCode::version_mismatch,
         "unsupported embedding file version " + std::to_string(version));
  EmbeddingSet set;
  set.representation_name = r.str("representation name");
  set.instrument_id = r.str("instrument id");
  const std::uint32_t count = r.u32("note count");
  const std::uint32_t dim = r.u32("dim");
  const std::uint64_t expected = 2ull * count + 4ull * count * dim;
  if (r.remaining() != expected)
    fail(ErrorCode::length_mismatch,
         "embedding payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
             std::to_string(expected));
  set.dim = dim;
  set.note_midis.resize(count);
  for (auto& m : set.note_midis) m = r.u16("notes");
  set.vectors.resize(static_cast<std::size_t>(count) * dim);
  for (auto& v : set.vectors) v = std::bit_cast<float>(r.u32("payload"));
  try {
    set.validate();
  } catch (const Error& e) {
    // Shape and ordering problems in a file are bad data, not bad arguments.
    if (e.code() != ErrorCode::invalid_argument) throw;
    fail(ErrorCode::malformed_file, std::string("malformed embedding file: ") + e.what());
  }
  return set;
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_embeddings(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

Study validate_study(std::vector<EmbeddingSet> sets) {
  require(sets.size() >= 2, "a study needs at least 2 embedding sets");
  Study study;
  study.representation_name = sets.front().representation_name;
  study.note_midis = sets.front().note_midis;
  study.dim = sets.front().dim;
  std::set<std::string> ids;
  for (const auto& s : sets) {
    s.validate();
    require(s.representation_name == study.representation_name,
            "study mixes representations '" + study.representation_name + "' and '" +
                s.representation_name + "'");
    require(s.dim == study.dim, "embedding dim differs for instrument " + s.instrument_id);
    require(s.note_midis == study.note_midis, "note ordering differs for instrument " + s.instrument_id);
    require(ids.insert(s.instrument_id).second, "duplicate instrument " + s.instrument_id);
  }
  study.sets = std::move(sets);
  return study;
}

Study read_study_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(ErrorCode::missing_stage, "no embedding directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".aemb") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<EmbeddingSet> sets;
  sets.reserve(files.size());
  for (const auto& f : files) sets.push_back(read_embeddings(f));
  return validate_study(std::move(sets));
}

}  // namespace chroma_rsa
