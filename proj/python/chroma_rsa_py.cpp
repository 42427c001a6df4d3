// Python bindings for the chroma_rsa core: interchange files, front-ends,
// RDMs, hypothesis models and the RSA statistics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "chroma_rsa/error.hpp"
#include "chroma_rsa/frontends.hpp"
#include "chroma_rsa/hypothesis_models.hpp"
#include "chroma_rsa/interchange.hpp"
#include "chroma_rsa/rdm.hpp"
#include "chroma_rsa/rsa_stats.hpp"
#include "chroma_rsa/stimulus_bank.hpp"

namespace py = pybind11;
using namespace chroma_rsa;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> rdm_array(const Rdm& r) {
  py::array_t<double> out({r.size(), r.size()});
  std::copy(r.values.begin(), r.values.end(), out.mutable_data());
  return out;
}

Rdm rdm_from(const DoubleArray& a, std::vector<int> labels) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1))
    throw py::value_error("RDM must be a square 2-d array");
  if (labels.empty()) {
    labels.resize(static_cast<std::size_t>(a.shape(0)));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  }
  Rdm r = Rdm::zeros(std::move(labels));
  if (r.size() != static_cast<std::size_t>(a.shape(0)))
    throw py::value_error("label count does not match the RDM size");
  std::copy(a.data(), a.data() + a.size(), r.values.begin());
  return r;
}

EmbeddingSet embedding_set(const std::string& representation, const std::string& instrument,
                           std::vector<int> note_midis, const FloatArray& vectors) {
  if (vectors.ndim() != 2) throw py::value_error("vectors must be a 2-d array (notes x dim)");
  EmbeddingSet s;
  s.representation_name = representation;
  s.instrument_id = instrument;
  s.note_midis = std::move(note_midis);
  s.dim = static_cast<std::size_t>(vectors.shape(1));
  s.vectors.assign(vectors.data(), vectors.data() + vectors.size());
  if (static_cast<std::size_t>(vectors.shape(0)) != s.note_midis.size())
    throw py::value_error("one vector row per note is required");
  return s;
}

py::dict embedding_dict(const EmbeddingSet& s) {
  py::array_t<float> vectors({s.notes(), s.dim});
  std::copy(s.vectors.begin(), s.vectors.end(), vectors.mutable_data());
  py::dict d;
  d["representation_name"] = s.representation_name;
  d["instrument_id"] = s.instrument_id;
  d["note_midis"] = s.note_midis;
  d["vectors"] = vectors;
  return d;
}

std::vector<double> as_vector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Representational similarity analysis of pitch height and chroma";

  py::enum_<ErrorCode>(m, "ErrorCode")
      .value("invalid_argument", ErrorCode::invalid_argument)
      .value("bad_magic", ErrorCode::bad_magic)
      .value("version_mismatch", ErrorCode::version_mismatch)
      .value("length_mismatch", ErrorCode::length_mismatch)
      .value("non_finite", ErrorCode::non_finite)
      .value("unsupported_format", ErrorCode::unsupported_format)
      .value("malformed_file", ErrorCode::malformed_file)
      .value("degenerate", ErrorCode::degenerate)
      .value("io", ErrorCode::io)
      .value("config", ErrorCode::config)
      .value("missing_stage", ErrorCode::missing_stage);

  // Raised for every core error; `.code` carries the ErrorCode.
  static py::exception<Error> error_type(m, "ChromaRsaError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object cls = py::reinterpret_borrow<py::object>(error_type);
      py::object err = cls(py::str(e.what()));
      err.attr("code") = py::cast(e.code());
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  m.def("midi_to_freq", &midi_to_freq, py::arg("midi"));

  m.def(
      "synthesize_note",
      [](int midi, std::vector<double> harmonic_amplitudes, double duration_s, int sample_rate_hz,
         std::uint64_t seed, double attack_s, double decay_s, double sustain_level,
         double release_s, double damping_per_s) {
        TimbreProfile t;
        t.harmonic_amplitudes = std::move(harmonic_amplitudes);
        t.attack_s = attack_s;
        t.decay_s = decay_s;
        t.sustain_level = sustain_level;
        t.release_s = release_s;
        t.damping_per_s = damping_per_s;
        const auto audio = synthesize_note({midi, "py", Family::flute}, t, duration_s, sample_rate_hz, seed);
        return py::array_t<double>(static_cast<py::ssize_t>(audio.samples.size()), audio.samples.data());
      },
      py::arg("midi"), py::arg("harmonic_amplitudes"), py::arg("duration_s") = 1.0,
      py::arg("sample_rate_hz") = 16000, py::arg("seed") = 0, py::arg("attack_s") = 0.01,
      py::arg("decay_s") = 0.1, py::arg("sustain_level") = 0.7, py::arg("release_s") = 0.05,
      py::arg("damping_per_s") = 0.0);

  m.def(
      "frontend",
      [](const DoubleArray& samples, int sample_rate_hz, const std::string& kind, int n_channels) {
        AudioBuffer audio{as_vector(samples), sample_rate_hz};
        FrontendParams p;
        const auto k = frontend_kind_from_string(kind);
        p = k == FrontendKind::mel   ? FrontendParams::mel_default(sample_rate_hz)
            : k == FrontendKind::cqt ? FrontendParams::cqt_default(sample_rate_hz)
                                     : FrontendParams::cochleagram_default(sample_rate_hz);
        if (n_channels > 0) p.n_channels = n_channels;
        const auto tf = compute_frontend(audio, p);
        py::array_t<double> out({tf.channels, tf.frames});
        std::copy(tf.values.begin(), tf.values.end(), out.mutable_data());
        return py::make_tuple(out, tf.channel_freqs_hz, tf.frame_rate_hz);
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("kind"), py::arg("n_channels") = 0,
      "Returns (channels x frames matrix, channel center frequencies, frame rate).");

  m.def(
      "write_embeddings",
      [](const std::filesystem::path& path, const std::string& representation_name,
         const std::string& instrument_id, std::vector<int> note_midis, const FloatArray& vectors) {
        write_embeddings(embedding_set(representation_name, instrument_id, std::move(note_midis), vectors), path);
      },
      py::arg("path"), py::arg("representation_name"), py::arg("instrument_id"),
      py::arg("note_midis"), py::arg("vectors"));
  m.def(
      "read_embeddings", [](const std::filesystem::path& path) { return embedding_dict(read_embeddings(path)); },
      py::arg("path"));

  m.def(
      "compute_rdm",
      [](const FloatArray& vectors, std::vector<int> note_midis) {
        if (note_midis.empty() && vectors.ndim() == 2)
          for (py::ssize_t i = 0; i < vectors.shape(0); ++i) note_midis.push_back(static_cast<int>(i));
        return rdm_array(compute_rdm(embedding_set("py", "py", std::move(note_midis), vectors)));
      },
      py::arg("vectors"), py::arg("note_midis") = std::vector<int>{});
  m.def(
      "model_rdm",
      [](const std::string& kind, const std::vector<int>& note_midis) {
        return rdm_array(build_model(model_kind_from_string(kind), note_midis));
      },
      py::arg("kind"), py::arg("note_midis"));

  m.def(
      "spearman", [](const DoubleArray& x, const DoubleArray& y) { return spearman(as_vector(x), as_vector(y)); },
      py::arg("x"), py::arg("y"));
  m.def(
      "compare",
      [](const DoubleArray& rdm, const DoubleArray& model) {
        return spearman(vectorize(rdm_from(rdm, {})), vectorize(rdm_from(model, {})));
      },
      py::arg("rdm"), py::arg("model"), "Spearman rho between the upper triangles of two RDMs.");
  m.def(
      "noise_ceiling",
      [](const std::vector<DoubleArray>& rdms) {
        std::vector<Rdm> list;
        for (const auto& a : rdms) list.push_back(rdm_from(a, {}));
        const auto nc = noise_ceiling(list);
        return py::make_tuple(nc.lower, nc.upper);
      },
      py::arg("rdms"), "Returns (lower, upper); None where undefined.");
  m.def(
      "one_sample_ttest",
      [](const DoubleArray& values, double mu) -> std::optional<py::tuple> {
        const auto t = one_sample_ttest(as_vector(values), mu);
        if (!t) return std::nullopt;
        return py::make_tuple(t->t, t->p_two_sided, t->df);
      },
      py::arg("values"), py::arg("mu") = 0.0, "Returns (t, two-sided p, df) or None.");
}
