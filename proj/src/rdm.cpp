#include "chroma_rsa/rdm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

Rdm Rdm::zeros(std::vector<int> labels) {
  Rdm r;
  const std::size_t n = labels.size();
  r.labels = std::move(labels);
  r.values.assign(n * n, 0.0);
  return r;
}

void Rdm::validate() const {
  const std::size_t n = size();
  require(n >= 2, "RDM needs at least 2 items");
  require(values.size() == n * n, "RDM values do not match label count");
  for (std::size_t i = 0; i < n; ++i) {
    require((*this)(i, i) == 0.0, "RDM diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite((*this)(i, j))) fail(ErrorCode::non_finite, "RDM has non-finite values");
      require(std::abs((*this)(i, j) - (*this)(j, i)) <= 1e-12, "RDM is not symmetric");
    }
  }
}

namespace {

// Sums in value order with compensation, so the result depends only on the
// multiset of terms: permuted inputs give bit-identical distances and
// mathematically tied distances stay tied for the rank statistics.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0, carry = 0.0;
  for (double t : terms) {
    const double next = sum + t;
    carry += std::abs(sum) >= std::abs(t) ? (sum - next) + t : (t - next) + sum;
    sum = next;
  }
  return sum + carry;
}

bool constant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

}  // namespace

Distance correlation_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "correlation distance needs equal lengths");
  require(a.size() >= 2, "correlation distance needs at least 2 elements");
  if (constant(a) || constant(b)) return {1.0, true};
  const std::size_t n = a.size();
  std::vector<double> terms(a.begin(), a.end());
  const double ma = ordered_sum(terms) / static_cast<double>(n);
  terms.assign(b.begin(), b.end());
  const double mb = ordered_sum(terms) / static_cast<double>(n);
  std::vector<double> ab(n), aa(n), bb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    ab[i] = da * db;
    aa[i] = da * da;
    bb[i] = db * db;
  }
  const double sab = ordered_sum(ab), saa = ordered_sum(aa), sbb = ordered_sum(bb);
  if (!(saa > 0.0) || !(sbb > 0.0)) return {1.0, true};
  const double r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  return {1.0 - std::abs(r), false};
}

Rdm compute_rdm(const EmbeddingSet& set, RdmDiagnostics* diagnostics) {
  set.validate();
  const std::size_t n = set.notes();
  require(n >= 2, "RDM needs at least 2 notes");
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = set.row(i);
    rows[i].assign(r.begin(), r.end());
  }
  if (set.dim < 2) {
    // Every pair is degenerate in one dimension; keep the soft-failure rule.
    Rdm out = Rdm::zeros(set.note_midis);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) out(i, j) = 1.0;
    if (diagnostics) diagnostics->degenerate_pairs += n * (n - 1) / 2;
    return out;
  }
  Rdm out = Rdm::zeros(set.note_midis);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Distance d = correlation_distance(rows[i], rows[j]);
      out(i, j) = out(j, i) = d.value;
      if (d.degenerate && diagnostics) ++diagnostics->degenerate_pairs;
    }
  }
  return out;
}

Rdm average_rdms(std::span<const Rdm> rdms) {
  require(!rdms.empty(), "cannot average an empty RDM list");
  Rdm out = Rdm::zeros(rdms.front().labels);
  for (const Rdm& r : rdms) {
    require(r.labels == out.labels, "RDM labels differ; cannot average");
    require(r.values.size() == out.values.size(), "RDM shapes differ; cannot average");
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += r.values[k];
  }
  const auto count = static_cast<double>(rdms.size());
  for (double& v : out.values) v /= count;
  return out;
}

Rdm normalize_rdm(const Rdm& rdm) {
  rdm.validate();
  const std::size_t n = rdm.size();
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        lo = std::min(lo, rdm(i, j));
        hi = std::max(hi, rdm(i, j));
      }
  if (!(hi > lo)) fail(ErrorCode::degenerate, "RDM off-diagonal entries are constant; cannot normalize");
  Rdm out = rdm;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = i == j ? 0.0 : (rdm(i, j) - lo) / (hi - lo);
  return out;
}

std::string rdm_to_csv(const Rdm& rdm) {
  std::string out;
  const std::size_t n = rdm.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ',';
    out += std::to_string(rdm.labels[i]);
  }
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", rdm(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Rdm rdm_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto number = [](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') fail(ErrorCode::malformed_file, "bad RDM cell '" + s + "'");
    return v;
  };
  if (!std::getline(in, line)) fail(ErrorCode::malformed_file, "empty RDM CSV");
  std::vector<int> labels;
  for (const auto& c : split(line)) labels.push_back(static_cast<int>(number(c)));
  Rdm r = Rdm::zeros(labels);
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::malformed_file, "RDM CSV has too few rows");
    const auto cells = split(line);
    if (cells.size() != n) fail(ErrorCode::malformed_file, "RDM CSV row has wrong width");
    for (std::size_t j = 0; j < n; ++j) r(i, j) = number(cells[j]);
  }
  r.validate();
  return r;
}

void write_rdm_csv(const Rdm& rdm, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << rdm_to_csv(rdm);
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

Rdm read_rdm_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::missing_stage, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return rdm_from_csv(ss.str());
}

}  // namespace chroma_rsa
