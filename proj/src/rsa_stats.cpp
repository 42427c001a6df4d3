#include "chroma_rsa/rsa_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chroma_rsa/error.hpp"

namespace chroma_rsa {

std::vector<double> vectorize(const Rdm& rdm) {
  const std::size_t n = rdm.size();
  std::vector<double> v;
  v.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) v.push_back(rdm(i, j));
  return v;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double mean(std::span<const double> values) {
  require(!values.empty(), "mean of an empty list");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "correlation needs equal lengths");
  require(x.size() >= 2, "correlation needs at least 2 elements");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "spearman needs equal lengths");
  require(x.size() >= 3, "spearman needs at least 3 elements");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<std::optional<double>> compare_study(std::span<const Rdm> instrument_rdms,
                                                 const Rdm& model_rdm) {
  const auto model = vectorize(model_rdm);
  std::vector<std::optional<double>> rhos;
  rhos.reserve(instrument_rdms.size());
  for (const Rdm& r : instrument_rdms) {
    require(r.labels == model_rdm.labels, "instrument RDM labels differ from the model's");
    rhos.push_back(spearman(vectorize(r), model));
  }
  return rhos;
}

NoiseCeiling noise_ceiling(std::span<const Rdm> instrument_rdms) {
  const std::size_t n = instrument_rdms.size();
  require(n >= 2, "noise ceiling needs at least 2 RDMs");
  std::vector<std::vector<double>> vecs;
  vecs.reserve(n);
  for (const Rdm& r : instrument_rdms) {
    require(r.labels == instrument_rdms.front().labels, "RDM labels differ");
    vecs.push_back(vectorize(r));
  }
  const std::size_t len = vecs.front().size();
  std::vector<double> total(len, 0.0);
  for (const auto& v : vecs)
    for (std::size_t k = 0; k < len; ++k) total[k] += v[k];
  std::vector<double> all(len), others(len);
  for (std::size_t k = 0; k < len; ++k) all[k] = total[k] / static_cast<double>(n);

  double lower = 0.0, upper = 0.0;
  bool lower_ok = true, upper_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    // Sum the others directly rather than subtracting from the total so
    // the leave-one-out mean carries no cancellation error.
    std::fill(others.begin(), others.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        for (std::size_t k = 0; k < len; ++k) others[k] += vecs[j][k];
    for (double& v : others) v /= static_cast<double>(n - 1);
    const auto lo = spearman(vecs[i], others);
    const auto up = spearman(vecs[i], all);
    if (lo) lower += *lo; else lower_ok = false;
    if (up) upper += *up; else upper_ok = false;
  }
  NoiseCeiling c;
  if (lower_ok) c.lower = lower / static_cast<double>(n);
  if (upper_ok) c.upper = upper / static_cast<double>(n);
  return c;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete beta needs positive shape parameters");
  require(x >= 0.0 && x <= 1.0, "incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  require(df > 0.0, "t distribution needs positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  // Split on |t| so x never rounds to 1 for small t.
  double p;
  if (t2 < df)
    p = 1.0 - regularized_incomplete_beta(0.5, 0.5 * df, t2 / (df + t2));
  else
    p = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t2));
  return std::clamp(p, 0.0, 1.0);
}

std::optional<TTest> one_sample_ttest(std::span<const double> values, double mu) {
  require(values.size() >= 2, "t test needs at least 2 values");
  // A constant sample can leave rounding residue in the variance; test for it directly.
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return std::nullopt;
  const double n = static_cast<double>(values.size());
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) return std::nullopt;
  const double t = (m - mu) / (sd / std::sqrt(n));
  if (!std::isfinite(t)) return std::nullopt;
  return TTest{t, student_t_two_sided_p(t, n - 1.0), n - 1.0};
}

std::vector<bool> bonferroni(std::span<const double> p_values, double alpha, std::size_t m) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  if (m == 0) m = p_values.size();
  const double threshold = alpha / static_cast<double>(std::max<std::size_t>(m, 1));
  std::vector<bool> flags;
  flags.reserve(p_values.size());
  for (double p : p_values) flags.push_back(p < threshold);
  return flags;
}

double sem(std::span<const double> values) {
  require(values.size() >= 2, "SEM needs at least 2 values");
  const double n = static_cast<double>(values.size());
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

std::vector<RsaResult> analyze_family(const std::string& family,
                                      std::span<const RepresentationRdms> representations,
                                      std::span<const NamedModel> models, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(!representations.empty() && !models.empty(), "nothing to analyze");
  const auto m = representations.size() * models.size();
  std::vector<RsaResult> results;
  for (const auto& rep : representations) {
    require(rep.instrument_rdms.size() >= 2, "representation " + rep.name + " needs >= 2 RDMs");
    const NoiseCeiling ceiling = noise_ceiling(rep.instrument_rdms);
    for (const auto& model : models) {
      RsaResult r;
      r.family = family;
      r.representation_name = rep.name;
      r.model_name = model.name;
      r.instrument_ids = rep.instrument_ids;
      r.alpha = alpha;
      r.n_comparisons = static_cast<int>(m);
      r.noise_lower = ceiling.lower;
      r.noise_upper = ceiling.upper;
      r.per_instrument_rho = compare_study(rep.instrument_rdms, model.rdm);
      std::vector<double> rhos;
      for (const auto& v : r.per_instrument_rho)
        if (v) rhos.push_back(*v);
      if (!rhos.empty()) r.mean_rho = mean(rhos);
      if (rhos.size() >= 2) {
        r.sem = sem(rhos);
        if (const auto t = one_sample_ttest(rhos, 0.0)) {
          r.t_vs_zero = t->t;
          r.p_vs_zero = t->p_two_sided;
          r.sig_vs_zero = bonferroni(std::span(&t->p_two_sided, 1), alpha, m).front();
        }
        if (ceiling.lower) {
          if (const auto t = one_sample_ttest(rhos, *ceiling.lower)) {
            r.t_vs_ceiling = t->t;
            r.p_vs_ceiling = t->p_two_sided;
            r.sig_below_ceiling = bonferroni(std::span(&t->p_two_sided, 1), alpha, m).front() &&
                                  *r.mean_rho < *ceiling.lower;
          }
        }
      }
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace chroma_rsa
