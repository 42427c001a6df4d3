#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "chroma_rsa/error.hpp"
#include "chroma_rsa/hypothesis_models.hpp"
#include "chroma_rsa/rsa_stats.hpp"
#include "oracles.hpp"

using namespace chroma_rsa;

namespace {

Rdm random_rdm(std::mt19937_64& rng, std::size_t n) {
  std::vector<int> labels(n);
  std::iota(labels.begin(), labels.end(), 60);
  Rdm r = Rdm::zeros(labels);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) r(i, j) = r(j, i) = u(rng);
  return r;
}

oracle::Matrix to_matrix(const Rdm& r) {
  oracle::Matrix m(r.size(), std::vector<double>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) m[i][j] = r(i, j);
  return m;
}

struct FrozenP {
  double t, df, p;
};

// Reference two-sided p-values computed at 50-digit precision.
const FrozenP kFrozen[] = {
    {0.25, 4, 0.81490201145918122692},
    {1.0, 4, 0.37390096630005888501},
    {2.5, 4, 0.066766544811988145039},
    {4.242640687119285, 4, 0.013235599563682691067},
    {7.0, 4, 0.0021921298066929389916},
    {15.0, 4, 0.0001150870843292216449},
    {0.25, 29, 0.80434988308111724251},
    {1.0, 29, 0.32558198801619354111},
    {2.5, 29, 0.018325344338426076914},
    {4.242640687119285, 29, 0.0002062716501423592926},
    {7.0, 29, 1.0700271530221398112e-7},
    {15.0, 29, 3.3590540615815952991e-15},
};

}  // namespace

TEST_CASE("vectorize") {
  Rdm r = Rdm::zeros({1, 2, 3});
  r(0, 1) = r(1, 0) = 0.1;
  r(0, 2) = r(2, 0) = 0.2;
  r(1, 2) = r(2, 1) = 0.3;
  CHECK(vectorize(r) == std::vector<double>{0.1, 0.2, 0.3});
  std::mt19937_64 rng(1);
  CHECK(vectorize(random_rdm(rng, 36)).size() == 630);
}

TEST_CASE("ranks and spearman examples") {
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 30}) == std::vector<double>{1, 2.5, 2.5, 4});
  const std::vector<double> x = {1, 2, 3, 4, 5};
  CHECK(*spearman(x, std::vector<double>{2, 4, 6, 8, 10}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  // sum d^2 = 4 -> rho = 1 - 6 * 4 / 120
  CHECK(std::abs(*spearman(x, std::vector<double>{2, 1, 4, 3, 5}) - 0.8) <= 1e-12);
  CHECK_FALSE(spearman(x, std::vector<double>{3, 3, 3, 3, 3}).has_value());
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), Error);
}

TEST_CASE("spearman is invariant to strictly monotone transforms") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(3 + rng() % 60), y(x.size());
    for (auto& v : x) v = d(rng);
    for (auto& v : y) v = d(rng);
    std::vector<double> ex(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ex[i] = std::exp(x[i]);
    const auto a = spearman(x, y), b = spearman(ex, y);
    REQUIRE(a.has_value());
    REQUIRE(std::abs(*a - *b) <= 1e-12);
  }
}

TEST_CASE("spearman matches the brute-force oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(3 + rng() % 100), y(x.size());
    for (auto& v : x) v = d(rng);
    for (auto& v : y) v = (trial % 3 == 0) ? std::round(d(rng) * 2) : d(rng);  // ties
    const auto got = spearman(x, y);
    if (!got) continue;
    REQUIRE(std::abs(*got - oracle::spearman(x, y)) <= 1e-10);
  }
}

TEST_CASE("compare_study") {
  std::vector<int> notes(36);
  std::iota(notes.begin(), notes.end(), 60);
  const Rdm model = pitch_height_model(notes);
  Rdm scaled = model;
  for (double& v : scaled.values) v *= 0.3;
  Rdm inverted = model;
  for (std::size_t i = 0; i < 36; ++i)
    for (std::size_t j = 0; j < 36; ++j)
      if (i != j) inverted(i, j) = 2.0 - model(i, j);
  const auto rho = compare_study(std::vector<Rdm>{scaled, inverted}, model);
  CHECK(*rho[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*rho[1] == doctest::Approx(-1.0).epsilon(1e-12));

  Rdm other = Rdm::zeros({1, 2, 3});
  CHECK_THROWS_AS(compare_study(std::vector<Rdm>{other}, model), Error);
}

TEST_CASE("noise ceiling") {
  SUBCASE("identical RDMs reach one") {
    std::mt19937_64 rng(4);
    const Rdm r = random_rdm(rng, 10);
    const auto nc = noise_ceiling(std::vector<Rdm>(5, r));
    CHECK(*nc.lower == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*nc.upper == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("needs at least two RDMs") {
    std::mt19937_64 rng(5);
    CHECK_THROWS_AS(noise_ceiling(std::vector<Rdm>{random_rdm(rng, 5)}), Error);
  }
  SUBCASE("random studies match the oracle and keep lower <= upper") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 2 + rng() % 6, dim = 4 + rng() % 10;
      std::vector<Rdm> rdms;
      std::vector<oracle::Matrix> mats;
      for (std::size_t k = 0; k < n; ++k) {
        rdms.push_back(random_rdm(rng, dim));
        mats.push_back(to_matrix(rdms.back()));
      }
      const auto nc = noise_ceiling(rdms);
      const auto ref = oracle::noise_ceiling(mats);
      REQUIRE(nc.lower.has_value());
      REQUIRE(std::abs(*nc.lower - ref.lower) <= 1e-10);
      REQUIRE(std::abs(*nc.upper - ref.upper) <= 1e-10);
      REQUIRE(*nc.lower <= *nc.upper + 1e-12);
    }
  }
}

TEST_CASE("one-sample t test examples") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  const auto t = one_sample_ttest(v, 0.0);
  REQUIRE(t.has_value());
  CHECK(t->t == doctest::Approx(4.2426).epsilon(1e-4));
  CHECK(t->p_two_sided == doctest::Approx(0.0132).epsilon(0.005));
  CHECK(t->df == 4);
  const auto sym = one_sample_ttest(std::vector<double>{-2, -1, 1, 2}, 0.0);
  CHECK(sym->t == 0.0);
  CHECK(sym->p_two_sided == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(one_sample_ttest(std::vector<double>{0.4, 0.4, 0.4}, 0.0).has_value());
  CHECK_THROWS_AS(one_sample_ttest(std::vector<double>{1.0}, 0.0), Error);
}

TEST_CASE("t distribution p-values against frozen references") {
  for (const auto& f : kFrozen) {
    CAPTURE(f.t);
    CAPTURE(f.df);
    const double p = student_t_two_sided_p(f.t, f.df);
    CHECK(std::abs(p - f.p) <= 1e-10);
    CHECK(std::abs(student_t_two_sided_p(-f.t, f.df) - p) <= 1e-15);
  }
  CHECK(student_t_two_sided_p(0.0, 4) == 1.0);
}

TEST_CASE("t test matches the oracle on random samples") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.1, 0.3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(2 + rng() % 40);
    for (auto& x : v) x = d(rng);
    const double mu = (trial % 2) ? 0.0 : d(rng);
    const auto t = one_sample_ttest(v, mu);
    REQUIRE(t.has_value());
    const double t_ref = oracle::t_statistic(v, mu);
    REQUIRE(std::abs(t->t - t_ref) <= 1e-10 * std::max(1.0, std::abs(t_ref)));
    REQUIRE(std::abs(t->p_two_sided - oracle::t_two_sided_p(t_ref, v.size() - 1.0)) <= 1e-10);
    REQUIRE(std::abs(sem(v) - oracle::sem(v)) <= 1e-10);
  }
}

TEST_CASE("incomplete beta edge values") {
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
  // I_x(1, 1) = x, I_x(a, 1) = x^a
  CHECK(regularized_incomplete_beta(1, 1, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(regularized_incomplete_beta(3, 1, 0.5) == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("bonferroni") {
  const std::vector<double> p = {0.001, 0.004, 0.02};
  CHECK(bonferroni(p, 0.01) == std::vector<bool>{true, false, false});
  CHECK(bonferroni(p, 0.05) == std::vector<bool>{true, true, false});
  CHECK(bonferroni(p, 0.05, 6) == std::vector<bool>{true, true, false});
  CHECK(bonferroni(std::vector<double>{0.0025, 0.0024}, 0.01, 4) == std::vector<bool>{false, true});
  CHECK(bonferroni(std::vector<double>{}, 0.01).empty());
}

TEST_CASE("sem and mean") {
  CHECK(sem(std::vector<double>{1, 2, 3, 4, 5}) == doctest::Approx(std::sqrt(2.5 / 5)));
  CHECK(sem(std::vector<double>{3, 3, 3}) == 0.0);
  CHECK(mean(std::vector<double>{1, 2, 3, 4}) == 2.5);
  CHECK_THROWS_AS(sem(std::vector<double>{1}), Error);
}

TEST_CASE("analyze_family") {
  std::vector<int> notes(12);
  std::iota(notes.begin(), notes.end(), 60);
  const Rdm height = pitch_height_model(notes);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> d(0, 0.05);

  RepresentationRdms good{"good", {}, {}}, noise{"noise", {}, {}};
  for (int k = 0; k < 10; ++k) {
    Rdm r = height;
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = i + 1; j < 12; ++j) r(i, j) = r(j, i) = height(i, j) + d(rng);
    good.instrument_ids.push_back("i" + std::to_string(k));
    good.instrument_rdms.push_back(r);
    noise.instrument_ids.push_back("i" + std::to_string(k));
    noise.instrument_rdms.push_back(random_rdm(rng, 12));
  }
  const std::vector<RepresentationRdms> reps = {good, noise};
  const std::vector<NamedModel> models = {{"pitch_height", height},
                                          {"chroma_binary", chroma_model(notes)}};
  const auto results = analyze_family("demo", reps, models, 0.01);
  REQUIRE(results.size() == 4);
  for (const auto& r : results) {
    CHECK(r.n_comparisons == 4);
    CHECK(r.family == "demo");
    CHECK(r.per_instrument_rho.size() == 10);
  }
  CHECK(results[0].representation_name == "good");
  CHECK(results[0].model_name == "pitch_height");
  CHECK(results[0].significantly_positive());
  CHECK(*results[0].mean_rho > 0.9);

  // mean rho and its test agree with the oracle computed from the rhos
  std::vector<double> rhos;
  for (const auto& r : results[0].per_instrument_rho) rhos.push_back(*r);
  CHECK(std::abs(*results[0].t_vs_zero - oracle::t_statistic(rhos, 0.0)) <= 1e-9);
  const bool expected_zero = oracle::t_two_sided_p(oracle::t_statistic(rhos, 0.0), 9) < 0.01 / 4;
  CHECK(results[0].sig_vs_zero == expected_zero);

  CHECK_THROWS_AS(analyze_family("demo", reps, models, 1.5), Error);
}
