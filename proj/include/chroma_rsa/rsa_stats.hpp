#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chroma_rsa/rdm.hpp"

namespace chroma_rsa {

/// Upper triangle without the diagonal, row-major: (0,1), (0,2), ..., (n-2,n-1).
std::vector<double> vectorize(const Rdm& rdm);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. nullopt when either side is
/// constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Spearman rho between each instrument RDM and the model RDM.
std::vector<std::optional<double>> compare_study(std::span<const Rdm> instrument_rdms,
                                                 const Rdm& model_rdm);

struct NoiseCeiling {
  std::optional<double> lower;
  std::optional<double> upper;
};

/// lower: mean over i of spearman(rdm_i, mean of the others);
/// upper: mean over i of spearman(rdm_i, mean of all). A bound is nullopt if
/// any of its terms is undefined.
NoiseCeiling noise_ceiling(std::span<const Rdm> instrument_rdms);

struct TTest {
  double t;
  double p_two_sided;
  double df;
};

/// One-sample Student t test of mean(values) against mu. nullopt when the
/// sample variance is zero.
std::optional<TTest> one_sample_ttest(std::span<const double> values, double mu);

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// flag_i = p_i < alpha / m. m defaults to the number of p-values.
std::vector<bool> bonferroni(std::span<const double> p_values, double alpha, std::size_t m = 0);

/// Sample standard deviation (n - 1) over sqrt(n).
double sem(std::span<const double> values);

double mean(std::span<const double> values);

struct RsaResult {
  std::string family;
  std::string representation_name;
  std::string model_name;
  std::vector<std::string> instrument_ids;
  std::vector<std::optional<double>> per_instrument_rho;
  std::optional<double> mean_rho;
  std::optional<double> sem;
  std::optional<double> t_vs_zero;
  std::optional<double> p_vs_zero;
  bool sig_vs_zero = false;
  std::optional<double> noise_lower;
  std::optional<double> noise_upper;
  std::optional<double> t_vs_ceiling;
  std::optional<double> p_vs_ceiling;
  bool sig_below_ceiling = false;
  double alpha = 0.01;
  int n_comparisons = 1;

  /// Mean rho is significantly above zero after correction.
  bool significantly_positive() const { return sig_vs_zero && mean_rho && *mean_rho > 0.0; }
};

struct RepresentationRdms {
  std::string name;
  std::vector<std::string> instrument_ids;
  std::vector<Rdm> instrument_rdms;
};

struct NamedModel {
  std::string name;
  Rdm rdm;
};

/// Runs every (representation, model) comparison of one figure panel. The
/// Bonferroni family is the whole panel: m = representations x models, used
/// for both the zero test and the ceiling test.
std::vector<RsaResult> analyze_family(const std::string& family,
                                      std::span<const RepresentationRdms> representations,
                                      std::span<const NamedModel> models, double alpha);

}  // namespace chroma_rsa
