#ifndef NML_DDIM_NML_HPP
#define NML_DDIM_NML_HPP

#include <memory>
#include <string_view>
#include <vector>

#include "nml_ddim/model_families.hpp"

namespace nml_ddim {

/// How ln C_n is evaluated. Auto picks Exact when the count lattice has at
/// most kAutoExactLimit points, otherwise Asymptotic.
enum class Method { Exact, Asymptotic, Auto };

inline constexpr double kAutoExactLimit = 1e6;

std::string_view method_name(Method method) noexcept;
Method parse_method(std::string_view text);

/// Concrete method Auto resolves to for (model, n). Fixed classes are always Exact.
Method resolve_method(const ModelClass& model, Count n, Method requested);

/// ln C_n(P) = ln sum_y max_{p in P} p(y), exact.
///
/// Bernoulli sums the n+1 binomial classes directly. Larger alphabets split
/// the alphabet in two and convolve the complexity tables of the halves,
///   C(m1+m2, r) = sum_{r1} binom(r, r1) (r1/r)^r1 (r2/r)^r2 C(m1, r1) C(m2, r2),
/// which regroups the count-lattice sum exactly and costs O(n^2 log m).
/// Throws IntractableEnumeration when the work exceeds lattice_cap().
double log_parametric_complexity_exact(const ModelClass& model, Count n);

/// (k/2) ln(n / 2pi) + ln integral sqrt(det I). Requires k >= 1 and n >= 2.
double log_parametric_complexity_asymptotic(const ModelClass& model, Count n);

double log_parametric_complexity(const ModelClass& model, Count n, Method method = Method::Auto);

/// ln C_r for r = 0..n_max, exact, shared from a process-wide cache.
/// Index 0 holds ln C_0 = 0 (the empty sequence has likelihood 1).
std::shared_ptr<const std::vector<double>> log_complexity_table(const ModelClass& model,
                                                                Count n_max);

/// Reference evaluation of ln C_n by visiting every count vector of the
/// lattice. Subject to lattice_cap().
double lattice_log_complexity(const ModelClass& model, Count n);

struct CodelengthReport {
  double neg_max_loglik = 0.0;
  double log_complexity = 0.0;
  double total = 0.0;
  Count n = 0;
  Method method = Method::Exact;
};

CodelengthReport nml_codelength(const ModelClass& model, const SufficientStat& stat,
                                Method method = Method::Auto);

/// The NML distribution of a class at horizon n:
///   p(x) = max_{p in P} p(x) / C_n(P).
struct NmlDistribution {
  ModelClass model;
  Count n = 0;
  double log_complexity = 0.0;
  Method method = Method::Exact;
};

NmlDistribution make_nml_distribution(const ModelClass& model, Count n,
                                      Method method = Method::Auto);

/// ln p_NML(x) of one specific sequence with the given counts.
double nml_log_prob(const NmlDistribution& dist, const SufficientStat& stat);

/// NML codelength minus the best in-class codelength. Constant in the data
/// (equals ln C_n) because NML is an equalizer.
double regret(const ModelClass& model, const SufficientStat& stat, Method method = Method::Auto);

}  // namespace nml_ddim

#endif  // NML_DDIM_NML_HPP
