#ifndef NML_DDIM_MODEL_FAMILIES_HPP
#define NML_DDIM_MODEL_FAMILIES_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nml_ddim/numeric.hpp"

namespace nml_ddim {

using Symbol = int;
using Sequence = std::vector<Symbol>;
using Rng = std::mt19937_64;

enum class FamilyKind { FixedDistribution, Bernoulli, Multinomial };

/// A parametric family of i.i.d. distributions over the alphabet {0..m-1}.
///
/// FixedDistribution is the singleton class {p} (dimension 0), Bernoulli the
/// full binary simplex (dimension 1) and Multinomial:m the full simplex over
/// m symbols (dimension m-1). Instances are immutable.
class ModelClass {
 public:
  static ModelClass fixed(std::vector<double> params);
  static ModelClass bernoulli();
  static ModelClass multinomial(int alphabet_size);

  FamilyKind kind() const noexcept { return kind_; }
  int alphabet_size() const noexcept { return alphabet_size_; }
  int dimension() const noexcept { return dimension_; }
  /// Empty unless kind() == FixedDistribution.
  const std::vector<double>& fixed_params() const noexcept { return params_; }

  /// Canonical textual form: "fixed:p0,p1,...", "bernoulli", "multinomial:m".
  std::string spec_string() const;

  friend bool operator==(const ModelClass&, const ModelClass&) = default;

 private:
  ModelClass(FamilyKind kind, int m, int k, std::vector<double> params)
      : kind_(kind), alphabet_size_(m), dimension_(k), params_(std::move(params)) {}

  FamilyKind kind_;
  int alphabet_size_;
  int dimension_;
  std::vector<double> params_;
};

/// Symbol counts of a sequence; the sufficient statistic of every family here.
struct SufficientStat {
  std::vector<Count> counts;
  Count n = 0;
};

/// Validates that params is a probability vector (entries >= 0, sum 1 within
/// 1e-12). Throws InvalidParams otherwise.
void validate_params(std::span<const double> params);

SufficientStat sufficient_stat(std::span<const Symbol> seq, int alphabet_size);

/// ln max_{p in model} p(x) for any x with the given counts. Free families
/// use the 0 ln 0 = 0 convention; a fixed model returns -inf if a count falls
/// on a zero-probability symbol.
double max_log_likelihood(const ModelClass& model, const SufficientStat& stat);

/// ln p(x) for an i.i.d. distribution with the given params.
double log_likelihood(std::span<const double> params, std::span<const Count> counts);

/// Maximum-likelihood parameter in the class (the fixed params for a
/// FixedDistribution, the empirical frequencies otherwise).
std::vector<double> ml_params(const ModelClass& model, const SufficientStat& stat);

/// Integral of sqrt(det I(theta)) over the parameter simplex:
/// Gamma(1/2)^m / Gamma(m/2). Bernoulli gives pi.
double fisher_integral(const ModelClass& model);

/// n i.i.d. draws from params using the supplied generator.
Sequence sample(std::span<const double> params, std::size_t n, Rng& rng);

/// n i.i.d. draws from params; deterministic in seed.
Sequence sample(const ModelClass& model, std::span<const double> params, std::size_t n,
                std::uint64_t seed);

}  // namespace nml_ddim

#endif  // NML_DDIM_MODEL_FAMILIES_HPP
