#include "nml_ddim/model_families.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "nml_ddim/error.hpp"

namespace nml_ddim {

namespace {

// ln Gamma(m/2) for integer m >= 1 without touching lgamma's global sign.
double log_gamma_half_integer(int m) {
  if (m % 2 == 0) return log_factorial(m / 2 - 1);
  const Count k = (m - 1) / 2;
  return log_factorial(2 * k) + 0.5 * std::log(M_PI) - static_cast<double>(k) * std::log(4.0) -
         log_factorial(k);
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ModelClass ModelClass::fixed(std::vector<double> params) {
  if (params.empty()) throw Error(ErrorCode::InvalidParams, "fixed model needs parameters");
  validate_params(params);
  const int m = static_cast<int>(params.size());
  return ModelClass(FamilyKind::FixedDistribution, m, 0, std::move(params));
}

ModelClass ModelClass::bernoulli() { return ModelClass(FamilyKind::Bernoulli, 2, 1, {}); }

ModelClass ModelClass::multinomial(int alphabet_size) {
  if (alphabet_size < 2)
    throw Error(ErrorCode::InvalidParams, "multinomial alphabet size must be >= 2");
  return ModelClass(FamilyKind::Multinomial, alphabet_size, alphabet_size - 1, {});
}

std::string ModelClass::spec_string() const {
  switch (kind_) {
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Multinomial: return "multinomial:" + std::to_string(alphabet_size_);
    case FamilyKind::FixedDistribution: {
      std::ostringstream out;
      out.precision(17);
      out << "fixed:";
      for (std::size_t j = 0; j < params_.size(); ++j) {
        if (j) out << ',';
        out << params_[j];
      }
      return out.str();
    }
  }
  return {};
}

void validate_params(std::span<const double> params) {
  double total = 0.0;
  for (double p : params) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw Error(ErrorCode::InvalidParams, "probabilities must be finite and >= 0");
    total += p;
  }
  if (params.empty() || std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidParams, "probabilities must sum to 1");
}

SufficientStat sufficient_stat(std::span<const Symbol> seq, int alphabet_size) {
  SufficientStat stat;
  stat.counts.assign(alphabet_size, 0);
  for (Symbol s : seq) {
    if (s < 0 || s >= alphabet_size)
      throw Error(ErrorCode::OutOfRangeSymbol,
                  "symbol " + std::to_string(s) + " outside alphabet of size " +
                      std::to_string(alphabet_size));
    ++stat.counts[s];
  }
  stat.n = static_cast<Count>(seq.size());
  return stat;
}

double log_likelihood(std::span<const double> params, std::span<const Count> counts) {
  double ll = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    if (params[j] <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(counts[j]) * std::log(params[j]);
  }
  return ll;
}

double max_log_likelihood(const ModelClass& model, const SufficientStat& stat) {
  if (stat.n <= 0) throw Error(ErrorCode::EmptySequence, "likelihood of an empty sequence");
  if (static_cast<int>(stat.counts.size()) != model.alphabet_size())
    throw Error(ErrorCode::InvalidArgument, "statistic does not match the model alphabet");
  if (model.kind() == FamilyKind::FixedDistribution)
    return log_likelihood(model.fixed_params(), stat.counts);
  double acc = 0.0;
  for (Count c : stat.counts) acc += xlogx(static_cast<double>(c));
  return acc - xlogx(static_cast<double>(stat.n));
}

std::vector<double> ml_params(const ModelClass& model, const SufficientStat& stat) {
  if (model.kind() == FamilyKind::FixedDistribution) return model.fixed_params();
  if (stat.n <= 0) throw Error(ErrorCode::EmptySequence, "ML estimate of an empty sequence");
  std::vector<double> p(stat.counts.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    p[j] = static_cast<double>(stat.counts[j]) / static_cast<double>(stat.n);
  return p;
}

double fisher_integral(const ModelClass& model) {
  if (model.dimension() == 0)
    throw Error(ErrorCode::ZeroDimensional, "Fisher integral of a zero-dimensional class");
  const int m = model.alphabet_size();
  return std::exp(0.5 * m * std::log(M_PI) - log_gamma_half_integer(m));
}

Sequence sample(std::span<const double> params, std::size_t n, Rng& rng) {
  std::vector<double> cdf(params.size());
  std::partial_sum(params.begin(), params.end(), cdf.begin());
  Sequence out(n);
  const auto last = static_cast<Symbol>(params.size() - 1);
  for (auto& x : out) {
    const double u = uniform01(rng) * cdf.back();
    Symbol s = 0;
    // u < cdf.back(), so the first cdf step above u has positive mass
    while (s < last && u >= cdf[s]) ++s;
    x = s;
  }
  return out;
}

Sequence sample(const ModelClass& model, std::span<const double> params, std::size_t n,
                std::uint64_t seed) {
  validate_params(params);
  if (static_cast<int>(params.size()) != model.alphabet_size())
    throw Error(ErrorCode::InvalidParams, "parameter vector does not match the alphabet");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample length must be >= 1");
  Rng rng(seed);
  return sample(params, n, rng);
}

}  // namespace nml_ddim
