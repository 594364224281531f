#ifndef NML_DDIM_MDL_LEARNING_HPP
#define NML_DDIM_MDL_LEARNING_HPP

#include <span>
#include <vector>

#include "nml_ddim/model_families.hpp"
#include "nml_ddim/nml.hpp"

namespace nml_ddim {

/// Finite, ordered set of model classes over one alphabet. Order is the
/// tie-break priority of every argmin over the family.
class ModelFamily {
 public:
  explicit ModelFamily(std::vector<ModelClass> members);

  std::size_t size() const noexcept { return members_.size(); }
  int alphabet_size() const noexcept { return members_.front().alphabet_size(); }
  const std::vector<ModelClass>& members() const noexcept { return members_; }
  const ModelClass& operator[](std::size_t i) const { return members_[i]; }

 private:
  std::vector<ModelClass> members_;
};

struct LearnResult {
  std::size_t selected_index = 0;
  std::vector<CodelengthReport> reports;
  NmlDistribution output;
};

/// Picks the member with the shortest NML codelength (lowest index on ties)
/// and returns its NML distribution at the data's horizon.
LearnResult mdl_learn(const ModelFamily& family, std::span<const Symbol> x,
                      Method method = Method::Auto);
LearnResult mdl_learn(const ModelFamily& family, const SufficientStat& stat,
                      Method method = Method::Auto);

/// Quantized parameter points of a class: interior simplex points with
/// denominator G + m - 1, at most G^k of them. A fixed class has its single
/// point regardless of G.
std::vector<std::vector<double>> parameter_grid(const ModelClass& model, int grid_resolution);

/// Uniform two-part code for (class, grid point): ln s + k ln G. Satisfies
/// Kraft because every class has at most G^k points.
double parameter_code_length(const ModelClass& model, int grid_resolution,
                             std::size_t family_size);

struct TwoStageResult {
  std::size_t selected_index = 0;
  std::vector<double> params;
  double neg_log_likelihood = 0.0;
  double parameter_code = 0.0;
  /// -ln p(x) + lambda * parameter_code
  double total = 0.0;
};

TwoStageResult two_stage_learn(const ModelFamily& family, std::span<const Symbol> x,
                               int grid_resolution, double lambda = 2.0);

/// min_P { n inf_{p in P} D(p* || p) + ln C_n(P) }.
double j_n(std::span<const double> p_star, const ModelFamily& family, Count n,
           Method method = Method::Auto);

/// min_P min_{p on grid} { D(p* || p) + l(p, P) / n }, nats per symbol.
double index_of_resolvability(std::span<const double> p_star, const ModelFamily& family,
                              int grid_resolution, Count n);

/// KL projection of p* onto a class: the fixed params, or p* itself for the
/// free families (which cover the whole simplex).
std::vector<double> kl_projection(std::span<const double> p_star, const ModelClass& model);

/// exp(-n eps + (1/2) ln C_n(P*) + ln |F|), unclipped.
double convergence_bound(Count n, double epsilon, double log_complexity_true,
                         std::size_t family_size);

struct AgnosticBound {
  double j_n = 0.0;
  /// max over members and symbols of |ln(p*_j / ptilde_j)|
  double b_n = 0.0;
  /// Hoeffding bound on the probability of the complement event,
  /// 2 |F| exp(-n eps^2 / (2 B_n^2)).
  double tail = 0.0;
  /// |F| / (1 - tail) exp(-(n/2)(eps - J_n/n)) + tail; +inf when tail >= 1.
  double bound = 0.0;
};

AgnosticBound agnostic_bound(std::span<const double> p_star, const ModelFamily& family, Count n,
                             double epsilon, Method method = Method::Auto);

}  // namespace nml_ddim

#endif  // NML_DDIM_MDL_LEARNING_HPP
