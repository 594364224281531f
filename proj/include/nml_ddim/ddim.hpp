#ifndef NML_DDIM_DDIM_HPP
#define NML_DDIM_DDIM_HPP

#include <span>
#include <string_view>
#include <vector>

#include "nml_ddim/mdl_learning.hpp"

namespace nml_ddim {

enum class DdimMethod { Parametric, ComplexitySlope, FusionPrior, FusionPosterior, Concatenation };

std::string_view ddim_method_name(DdimMethod method) noexcept;

/// Method-specific audit record. Fields not used by a method stay empty.
struct DdimDetails {
  std::vector<Count> n_grid;
  std::vector<double> log_complexities;
  std::vector<Method> complexity_methods;
  /// prior weights, posterior weights, or concatenation ratios
  std::vector<double> weights;
  std::vector<double> member_ddims;
  std::vector<double> codelengths;
  double beta = 0.0;
};

struct DdimEstimate {
  double value = 0.0;
  DdimMethod method = DdimMethod::Parametric;
  DdimDetails details;
};

/// Members must be distinct; they may differ in alphabet for the prior form,
/// while the posterior form needs a common alphabet.
struct FusionSpec {
  FusionSpec(std::vector<ModelClass> members, std::vector<double> weights, double beta = 1.0);
  FusionSpec(const ModelFamily& family, std::vector<double> weights, double beta = 1.0);

  std::vector<ModelClass> members;
  std::vector<double> weights;
  double beta;
};

struct ConcatSpec {
  ConcatSpec(std::vector<ModelClass> classes, std::vector<double> ratios);

  std::vector<ModelClass> classes;
  std::vector<double> ratios;
};

DdimEstimate ddim_parametric(const ModelClass& model);

/// Least-squares slope of ln C_n against (1/2) ln n. Uses exact complexity,
/// falling back to the asymptotic formula at grid points where exact
/// evaluation exceeds the enumeration cap.
DdimEstimate ddim_slope(const ModelClass& model, std::span<const Count> n_grid);

DdimEstimate ddim_fusion_prior(const FusionSpec& spec);

/// sum_i p(P_i | x) k_i with p(P_i | x) proportional to
/// exp(-beta (L_NML(x; P_i) - ln w_i)).
DdimEstimate ddim_fusion_posterior(const FusionSpec& spec, std::span<const Symbol> x,
                                   Method method = Method::Auto);

DdimEstimate ddim_concat(const ConcatSpec& spec);

/// Ratios ln(len_i) / sum_j ln(len_j) over the segments cut by change_points;
/// a length-1 segment counts as ln 2.
std::vector<double> ratios_from_segmentation(std::span<const Count> change_points, Count n);

}  // namespace nml_ddim

#endif  // NML_DDIM_DDIM_HPP
