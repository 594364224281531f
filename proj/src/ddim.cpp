#include "nml_ddim/ddim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nml_ddim/error.hpp"
#include "nml_ddim/segments.hpp"

namespace nml_ddim {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_probability_vector(std::span<const double> w, const char* what) {
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorCode::InvalidParams, std::string(what) + " must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw Error(ErrorCode::InvalidParams, std::string(what) + " must sum to 1");
}

double complexity_for_slope(const ModelClass& model, Count n, Method& used) {
  try {
    used = Method::Exact;
    return log_parametric_complexity_exact(model, n);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IntractableEnumeration) throw;
  }
  used = Method::Asymptotic;
  return log_parametric_complexity_asymptotic(model, n);
}

}  // namespace

std::string_view ddim_method_name(DdimMethod method) noexcept {
  switch (method) {
    case DdimMethod::Parametric: return "parametric";
    case DdimMethod::ComplexitySlope: return "slope";
    case DdimMethod::FusionPrior: return "fusion-prior";
    case DdimMethod::FusionPosterior: return "fusion-posterior";
    case DdimMethod::Concatenation: return "concat";
  }
  return "parametric";
}

FusionSpec::FusionSpec(std::vector<ModelClass> members_, std::vector<double> weights_,
                       double beta_)
    : members(std::move(members_)), weights(std::move(weights_)), beta(beta_) {
  if (members.empty()) throw Error(ErrorCode::InvalidArgument, "fusion needs >= 1 member");
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (members[i] == members[j])
        throw Error(ErrorCode::DuplicateMember, "duplicate fusion member " + members[i].spec_string());
  if (weights.size() != members.size())
    throw Error(ErrorCode::InvalidArgument, "one weight per family member is required");
  check_probability_vector(weights, "fusion weights");
  if (!(beta > 0.0 && beta <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "beta must lie in (0, 1]");
}

FusionSpec::FusionSpec(const ModelFamily& family, std::vector<double> weights_, double beta_)
    : FusionSpec(family.members(), std::move(weights_), beta_) {}

ConcatSpec::ConcatSpec(std::vector<ModelClass> classes_, std::vector<double> ratios_)
    : classes(std::move(classes_)), ratios(std::move(ratios_)) {
  if (classes.empty() || ratios.size() != classes.size())
    throw Error(ErrorCode::InvalidArgument, "one ratio per class is required");
  if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return !(r > 0.0); }))
    throw Error(ErrorCode::InvalidParams, "concatenation ratios must be > 0");
  check_probability_vector(ratios, "concatenation ratios");
}

DdimEstimate ddim_parametric(const ModelClass& model) {
  return DdimEstimate{static_cast<double>(model.dimension()), DdimMethod::Parametric, {}};
}

DdimEstimate ddim_slope(const ModelClass& model, std::span<const Count> n_grid) {
  if (n_grid.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "slope estimation needs >= 2 grid sizes");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1 || (i > 0 && n_grid[i] <= n_grid[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "n_grid must be positive and strictly increasing");
  }
  DdimEstimate est;
  est.method = DdimMethod::ComplexitySlope;
  est.details.n_grid.assign(n_grid.begin(), n_grid.end());
  std::vector<double> xs;
  for (Count n : n_grid) {
    Method used = Method::Exact;
    est.details.log_complexities.push_back(complexity_for_slope(model, n, used));
    est.details.complexity_methods.push_back(used);
    xs.push_back(0.5 * std::log(static_cast<double>(n)));
  }
  const auto& ys = est.details.log_complexities;
  const double count = static_cast<double>(xs.size());
  const double x_mean = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
  const double y_mean = std::accumulate(ys.begin(), ys.end(), 0.0) / count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
  }
  est.value = std::max(0.0, sxy / sxx);
  return est;
}

DdimEstimate ddim_fusion_prior(const FusionSpec& spec) {
  DdimEstimate est;
  est.method = DdimMethod::FusionPrior;
  est.details.weights = spec.weights;
  for (std::size_t i = 0; i < spec.members.size(); ++i) {
    const double k = spec.members[i].dimension();
    est.details.member_ddims.push_back(k);
    est.value += spec.weights[i] * k;
  }
  return est;
}

DdimEstimate ddim_fusion_posterior(const FusionSpec& spec, std::span<const Symbol> x,
                                   Method method) {
  if (x.empty()) throw Error(ErrorCode::EmptySequence, "posterior needs a non-empty sequence");
  const ModelFamily family(spec.members);
  const SufficientStat stat = sufficient_stat(x, family.alphabet_size());
  DdimEstimate est;
  est.method = DdimMethod::FusionPosterior;
  est.details.beta = spec.beta;
  std::vector<double> log_post;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double length = nml_codelength(family[i], stat, method).total;
    est.details.codelengths.push_back(length);
    est.details.member_ddims.push_back(family[i].dimension());
    log_post.push_back(spec.weights[i] > 0.0
                           ? -spec.beta * (length - std::log(spec.weights[i]))
                           : -std::numeric_limits<double>::infinity());
  }
  LogSumExp norm;
  for (double v : log_post) norm.add(v);
  for (std::size_t i = 0; i < log_post.size(); ++i) {
    const double w = std::exp(log_post[i] - norm.value());
    est.details.weights.push_back(w);
    est.value += w * est.details.member_ddims[i];
  }
  return est;
}

DdimEstimate ddim_concat(const ConcatSpec& spec) {
  DdimEstimate est;
  est.method = DdimMethod::Concatenation;
  est.details.weights = spec.ratios;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    const double k = spec.classes[i].dimension();
    est.details.member_ddims.push_back(k);
    est.value += spec.ratios[i] * k;
  }
  return est;
}

std::vector<double> ratios_from_segmentation(std::span<const Count> change_points, Count n) {
  const auto lengths = segment_lengths(change_points, n);
  std::vector<double> out;
  double total = 0.0;
  for (Count len : lengths) {
    out.push_back(std::log(static_cast<double>(std::max<Count>(len, 2))));
    total += out.back();
  }
  for (double& r : out) r /= total;
  return out;
}

}  // namespace nml_ddim
