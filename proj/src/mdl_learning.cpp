#include "nml_ddim/mdl_learning.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "nml_ddim/divergence.hpp"
#include "nml_ddim/error.hpp"

namespace nml_ddim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void enumerate_compositions(int total, int parts, std::vector<int>& current,
                            std::vector<std::vector<double>>& out, int denominator) {
  if (parts == 1) {
    current.push_back(total);
    std::vector<double> point;
    for (int c : current) point.push_back(static_cast<double>(c) / denominator);
    out.push_back(std::move(point));
    current.pop_back();
    return;
  }
  for (int first = 1; first <= total - (parts - 1); ++first) {
    current.push_back(first);
    enumerate_compositions(total - first, parts - 1, current, out, denominator);
    current.pop_back();
  }
}

double kl_or_inf(std::span<const double> p, std::span<const double> q) {
  try {
    return kl_per_symbol(p, q);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SupportViolation) return kInf;
    throw;
  }
}

}  // namespace

ModelFamily::ModelFamily(std::vector<ModelClass> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorCode::InvalidArgument, "a family needs >= 1 member");
  std::set<std::string> seen;
  for (const auto& m : members_) {
    if (m.alphabet_size() != members_.front().alphabet_size())
      throw Error(ErrorCode::InvalidArgument, "family members disagree on the alphabet");
    if (!seen.insert(m.spec_string()).second)
      throw Error(ErrorCode::DuplicateMember, "duplicate family member " + m.spec_string());
  }
}

LearnResult mdl_learn(const ModelFamily& family, const SufficientStat& stat, Method method) {
  if (stat.n <= 0) throw Error(ErrorCode::EmptySequence, "cannot learn from an empty sequence");
  std::vector<CodelengthReport> reports;
  std::size_t best = 0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    reports.push_back(nml_codelength(family[i], stat, method));
    if (reports[i].total < reports[best].total) best = i;
  }
  NmlDistribution output{family[best], stat.n, reports[best].log_complexity, reports[best].method};
  return LearnResult{best, std::move(reports), std::move(output)};
}

LearnResult mdl_learn(const ModelFamily& family, std::span<const Symbol> x, Method method) {
  return mdl_learn(family, sufficient_stat(x, family.alphabet_size()), method);
}

std::vector<std::vector<double>> parameter_grid(const ModelClass& model, int grid_resolution) {
  if (grid_resolution < 1)
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 1");
  if (model.kind() == FamilyKind::FixedDistribution) return {model.fixed_params()};
  const int m = model.alphabet_size();
  const int denominator = grid_resolution + m - 1;
  std::vector<std::vector<double>> out;
  std::vector<int> current;
  enumerate_compositions(denominator, m, current, out, denominator);
  return out;
}

double parameter_code_length(const ModelClass& model, int grid_resolution,
                             std::size_t family_size) {
  return std::log(static_cast<double>(family_size)) +
         model.dimension() * std::log(static_cast<double>(grid_resolution));
}

TwoStageResult two_stage_learn(const ModelFamily& family, std::span<const Symbol> x,
                               int grid_resolution, double lambda) {
  if (x.empty()) throw Error(ErrorCode::EmptySequence, "cannot learn from an empty sequence");
  if (lambda < 2.0) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 2");
  const SufficientStat stat = sufficient_stat(x, family.alphabet_size());
  TwoStageResult best;
  best.total = kInf;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double code = parameter_code_length(family[i], grid_resolution, family.size());
    for (const auto& point : parameter_grid(family[i], grid_resolution)) {
      const double nll = -log_likelihood(point, stat.counts);
      const double total = nll + lambda * code;
      if (total < best.total) best = TwoStageResult{i, point, nll, code, total};
    }
  }
  return best;
}

double j_n(std::span<const double> p_star, const ModelFamily& family, Count n, Method method) {
  validate_params(p_star);
  double best = kInf;
  for (const auto& member : family.members()) {
    const auto projection = kl_projection(p_star, member);
    const double divergence = kl_or_inf(p_star, projection);
    best = std::min(best, static_cast<double>(n) * divergence +
                              log_parametric_complexity(member, n, method));
  }
  return best;
}

double index_of_resolvability(std::span<const double> p_star, const ModelFamily& family,
                              int grid_resolution, Count n) {
  validate_params(p_star);
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  double best = kInf;
  for (const auto& member : family.members()) {
    const double code =
        parameter_code_length(member, grid_resolution, family.size()) / static_cast<double>(n);
    for (const auto& point : parameter_grid(member, grid_resolution))
      best = std::min(best, kl_or_inf(p_star, point) + code);
  }
  return best;
}

std::vector<double> kl_projection(std::span<const double> p_star, const ModelClass& model) {
  if (model.kind() == FamilyKind::FixedDistribution) return model.fixed_params();
  return {p_star.begin(), p_star.end()};
}

double convergence_bound(Count n, double epsilon, double log_complexity_true,
                         std::size_t family_size) {
  return std::exp(-static_cast<double>(n) * epsilon + 0.5 * log_complexity_true +
                  std::log(static_cast<double>(family_size)));
}

AgnosticBound agnostic_bound(std::span<const double> p_star, const ModelFamily& family, Count n,
                             double epsilon, Method method) {
  AgnosticBound out;
  out.j_n = j_n(p_star, family, n, method);
  for (const auto& member : family.members()) {
    const auto projection = kl_projection(p_star, member);
    for (std::size_t j = 0; j < p_star.size(); ++j) {
      if (p_star[j] == 0.0) continue;
      out.b_n = projection[j] == 0.0 ? kInf
                                     : std::max(out.b_n, std::abs(std::log(p_star[j] / projection[j])));
    }
  }
  const double s = static_cast<double>(family.size());
  const double nd = static_cast<double>(n);
  out.tail = out.b_n == 0.0 ? 0.0
                            : 2.0 * s * std::exp(-nd * epsilon * epsilon / (2.0 * out.b_n * out.b_n));
  if (out.tail >= 1.0) {
    out.bound = kInf;
    return out;
  }
  out.bound = s / (1.0 - out.tail) * std::exp(-0.5 * nd * (epsilon - out.j_n / nd)) + out.tail;
  return out;
}

}  // namespace nml_ddim
