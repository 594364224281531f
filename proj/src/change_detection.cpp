#include "nml_ddim/change_detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nml_ddim/divergence.hpp"
#include "nml_ddim/error.hpp"
#include "nml_ddim/segments.hpp"

namespace nml_ddim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Entries of a precomputed segment-cost matrix; larger problems compute on demand.
constexpr double kCostMatrixLimit = 1e7;
// Layers whose lower bound is within this of the incumbent are still searched.
constexpr double kPruneSlack = 1e-9;

std::vector<double> complexity_row(const ModelClass& model, Count n, Method method) {
  std::vector<double> row(n + 1, 0.0);
  if (model.kind() == FamilyKind::FixedDistribution) return row;
  std::shared_ptr<const std::vector<double>> table;
  for (Count r = 1; r <= n; ++r) {
    if (resolve_method(model, r, method) == Method::Exact) {
      if (!table) table = log_complexity_table(model, n);
      row[r] = (*table)[r];
    } else {
      row[r] = log_parametric_complexity_asymptotic(model, r);
    }
  }
  return row;
}

// Segment NML codelengths of x[i, j) under every family member.
class SegmentCosts {
 public:
  SegmentCosts(std::span<const Symbol> x, const ModelFamily& family, Method method)
      : n_(static_cast<Count>(x.size())),
        m_(family.alphabet_size()),
        s_(family.size()),
        prefix_((x.size() + 1) * m_, 0),
        xlogx_(x.size() + 1) {
    for (std::size_t p = 0; p < x.size(); ++p) {
      if (x[p] < 0 || x[p] >= m_)
        throw Error(ErrorCode::OutOfRangeSymbol,
                    "symbol " + std::to_string(x[p]) + " at position " + std::to_string(p) +
                        " is outside the alphabet");
      std::copy_n(&prefix_[p * m_], m_, &prefix_[(p + 1) * m_]);
      ++prefix_[(p + 1) * m_ + x[p]];
    }
    for (Count c = 0; c <= n_; ++c) xlogx_[c] = xlogx(static_cast<double>(c));
    for (const auto& member : family.members()) {
      complexity_.push_back(complexity_row(member, n_, method));
      std::vector<double> logp;
      for (double p : member.fixed_params()) logp.push_back(p > 0.0 ? std::log(p) : -kInf);
      log_params_.push_back(std::move(logp));
      fixed_.push_back(member.kind() == FamilyKind::FixedDistribution);
    }
    const double entries = 0.5 * static_cast<double>(n_ + 1) * static_cast<double>(n_) * s_;
    if (entries <= kCostMatrixLimit) {
      matrix_.resize(static_cast<std::size_t>(entries));
      for (Count i = 0; i < n_; ++i)
        for (Count j = i + 1; j <= n_; ++j)
          for (std::size_t a = 0; a < s_; ++a) matrix_[slot(i, j, a)] = compute(i, j, a);
    }
  }

  double operator()(Count i, Count j, std::size_t a) const {
    return matrix_.empty() ? compute(i, j, a) : matrix_[slot(i, j, a)];
  }

 private:
  std::size_t slot(Count i, Count j, std::size_t a) const {
    // rows of the upper triangle, j > i
    const auto row_start = static_cast<std::size_t>(i * n_ - i * (i - 1) / 2);
    return (row_start + static_cast<std::size_t>(j - i - 1)) * s_ + a;
  }

  double compute(Count i, Count j, std::size_t a) const {
    const Count len = j - i;
    double loglik = 0.0;
    for (int k = 0; k < m_; ++k) {
      const Count c = prefix_[j * m_ + k] - prefix_[i * m_ + k];
      if (c == 0) continue;
      if (fixed_[a]) {
        if (log_params_[a][k] == -kInf) return kInf;
        loglik += static_cast<double>(c) * log_params_[a][k];
      } else {
        loglik += xlogx_[c];
      }
    }
    if (!fixed_[a]) loglik -= xlogx_[len];
    return -loglik + complexity_[a][len];
  }

  Count n_;
  int m_;
  std::size_t s_;
  std::vector<Count> prefix_;
  std::vector<double> xlogx_;
  std::vector<std::vector<double>> complexity_;
  std::vector<std::vector<double>> log_params_;
  std::vector<bool> fixed_;
  std::vector<double> matrix_;
};

struct Cell {
  double value = kInf;
  Count from = -1;
  std::size_t prev_model = 0;
};

Segmentation assemble(std::span<const Symbol> x, const ModelFamily& family,
                      std::vector<Count> change_points, std::vector<std::size_t> indices,
                      Method method) {
  std::vector<ModelClass> models;
  for (std::size_t a : indices) models.push_back(family[a]);
  ModelSequence ms(std::move(change_points), std::move(models));
  const Count n = static_cast<Count>(x.size());
  Segmentation seg{ms, std::move(indices), {}, 0.0, 0.0, 0.0};
  std::size_t pos = 0;
  const auto lengths = ms.segment_lengths(n);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto len = static_cast<std::size_t>(lengths[i]);
    const auto stat = sufficient_stat(x.subspan(pos, len), family.alphabet_size());
    seg.segment_codelengths.push_back(nml_codelength(ms.models()[i], stat, method).total);
    seg.data_codelength += seg.segment_codelengths.back();
    pos += len;
  }
  seg.model_code = kraft_model_sequence_code(ms, n, family.size());
  seg.total_codelength = seg.data_codelength + seg.model_code;
  return seg;
}

double log_complexity_sum(std::span<const Count> lengths, std::span<const ModelClass> classes,
                          Method method) {
  double total = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    total += log_parametric_complexity(classes[i], lengths[i], method);
  return total;
}

Type2Bound finish_type2(double distance, Count n, double log_slack) {
  Type2Bound out;
  out.distance = distance;
  out.log_bound = -static_cast<double>(n) * distance + 0.5 * log_slack;
  out.bound = std::min(1.0, std::exp(out.log_bound));
  return out;
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
}

}  // namespace

ModelSequence::ModelSequence(std::vector<Count> change_points, std::vector<ModelClass> models)
    : change_points_(std::move(change_points)), models_(std::move(models)) {
  if (models_.size() != change_points_.size() + 1)
    throw Error(ErrorCode::InvalidArgument, "a model sequence needs one class per segment");
  Count prev = 0;
  for (Count t : change_points_) {
    if (t <= prev)
      throw Error(ErrorCode::InvalidChangePoints, "change points must be positive and increasing");
    prev = t;
  }
  for (std::size_t i = 1; i < models_.size(); ++i) {
    if (models_[i] == models_[i - 1])
      throw Error(ErrorCode::AdjacentEqualModels,
                  "segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                      " share the class " + models_[i].spec_string());
    if (models_[i].alphabet_size() != models_[0].alphabet_size())
      throw Error(ErrorCode::InvalidArgument, "segment classes disagree on the alphabet");
  }
}

std::vector<Count> ModelSequence::segment_lengths(Count n) const {
  return nml_ddim::segment_lengths(change_points_, n);
}

double sequence_codelength(std::span<const Symbol> x, const ModelSequence& ms, Method method) {
  const Count n = static_cast<Count>(x.size());
  if (n == 0) throw Error(ErrorCode::EmptySequence, "codelength of an empty sequence");
  if (!ms.change_points().empty() && ms.change_points().back() >= n)
    throw Error(ErrorCode::EmptySegment, "the last segment would be empty");
  double total = 0.0;
  std::size_t pos = 0;
  const auto lengths = ms.segment_lengths(n);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto len = static_cast<std::size_t>(lengths[i]);
    const auto stat = sufficient_stat(x.subspan(pos, len), ms.alphabet_size());
    total += nml_codelength(ms.models()[i], stat, method).total;
    pos += len;
  }
  return total;
}

double kraft_model_sequence_code(std::size_t num_changes, Count n, std::size_t family_size) {
  if (n < 1 || static_cast<Count>(num_changes) > n - 1)
    throw Error(ErrorCode::InvalidArgument, "need 0 <= changes <= n - 1");
  return std::log(static_cast<double>(n)) +
         log_binomial(n - 1, static_cast<Count>(num_changes)) +
         static_cast<double>(num_changes + 1) * std::log(static_cast<double>(family_size));
}

double kraft_model_sequence_code(const ModelSequence& ms, Count n, std::size_t family_size) {
  ms.segment_lengths(n);
  return kraft_model_sequence_code(ms.num_changes(), n, family_size);
}

Segmentation dms_segment(std::span<const Symbol> x, const ModelFamily& family,
                         const DmsOptions& options) {
  const Count n = static_cast<Count>(x.size());
  if (n == 0) throw Error(ErrorCode::EmptySequence, "cannot segment an empty sequence");
  const Count min_len = options.min_segment_len;
  if (min_len < 1) throw Error(ErrorCode::InvalidArgument, "min_segment_len must be >= 1");
  if (min_len > n) throw Error(ErrorCode::InfeasibleConstraints, "min_segment_len exceeds n");
  const std::size_t max_changes =
      options.max_changes.value_or(static_cast<std::size_t>(n / min_len - 1));
  if (static_cast<double>(min_len) * static_cast<double>(max_changes + 1) > static_cast<double>(n))
    throw Error(ErrorCode::InfeasibleConstraints,
                "min_segment_len * (max_changes + 1) exceeds the sequence length");

  const std::size_t s = family.size();
  const SegmentCosts cost(x, family, options.method);

  // Data cost with any number of segments and no adjacency rule: a lower
  // bound on the data term of every candidate.
  std::vector<double> free_cost(n + 1, kInf);
  free_cost[0] = 0.0;
  for (Count j = min_len; j <= n; ++j)
    for (Count i = 0; i + min_len <= j; ++i) {
      if (free_cost[i] == kInf) continue;
      for (std::size_t a = 0; a < s; ++a)
        free_cost[j] = std::min(free_cost[j], free_cost[i] + cost(i, j, a));
    }

  std::vector<double> code(max_changes + 1);
  for (std::size_t c = 0; c <= max_changes; ++c) code[c] = kraft_model_sequence_code(c, n, s);
  std::vector<double> code_floor(max_changes + 2, kInf);
  for (std::size_t c = max_changes + 1; c-- > 0;) code_floor[c] = std::min(code[c], code_floor[c + 1]);

  // layers[c][j * s + a]: best data cost of x[0, j) in c + 1 segments ending in class a
  std::vector<std::vector<Cell>> layers;
  double incumbent = kInf;
  std::size_t best_changes = 0, best_model = 0;
  for (std::size_t c = 0; c <= max_changes; ++c) {
    if (free_cost[n] + code_floor[c] > incumbent + kPruneSlack) break;
    std::vector<Cell> layer((n + 1) * s);
    if (c == 0) {
      for (Count j = min_len; j <= n; ++j)
        for (std::size_t a = 0; a < s; ++a) layer[j * s + a] = Cell{cost(0, j, a), 0, 0};
    } else {
      const auto& prev = layers.back();
      const Count first_end = static_cast<Count>(c) * min_len;
      for (Count i = first_end; i + min_len <= n; ++i) {
        // best and runner-up predecessor classes at i, lowest index on ties
        std::size_t b1 = s, b2 = s;
        for (std::size_t b = 0; b < s; ++b) {
          const double v = prev[i * s + b].value;
          if (v == kInf) continue;
          if (b1 == s || v < prev[i * s + b1].value) {
            b2 = b1;
            b1 = b;
          } else if (b2 == s || v < prev[i * s + b2].value) {
            b2 = b;
          }
        }
        if (b1 == s) continue;
        for (std::size_t a = 0; a < s; ++a) {
          const std::size_t b = b1 != a ? b1 : b2;
          if (b == s) continue;
          const double base = prev[i * s + b].value;
          for (Count j = i + min_len; j <= n; ++j) {
            const double v = base + cost(i, j, a);
            Cell& cell = layer[j * s + a];
            if (v < cell.value) cell = Cell{v, i, b};
          }
        }
      }
    }
    for (std::size_t a = 0; a < s; ++a) {
      const double total = layer[n * s + a].value + code[c];
      if (total < incumbent) {
        incumbent = total;
        best_changes = c;
        best_model = a;
      }
    }
    layers.push_back(std::move(layer));
  }
  if (incumbent == kInf)
    throw Error(ErrorCode::SupportViolation, "no segmentation assigns the data finite codelength");

  std::vector<Count> change_points;
  std::vector<std::size_t> indices;
  Count j = n;
  std::size_t a = best_model;
  for (std::size_t c = best_changes + 1; c-- > 0;) {
    const Cell& cell = layers[c][j * s + a];
    indices.push_back(a);
    if (c > 0) change_points.push_back(cell.from);
    j = cell.from;
    a = cell.prev_model;
  }
  std::reverse(change_points.begin(), change_points.end());
  std::reverse(indices.begin(), indices.end());
  return assemble(x, family, std::move(change_points), std::move(indices), options.method);
}

std::string_view hypothesis_name(Hypothesis h) noexcept { return h == Hypothesis::H0 ? "H0" : "H1"; }

ChangeTestResult mdl_change_statistic(std::span<const Symbol> x, const ModelSequence& reference,
                                      const ModelFamily& family, double epsilon, Method method) {
  check_epsilon(epsilon);
  if (reference.alphabet_size() != family.alphabet_size())
    throw Error(ErrorCode::InvalidArgument, "reference and family disagree on the alphabet");
  ChangeTestResult result;
  result.epsilon = epsilon;
  result.reference_codelength = sequence_codelength(x, reference, method);
  DmsOptions options;
  options.method = method;
  result.best_alternative = dms_segment(x, family, options);
  result.statistic = result.reference_codelength - result.best_alternative->total_codelength -
                     static_cast<double>(x.size()) * epsilon;
  result.decision = result.statistic > 0.0 ? Hypothesis::H1 : Hypothesis::H0;
  return result;
}

ChangeTestResult single_change_statistic(std::span<const Symbol> x, Count t,
                                         const ModelFamily& family, double epsilon,
                                         Method method) {
  check_epsilon(epsilon);
  const Count n = static_cast<Count>(x.size());
  if (t <= 0 || t >= n)
    throw Error(ErrorCode::InvalidSplit,
                "split " + std::to_string(t) + " must lie strictly inside (0, " +
                    std::to_string(n) + ")");
  const int m = family.alphabet_size();
  const auto whole = mdl_learn(family, sufficient_stat(x, m), method);
  const auto left = mdl_learn(family, sufficient_stat(x.first(t), m), method);
  const auto right = mdl_learn(family, sufficient_stat(x.subspan(t), m), method);
  const double log_s = std::log(static_cast<double>(family.size()));

  SplitChoice split;
  split.t = t;
  split.whole_index = whole.selected_index;
  split.left_index = left.selected_index;
  split.right_index = right.selected_index;
  split.whole_codelength = whole.reports[whole.selected_index].total + log_s;
  split.split_codelength = left.reports[left.selected_index].total +
                           right.reports[right.selected_index].total + 2.0 * log_s;

  ChangeTestResult result;
  result.epsilon = epsilon;
  result.statistic =
      split.whole_codelength - split.split_codelength - static_cast<double>(n) * epsilon;
  result.decision = result.statistic > 0.0 ? Hypothesis::H1 : Hypothesis::H0;
  result.split = split;
  return result;
}

double multiple_test_type1_bound(Count n, double epsilon, std::span<const Count> segment_lengths,
                                 std::span<const ModelClass> classes, Method method) {
  check_epsilon(epsilon);
  if (segment_lengths.size() != classes.size() || classes.empty())
    throw Error(ErrorCode::InvalidArgument, "one class per segment is required");
  Count total = 0;
  for (Count len : segment_lengths) {
    if (len < 1) throw Error(ErrorCode::EmptySegment, "segment lengths must be >= 1");
    total += len;
  }
  if (total != n) throw Error(ErrorCode::HorizonMismatch, "segment lengths do not add up to n");
  const double log_bound = -static_cast<double>(n) * epsilon +
                           log_complexity_sum(segment_lengths, classes, method);
  return std::min(1.0, std::exp(log_bound));
}

double multiple_test_type1_bound(Count n, double epsilon, const ModelSequence& reference,
                                 Method method) {
  const auto lengths = reference.segment_lengths(n);
  return multiple_test_type1_bound(n, epsilon, lengths, reference.models(), method);
}

Type2Bound multiple_test_type2_bound(Count n, double epsilon, const ModelSequence& reference,
                                     const ModelSequence& truth,
                                     std::span<const std::vector<double>> truth_params,
                                     std::size_t family_size, Method method) {
  check_epsilon(epsilon);
  const auto ref_lengths = reference.segment_lengths(n);
  const auto true_lengths = truth.segment_lengths(n);
  if (truth_params.size() != true_lengths.size())
    throw Error(ErrorCode::InvalidArgument, "one parameter vector per true segment is required");

  std::vector<DistributionHandle> ref_parts, true_parts;
  for (std::size_t i = 0; i < ref_lengths.size(); ++i)
    ref_parts.push_back(DistributionHandle::nml(reference.models()[i], ref_lengths[i], method));
  for (std::size_t i = 0; i < true_lengths.size(); ++i)
    true_parts.push_back(DistributionHandle::fixed_product(truth_params[i], true_lengths[i]));
  const double distance = bhattacharyya(DistributionHandle::concat(ref_parts),
                                        DistributionHandle::concat(true_parts));

  const double slack = log_complexity_sum(true_lengths, truth.models(), method) +
                       kraft_model_sequence_code(truth, n, family_size) +
                       static_cast<double>(n) * epsilon;
  return finish_type2(distance, n, slack);
}

double single_test_type1_bound(Count n, double epsilon, const ModelClass& null_class,
                               std::size_t family_size, Method method) {
  check_epsilon(epsilon);
  const double log_bound = -static_cast<double>(n) * epsilon +
                           log_parametric_complexity(null_class, n, method) +
                           std::log(static_cast<double>(family_size));
  return std::min(1.0, std::exp(log_bound));
}

Type2Bound single_test_type2_bound(Count n, Count t, double epsilon, const ModelFamily& family,
                                   const ModelClass& left_class, std::span<const double> left_params,
                                   const ModelClass& right_class,
                                   std::span<const double> right_params, Method method) {
  check_epsilon(epsilon);
  if (t <= 0 || t >= n) throw Error(ErrorCode::InvalidSplit, "split must lie strictly inside (0, n)");
  const auto pbar = DistributionHandle::family_nml(family.members(), n, method);
  const DistributionHandle parts[] = {
      DistributionHandle::fixed_product({left_params.begin(), left_params.end()}, t),
      DistributionHandle::fixed_product({right_params.begin(), right_params.end()}, n - t)};
  const double distance = bhattacharyya(DistributionHandle::concat(parts), pbar);
  const double log_family_normalizer =
      std::get<FamilyNmlLaw>(pbar.segments().front().law).log_normalizer;
  const double slack = log_family_normalizer + log_parametric_complexity(left_class, t, method) +
                       log_parametric_complexity(right_class, n - t, method) +
                       2.0 * std::log(static_cast<double>(family.size())) +
                       static_cast<double>(n) * epsilon;
  return finish_type2(distance, n, slack);
}

}  // namespace nml_ddim
