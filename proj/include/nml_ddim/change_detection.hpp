#ifndef NML_DDIM_CHANGE_DETECTION_HPP
#define NML_DDIM_CHANGE_DETECTION_HPP

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nml_ddim/mdl_learning.hpp"

namespace nml_ddim {

/// Change points t_1 < ... < t_m and the m+1 classes of the segments
/// 1..t_1, t_1+1..t_2, ..., t_m+1..n. Adjacent classes must differ.
class ModelSequence {
 public:
  ModelSequence(std::vector<Count> change_points, std::vector<ModelClass> models);

  const std::vector<Count>& change_points() const noexcept { return change_points_; }
  const std::vector<ModelClass>& models() const noexcept { return models_; }
  std::size_t num_changes() const noexcept { return change_points_.size(); }
  int alphabet_size() const noexcept { return models_.front().alphabet_size(); }

  /// Throws InvalidChangePoints if the last change point is not below n.
  std::vector<Count> segment_lengths(Count n) const;

 private:
  std::vector<Count> change_points_;
  std::vector<ModelClass> models_;
};

struct Segmentation {
  ModelSequence model_sequence;
  /// Position of each segment's class in the family the search ran over.
  std::vector<std::size_t> model_indices;
  std::vector<double> segment_codelengths;
  double data_codelength = 0.0;
  /// Uniform Kraft code for the model sequence (see kraft_model_sequence_code).
  double model_code = 0.0;
  double total_codelength = 0.0;
};

/// Sum of segment NML codelengths.
double sequence_codelength(std::span<const Symbol> x, const ModelSequence& ms,
                           Method method = Method::Auto);

/// ln n + ln binom(n-1, m) + (m+1) ln s: uniform codes for the number of
/// changes, their positions and the segment classes.
double kraft_model_sequence_code(std::size_t num_changes, Count n, std::size_t family_size);
double kraft_model_sequence_code(const ModelSequence& ms, Count n, std::size_t family_size);

struct DmsOptions {
  /// Defaults to the largest count the segment-length floor allows.
  std::optional<std::size_t> max_changes;
  Count min_segment_len = 1;
  Method method = Method::Auto;
};

/// Exact minimizer of L(x; P) + l(P) over model sequences drawn from the
/// family (adjacent classes distinct), by dynamic programming over
/// (segment count, end position, last class). Ties go to fewer segments;
/// remaining ties follow the scan order (earlier split, lower family index).
Segmentation dms_segment(std::span<const Symbol> x, const ModelFamily& family,
                         const DmsOptions& options = {});

enum class Hypothesis { H0, H1 };
std::string_view hypothesis_name(Hypothesis h) noexcept;

/// Best single split found by the single-change test.
struct SplitChoice {
  Count t = 0;
  std::size_t whole_index = 0;
  std::size_t left_index = 0;
  std::size_t right_index = 0;
  /// min_P { L_NML(x; P) } + ln s
  double whole_codelength = 0.0;
  /// min { L_NML(x+; P') + L_NML(x-; P'') } + 2 ln s
  double split_codelength = 0.0;
};

struct ChangeTestResult {
  double statistic = 0.0;
  Hypothesis decision = Hypothesis::H0;
  double epsilon = 0.0;
  /// Multiple test: L(x; reference). Unused by the single test.
  double reference_codelength = 0.0;
  std::optional<Segmentation> best_alternative;
  std::optional<SplitChoice> split;
};

/// L(x; reference) - min_P { L(x; P) + l(P) } - n eps. Decides H1 (a change
/// away from the reference) when the statistic is positive.
ChangeTestResult mdl_change_statistic(std::span<const Symbol> x, const ModelSequence& reference,
                                      const ModelFamily& family, double epsilon,
                                      Method method = Method::Auto);

/// Single change at t: min_P {L + ln s} - min_{P',P''} {L(x+) + L(x-) + 2 ln s}
/// - n eps. Decides H1 when the statistic is positive.
ChangeTestResult single_change_statistic(std::span<const Symbol> x, Count t,
                                         const ModelFamily& family, double epsilon,
                                         Method method = Method::Auto);

/// Type I bound of the multiple test, exp(-n eps + sum_i ln C_{len_i}(P_i)),
/// clipped to 1. The classes need not be adjacent-distinct here.
double multiple_test_type1_bound(Count n, double epsilon, std::span<const Count> segment_lengths,
                                 std::span<const ModelClass> classes,
                                 Method method = Method::Auto);
double multiple_test_type1_bound(Count n, double epsilon, const ModelSequence& reference,
                                 Method method = Method::Auto);

struct Type2Bound {
  /// min(1, exp(log_bound))
  double bound = 1.0;
  double log_bound = 0.0;
  /// Bhattacharyya distance between the null-side coding distribution and
  /// the true distribution.
  double distance = 0.0;
};

/// Type II bound of the multiple test when the data follow `truth` (a model
/// sequence over the family) with the given per-segment parameters:
///   exp(-n d_B(ref NML, truth) + (1/2)(sum_j ln C(truth_j) + l(truth) + n eps)).
Type2Bound multiple_test_type2_bound(Count n, double epsilon, const ModelSequence& reference,
                                     const ModelSequence& truth,
                                     std::span<const std::vector<double>> truth_params,
                                     std::size_t family_size, Method method = Method::Auto);

/// Type I bound of the single test under a no-change null P0 in the family:
/// exp(-n eps + ln C_n(P0) + ln s), clipped to 1.
double single_test_type1_bound(Count n, double epsilon, const ModelClass& null_class,
                               std::size_t family_size, Method method = Method::Auto);

/// Type II bound of the single test when x+ ~ p1 in P1 and x- ~ p2 in P2:
///   exp(-n d_B(truth, pbar) + (1/2)(ln C_n(F) + ln C_t(P1) + ln C_{n-t}(P2)
///       + 2 ln s + n eps)),
/// with pbar the family-level NML distribution.
Type2Bound single_test_type2_bound(Count n, Count t, double epsilon, const ModelFamily& family,
                                   const ModelClass& left_class, std::span<const double> left_params,
                                   const ModelClass& right_class,
                                   std::span<const double> right_params,
                                   Method method = Method::Auto);

}  // namespace nml_ddim

#endif  // NML_DDIM_CHANGE_DETECTION_HPP
