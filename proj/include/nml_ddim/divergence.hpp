#ifndef NML_DDIM_DIVERGENCE_HPP
#define NML_DDIM_DIVERGENCE_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "nml_ddim/model_families.hpp"
#include "nml_ddim/nml.hpp"

namespace nml_ddim {

/// i.i.d. segment with explicit parameters.
struct ProductLaw {
  std::vector<double> params;
};

/// NML distribution of a class at the segment's own length.
struct NmlLaw {
  ModelClass model;
  double log_complexity = 0.0;
};

/// Family-level NML: pbar(x) = max_P exp(-L_NML(x;P) - ln s) / C_n(F),
/// normalized over all sequences of the segment length.
struct FamilyNmlLaw {
  std::vector<ModelClass> members;
  std::vector<double> log_complexities;
  double log_normalizer = 0.0;
};

using SegmentLaw = std::variant<ProductLaw, NmlLaw, FamilyNmlLaw>;

struct Segment {
  Count length = 0;
  SegmentLaw law;
};

/// ln of the probability a segment law assigns to one specific sequence with
/// the given counts. Every law here is exchangeable within its segment.
double segment_log_prob(const Segment& segment, std::span<const Count> counts);

enum class HandleKind { FixedProduct, Nml, ConcatProduct };

/// A distribution over X^n built as an ordered concatenation of independent
/// exchangeable segments.
class DistributionHandle {
 public:
  static DistributionHandle fixed_product(std::vector<double> params, Count n);
  static DistributionHandle nml(const NmlDistribution& dist);
  static DistributionHandle nml(const ModelClass& model, Count n, Method method = Method::Auto);
  /// Family-level NML over members (uniform ln s model code), evaluated by
  /// count-lattice enumeration.
  static DistributionHandle family_nml(std::vector<ModelClass> members, Count n,
                                       Method method = Method::Auto);
  static DistributionHandle concat(std::span<const DistributionHandle> parts);

  HandleKind kind() const noexcept;
  Count n() const noexcept { return n_; }
  int alphabet_size() const noexcept { return alphabet_size_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  /// Cumulative segment end positions.
  std::vector<Count> boundaries() const;
  bool all_product() const noexcept;

  double log_prob(std::span<const Symbol> seq) const;

 private:
  DistributionHandle(std::vector<Segment> segments, int alphabet_size);

  std::vector<Segment> segments_;
  Count n_ = 0;
  int alphabet_size_ = 0;
};

/// Draws sequences from a handle. Count-class tables of non-product segments
/// are built once at construction.
class HandleSampler {
 public:
  explicit HandleSampler(const DistributionHandle& handle);
  Sequence draw(Rng& rng) const;

 private:
  struct SegmentTable {
    std::vector<std::vector<Count>> classes;
    std::vector<double> cdf;
  };
  DistributionHandle handle_;
  std::vector<std::shared_ptr<const SegmentTable>> tables_;
};

/// ln sum_y p(y)^alpha q(y)^(1-alpha), exact.
///
/// Works segment-by-segment when the boundaries agree. When they differ, one
/// side must be all-product: its pieces inside each segment of the other side
/// are convolved over the count lattice. Otherwise throws ExactIntractable.
double log_affinity(const DistributionHandle& p, const DistributionHandle& q, double alpha);

/// Per-symbol Bhattacharyya distance -(1/n) ln sum_y sqrt(p(y) q(y)), exact.
double bhattacharyya(const DistributionHandle& p, const DistributionHandle& q);

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Monte Carlo Bhattacharyya distance: y ~ p, averaging sqrt(q(y)/p(y)).
/// The standard error is propagated through the log by the delta method.
/// Trial i uses the substream mix_seed(seed, i).
MonteCarloEstimate bhattacharyya_monte_carlo(const DistributionHandle& p,
                                             const DistributionHandle& q, std::size_t trials,
                                             std::uint64_t seed);

/// (1 / (2 alpha (1-alpha))) (1 - (sum_y p^alpha q^(1-alpha))^(1/n)).
double alpha_divergence(const DistributionHandle& p, const DistributionHandle& q, double alpha);

/// alpha_divergence at alpha = 1/2.
double hellinger(const DistributionHandle& p, const DistributionHandle& q);

/// sum_j p_j ln(p_j / q_j).
double kl_per_symbol(std::span<const double> p, std::span<const double> q);

}  // namespace nml_ddim

#endif  // NML_DDIM_DIVERGENCE_HPP
