#ifndef NML_DDIM_SIMULATION_HPP
#define NML_DDIM_SIMULATION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nml_ddim/change_detection.hpp"
#include "nml_ddim/ddim.hpp"

namespace nml_ddim {

enum class ExperimentKind {
  ConvergenceRate,
  AgnosticRate,
  ExpectedDistance,
  Type1Error,
  Type2Error,
  DdimSlope,
  PosteriorDdimTrace,
};

std::string_view experiment_name(ExperimentKind kind) noexcept;
/// Accepts the snake_case names returned by experiment_name.
ExperimentKind parse_experiment(std::string_view text);

/// Multiple: the MDL test against a reference model sequence.
/// Single: the single-change test at one split position.
enum class TestMode { Multiple, Single };
std::string_view test_mode_name(TestMode mode) noexcept;

/// One piece of a generating or reference sequence. Its length is the
/// fraction of n, with change points rounded to the nearest integer.
struct SegmentSpec {
  ModelClass model;
  std::vector<double> params;
  double fraction = 1.0;
};

struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::ConvergenceRate;
  std::vector<ModelClass> family;
  /// Fusion prior (expected distance, posterior trace). Empty means uniform.
  std::vector<double> weights;
  /// Convergence rate: index of the family member p* lies in.
  std::size_t true_member = 0;
  /// p* for the convergence and agnostic experiments.
  std::vector<double> true_params;
  std::vector<Count> n_grid;
  std::vector<double> epsilon_grid;
  /// Extra epsilons are solved so that the bound equals each target.
  std::vector<double> bound_targets;
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;
  Method method = Method::Auto;
  /// Threads used for trials. Never affects results.
  unsigned workers = 1;

  TestMode mode = TestMode::Multiple;
  /// Type I data source and, in multiple mode, the reference sequence.
  std::vector<SegmentSpec> reference;
  /// Type II data source.
  std::vector<SegmentSpec> truth;
  /// Single-mode Type I split position as a fraction of n.
  double split_fraction = 0.5;

  /// Ddim slope: the classes whose slope is estimated over n_grid.
  std::vector<ModelClass> models;

  /// Posterior trace: generator of the stream (length n_grid.back()); the
  /// trace is recorded at every n in n_grid.
  std::vector<SegmentSpec> stream;
  double beta = 1.0;
};

/// Throws InvalidArgument on a spec that no runner can execute.
void validate_experiment_spec(const ExperimentSpec& spec);

enum class BoundStatus { Satisfied, Violated, Vacuous, Inconclusive, NotApplicable };
std::string_view bound_status_name(BoundStatus status) noexcept;

/// One (metric, n, epsilon) cell of a report.
struct ReportRow {
  std::string metric;
  std::string label;
  Count n = 0;
  std::optional<double> epsilon;
  std::size_t trials = 0;
  /// Event count for frequency metrics; 0 for means.
  std::size_t events = 0;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> bound;
  BoundStatus bound_status = BoundStatus::NotApplicable;
  /// Everything recompute_bound needs to rebuild `bound`.
  std::map<std::string, double> inputs;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ReportRow> rows;
  std::map<std::string, double> summary;
  std::optional<double> wall_time_seconds;
};

inline constexpr double kWilsonZ = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(std::size_t events, std::size_t trials,
                                          double z = kWilsonZ);

/// Classification of a frequency against an upper bound:
///   Vacuous       bound >= 1
///   Satisfied     Wilson upper <= bound
///   Violated      Wilson lower > bound
///   Inconclusive  the interval straddles the bound (always the case when
///                 the bound is below the Wilson upper of zero events)
BoundStatus classify_frequency(std::size_t events, std::size_t trials, double bound,
                               double z = kWilsonZ);

/// Rebuilds a row's bound from its stored inputs. Returns nullopt for rows
/// without a bound.
std::optional<double> recompute_bound(ExperimentKind kind, const ReportRow& row);

/// The bound formula of an experiment evaluated on stored inputs; nullopt
/// for experiments without a bound.
std::optional<double> bound_from_inputs(ExperimentKind kind, Count n, double epsilon,
                                        const std::map<std::string, double>& inputs);

/// Seed of trial `trial` at sample size `n`; independent of worker count.
std::uint64_t trial_seed(std::uint64_t master_seed, Count n, std::size_t trial);

ExperimentReport run_convergence_rate(const ExperimentSpec& spec);
ExperimentReport run_agnostic_rate(const ExperimentSpec& spec);
ExperimentReport run_expected_distance(const ExperimentSpec& spec);
ExperimentReport run_type1(const ExperimentSpec& spec);
ExperimentReport run_type2(const ExperimentSpec& spec);
ExperimentReport run_ddim_slope(const ExperimentSpec& spec);
ExperimentReport run_posterior_ddim_trace(const ExperimentSpec& spec);

/// Dispatches on spec.experiment.
ExperimentReport run_experiment(const ExperimentSpec& spec);

}  // namespace nml_ddim

#endif  // NML_DDIM_SIMULATION_HPP
