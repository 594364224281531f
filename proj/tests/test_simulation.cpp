#include <cmath>
#include <set>

#include "doctest.h"
#include "nml_ddim/error.hpp"
#include "nml_ddim/io.hpp"
#include "nml_ddim/simulation.hpp"

using namespace nml_ddim;

namespace {

const ModelClass kFair = ModelClass::fixed({0.5, 0.5});
const ModelClass kBern = ModelClass::bernoulli();

SegmentSpec seg(const ModelClass& m, std::vector<double> p, double fraction = 1.0) {
  return SegmentSpec{m, std::move(p), fraction};
}

ExperimentSpec convergence_spec() {
  ExperimentSpec s;
  s.experiment = ExperimentKind::ConvergenceRate;
  s.family = {kFair, kBern};
  s.true_member = 1;
  s.true_params = {0.2, 0.8};
  s.n_grid = {50, 100, 200};
  s.epsilon_grid = {0.05, 0.1, 1.0};
  s.bound_targets = {0.5, 0.1, 0.01};
  s.trials = 2000;
  s.master_seed = 20240611;
  return s;
}

ExperimentSpec type2_multiple_spec() {
  const auto up = ModelClass::fixed({0.8, 0.2});
  const auto down = ModelClass::fixed({0.2, 0.8});
  ExperimentSpec s;
  s.experiment = ExperimentKind::Type2Error;
  s.family = {up, down, kBern};
  s.mode = TestMode::Multiple;
  s.reference = {seg(kBern, {})};
  s.truth = {seg(up, {0.8, 0.2}, 0.5), seg(down, {0.2, 0.8}, 0.5)};
  s.n_grid = {50, 100, 200};
  s.epsilon_grid = {0.01};
  s.trials = 500;
  s.master_seed = 99;
  return s;
}

ExperimentSpec trace_spec(double beta) {
  ExperimentSpec s;
  s.experiment = ExperimentKind::PosteriorDdimTrace;
  s.family = {kFair, kBern};
  s.beta = beta;
  s.stream = {seg(kFair, {0.5, 0.5}, 0.5), seg(kBern, {0.2, 0.8}, 0.5)};
  s.n_grid = {50, 100, 250, 500, 600, 750, 1000};
  s.trials = 1;
  s.master_seed = 3;
  return s;
}

const ReportRow& find_row(const ExperimentReport& r, std::string_view metric, Count n,
                          std::string_view label) {
  for (const auto& row : r.rows)
    if (row.metric == metric && row.n == n && row.label == label) return row;
  FAIL("row not found");
  return r.rows.front();
}

/// Independent Wilson oracle: the two roots of (p_hat - p)^2 = z^2 p (1-p) / n.
std::pair<double, double> wilson_by_quadratic(double events, double trials, double z) {
  const double ph = events / trials;
  const double a = 1.0 + z * z / trials;
  const double b = -(2.0 * ph + z * z / trials);
  const double c = ph * ph;
  const double disc = std::sqrt(b * b - 4.0 * a * c);
  return {(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)};
}

}  // namespace

TEST_CASE("wilson interval against the quadratic roots") {
  for (auto [k, t] : {std::pair<std::size_t, std::size_t>{0, 2000}, {12, 2000}, {250, 500},
                      {499, 500}, {1, 1}}) {
    const auto [lo, hi] = wilson_interval(k, t);
    const auto [olo, ohi] = wilson_by_quadratic(double(k), double(t), kWilsonZ);
    CHECK(lo == doctest::Approx(std::max(0.0, olo)).epsilon(1e-12).scale(1e-12));
    CHECK(hi == doctest::Approx(std::min(1.0, ohi)).epsilon(1e-12));
    CHECK(lo <= double(k) / double(t));
    CHECK(hi >= double(k) / double(t));
  }
  // zero events: lower = 0, upper = z^2 / (n + z^2)
  const double z2 = kWilsonZ * kWilsonZ;
  CHECK(wilson_interval(0, 2000).first == 0.0);
  CHECK(wilson_interval(7, 7).second == 1.0);
  CHECK(wilson_interval(0, 2000).second == doctest::Approx(z2 / (2000 + z2)).epsilon(1e-12));
}

TEST_CASE("frequency classification") {
  CHECK(classify_frequency(0, 2000, 1.0) == BoundStatus::Vacuous);
  CHECK(classify_frequency(2000, 2000, 3.0) == BoundStatus::Vacuous);
  CHECK(classify_frequency(0, 2000, 0.01) == BoundStatus::Satisfied);
  CHECK(classify_frequency(10, 2000, 0.01) == BoundStatus::Satisfied);
  CHECK(classify_frequency(40, 2000, 0.01) == BoundStatus::Violated);
  // below the resolution of 2000 trials
  CHECK(classify_frequency(0, 2000, 1e-6) == BoundStatus::Inconclusive);
  CHECK(classify_frequency(1, 2000, 1e-6) == BoundStatus::Violated);
  CHECK(classify_frequency(30, 2000, 1e-6) == BoundStatus::Violated);
  // a point estimate above the bound alone is not a violation
  CHECK(wilson_interval(21, 2000).first < 0.01);
  CHECK(classify_frequency(21, 2000, 0.01) == BoundStatus::Inconclusive);
}

TEST_CASE("trial seeds") {
  std::set<std::uint64_t> seen;
  for (Count n : {50, 100})
    for (std::size_t t = 0; t < 100; ++t) seen.insert(trial_seed(7, n, t));
  CHECK(seen.size() == 200);
  CHECK(trial_seed(7, 50, 3) == trial_seed(7, 50, 3));
  CHECK(trial_seed(7, 50, 3) != trial_seed(8, 50, 3));
}

TEST_CASE("spec validation") {
  auto s = convergence_spec();
  s.trials = 0;
  CHECK_THROWS_AS(run_convergence_rate(s), Error);
  s = convergence_spec();
  s.n_grid = {100, 50};
  CHECK_THROWS_AS(run_convergence_rate(s), Error);
  s = convergence_spec();
  s.n_grid = {};
  CHECK_THROWS_AS(run_convergence_rate(s), Error);
  s = convergence_spec();
  s.true_member = 0;  // (0.2, 0.8) is not the fair coin
  CHECK_THROWS_AS(run_convergence_rate(s), Error);
  s = convergence_spec();
  CHECK_THROWS_AS(run_type1(s), Error);  // wrong runner for the spec
  auto t = type2_multiple_spec();
  t.truth[1].fraction = 0.6;
  CHECK_THROWS_AS(run_type2(t), Error);
}

TEST_CASE("convergence rate") {
  const auto spec = convergence_spec();
  const auto report = run_convergence_rate(spec);
  std::size_t checked = 0;
  for (const auto& row : report.rows) {
    if (row.metric != "exceedance_rate") continue;
    CHECK(row.bound_status != BoundStatus::Violated);
    // bound and status are recomputable from the stored inputs
    CHECK(*recompute_bound(spec.experiment, row) == doctest::Approx(*row.bound).epsilon(1e-12));
    CHECK(classify_frequency(row.events, row.trials, *row.bound) == row.bound_status);
    if (*row.epsilon == 1.0) CHECK(row.events == 0);  // beyond every achievable distance
    ++checked;
  }
  CHECK(checked == 3 * 6);

  // theta* = 0.8, n = 100, eps = 0.1: exact bound exp(-10 + lnC_100 / 2 + ln 2),
  // and the Fixed member (the only one farther than 0.1) is never picked
  const ReportRow* r01 = nullptr;
  for (const auto& r : report.rows)
    if (r.metric == "exceedance_rate" && r.n == 100 && r.epsilon == 0.1) r01 = &r;
  REQUIRE(r01 != nullptr);
  CHECK(*r01->bound == doctest::Approx(std::exp(-10.0 + 0.5 * 2.580971138228230 + std::log(2.0)))
                           .epsilon(1e-12));
  CHECK(r01->events == 0);

  // doubling n at fixed eps does not raise the exceedance frequency
  for (double eps : {0.05, 0.1}) {
    std::vector<const ReportRow*> rows;
    for (const auto& r : report.rows)
      if (r.metric == "exceedance_rate" && r.label == "grid" && *r.epsilon == eps) rows.push_back(&r);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i]->value <= rows[i - 1]->ci_high);
  }

  // targeted epsilons hit their bound values
  const auto& target = find_row(report, "exceedance_rate", 200, "target=0.10000000000000001");
  CHECK(*target.bound == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("agnostic rate") {
  ExperimentSpec s;
  s.experiment = ExperimentKind::AgnosticRate;
  s.family = {kFair, ModelClass::fixed({0.9, 0.1})};
  s.true_params = {0.3, 0.7};
  s.n_grid = {50, 100};
  s.epsilon_grid = {0.05, 0.3};
  s.bound_targets = {0.5, 0.05};
  s.trials = 500;
  s.master_seed = 1;
  const auto report = run_agnostic_rate(s);
  int targets = 0;
  for (const auto& row : report.rows) {
    if (row.metric != "exceedance_rate") continue;
    CHECK(row.bound_status != BoundStatus::Violated);
    const double again = *recompute_bound(s.experiment, row);
    if (std::isinf(*row.bound)) CHECK(std::isinf(again));
    else CHECK(again == doctest::Approx(*row.bound).epsilon(1e-12));
    if (row.label != "grid") {
      ++targets;
      CHECK(*row.bound == doctest::Approx(row.label == "target=0.5" ? 0.5 : 0.05).epsilon(1e-9));
    }
  }
  CHECK(targets == 4);
}

TEST_CASE("expected distance") {
  ExperimentSpec s;
  s.experiment = ExperimentKind::ExpectedDistance;
  s.n_grid = {50, 200, 800};
  s.trials = 300;
  s.master_seed = 5;

  s.family = {kBern};
  const auto single = run_expected_distance(s);
  REQUIRE(single.rows.size() == 3);
  CHECK(single.rows[0].value > single.rows[1].value);
  CHECK(single.rows[1].value > single.rows[2].value);
  // n -> 4n shrinks the mean roughly like ln(n)/n (a factor of about 3)
  CHECK(single.rows[0].value / single.rows[1].value >= 2.0);
  CHECK(single.rows[1].value / single.rows[2].value >= 2.0);
  for (const auto& row : single.rows) {
    CHECK(row.bound_status == BoundStatus::Satisfied);
    CHECK(*recompute_bound(s.experiment, row) == doctest::Approx(*row.bound).epsilon(1e-12));
  }
  CHECK(single.summary.at("pseudo_ddim") == 1.0);

  s.family = {kFair};
  const auto zero = run_expected_distance(s);
  CHECK(zero.summary.at("fitted_coefficient") == 0.0);

  s.family = {kFair, kBern};
  s.weights = {0.5, 0.5};
  const auto fused = run_expected_distance(s);
  CHECK(fused.summary.at("pseudo_ddim") == 0.5);
  CHECK(fused.summary.at("fitted_coefficient") > zero.summary.at("fitted_coefficient"));
  CHECK(fused.summary.at("fitted_coefficient") < single.summary.at("fitted_coefficient"));
}

TEST_CASE("type1 multiple and single") {
  ExperimentSpec s;
  s.experiment = ExperimentKind::Type1Error;
  s.family = {kFair, kBern};
  s.mode = TestMode::Multiple;
  s.reference = {seg(kFair, {0.5, 0.5})};
  s.n_grid = {100};
  s.epsilon_grid = {0.2};
  s.bound_targets = {0.5, 0.05};
  s.trials = 2000;
  s.master_seed = 8;
  const auto report = run_type1(s);
  REQUIRE(report.rows.size() == 3);
  // fixed reference, eps = 0.2, n = 100: bound exp(-20), no rejection at all
  CHECK(report.rows[0].events == 0);
  CHECK(*report.rows[0].bound == doctest::Approx(std::exp(-20.0)).epsilon(1e-12));
  CHECK(report.rows[0].bound_status == BoundStatus::Inconclusive);
  for (const auto& row : report.rows) {
    CHECK(row.bound_status != BoundStatus::Violated);
    CHECK(*recompute_bound(s.experiment, row) == doctest::Approx(*row.bound).epsilon(1e-12));
  }
  CHECK(*report.rows[1].bound == doctest::Approx(0.5).epsilon(1e-12));

  s.mode = TestMode::Single;
  s.bound_targets = {};
  s.epsilon_grid = {0.01};
  s.n_grid = {200};
  s.trials = 500;
  const auto single = run_type1(s);
  REQUIRE(single.rows.size() == 1);
  CHECK(single.rows[0].value <= 0.05);
  CHECK(*single.rows[0].bound ==
        doctest::Approx(std::exp(-2.0 + std::log(2.0))).epsilon(1e-12));
}

TEST_CASE("type2 decay and vacuous degenerate case") {
  const auto s = type2_multiple_spec();
  const auto report = run_type2(s);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].value > report.rows[1].value);
  CHECK(report.rows[1].value > report.rows[2].value);
  for (const auto& row : report.rows) {
    CHECK(row.bound_status != BoundStatus::Violated);
    CHECK(*recompute_bound(s.experiment, row) == doctest::Approx(*row.bound).epsilon(1e-12));
  }

  // alternative equal to the reference: H0 is (almost) always accepted and
  // the bound is vacuous
  auto same = s;
  same.reference = {seg(same.family[0], {})};
  same.truth = {seg(same.family[0], {0.8, 0.2})};
  same.n_grid = {100};
  const auto degenerate = run_type2(same);
  CHECK(degenerate.rows[0].value >= 0.95);
  CHECK(degenerate.rows[0].bound_status == BoundStatus::Vacuous);

  // single-change mode: 0.2 -> 0.8 at n/2
  ExperimentSpec single;
  single.experiment = ExperimentKind::Type2Error;
  single.family = {kFair, kBern};
  single.mode = TestMode::Single;
  single.truth = {seg(kBern, {0.8, 0.2}, 0.5), seg(kBern, {0.2, 0.8}, 0.5)};
  single.n_grid = {200};
  single.epsilon_grid = {0.01};
  single.trials = 500;
  single.master_seed = 4;
  const auto power = run_type2(single);
  CHECK(1.0 - power.rows[0].value >= 0.95);
  CHECK(power.rows[0].bound_status != BoundStatus::Violated);
}

TEST_CASE("ddim slope experiment") {
  ExperimentSpec s;
  s.experiment = ExperimentKind::DdimSlope;
  s.models = {kBern, ModelClass::multinomial(3)};
  s.n_grid = {100, 200, 400, 800};
  const auto report = run_ddim_slope(s);
  CHECK(report.rows.size() == 2 * 5);
  CHECK(find_row(report, "ddim_slope", 800, "bernoulli").value == doctest::Approx(1.0).epsilon(0.05));
  CHECK(find_row(report, "ddim_slope", 800, "multinomial:3").value ==
        doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("posterior trace") {
  const auto full = run_posterior_ddim_trace(trace_spec(1.0));
  CHECK(full.summary.at("final_value") >= 0.9);
  CHECK(full.summary.at("final_value") <= 1.0);
  CHECK(full.summary.at("prior_ddim") == 0.5);

  auto pure = trace_spec(1.0);
  pure.stream = {seg(kFair, {0.5, 0.5})};
  pure.trials = 20;
  const auto zero = run_posterior_ddim_trace(pure);
  CHECK(zero.summary.at("final_value") <= 0.2);

  // tempering pulls every trace point toward the prior value
  const auto tempered = run_posterior_ddim_trace(trace_spec(0.5));
  REQUIRE(tempered.rows.size() == full.rows.size());
  for (std::size_t i = 0; i < full.rows.size(); ++i)
    CHECK(std::abs(tempered.rows[i].value - 0.5) <= std::abs(full.rows[i].value - 0.5) + 1e-15);
}

TEST_CASE("reports do not depend on the worker count") {
  std::vector<ExperimentSpec> specs{convergence_spec(), type2_multiple_spec(), trace_spec(1.0)};
  specs[0].trials = 300;
  ExperimentSpec ed;
  ed.experiment = ExperimentKind::ExpectedDistance;
  ed.family = {kFair, kBern};
  ed.n_grid = {40, 80};
  ed.trials = 200;
  ed.master_seed = 12;
  specs.push_back(ed);
  for (auto spec : specs) {
    spec.workers = 1;
    const auto serial = report_to_json(run_experiment(spec)).dump();
    for (unsigned w : {2u, 3u, 8u}) {
      spec.workers = w;
      CHECK(report_to_json(run_experiment(spec)).dump() == serial);
    }
  }
}
