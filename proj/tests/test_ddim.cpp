#include <cmath>

#include "doctest.h"
#include "nml_ddim/ddim.hpp"
#include "nml_ddim/error.hpp"

using namespace nml_ddim;

namespace {

const ModelClass kFair = ModelClass::fixed({0.5, 0.5});
const ModelClass kBern = ModelClass::bernoulli();

}  // namespace

TEST_CASE("parametric") {
  CHECK(ddim_parametric(kBern).value == 1.0);
  CHECK(ddim_parametric(ModelClass::multinomial(4)).value == 3.0);
  CHECK(ddim_parametric(kFair).value == 0.0);
}

TEST_CASE("complexity slope") {
  const std::vector<Count> grid{100, 200, 400, 800};
  const auto b = ddim_slope(kBern, grid);
  CHECK(std::abs(b.value - 1.0) <= 0.05);
  CHECK(b.details.log_complexities.size() == 4);
  CHECK(std::abs(ddim_slope(ModelClass::multinomial(3), grid).value - 2.0) <= 0.1);
  CHECK(ddim_slope(kFair, grid).value == 0.0);
  const std::vector<Count> small{50, 100, 200, 400}, large{400, 800, 1600, 3200};
  for (int k = 1; k <= 3; ++k) {
    const auto model = ModelClass::multinomial(k + 1);
    CHECK(std::abs(ddim_slope(model, large).value - k) < std::abs(ddim_slope(model, small).value - k));
  }
  const std::vector<Count> bad{10, 10};
  CHECK_THROWS_AS(ddim_slope(kBern, bad), Error);
  const std::vector<Count> one{10};
  CHECK_THROWS_AS(ddim_slope(kBern, one), Error);
}

TEST_CASE("fusion prior") {
  CHECK(ddim_fusion_prior(FusionSpec(std::vector{kBern, ModelClass::multinomial(3)}, {0.5, 0.5})).value ==
        1.5);
  CHECK_THROWS_AS(FusionSpec(std::vector{kBern, kBern}, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(ddim_fusion_posterior(FusionSpec(std::vector{kBern, ModelClass::multinomial(3)}, {0.5, 0.5}),
                                        Sequence{0, 1}),
                  Error);
  CHECK(ddim_fusion_prior(FusionSpec(ModelFamily({kBern}), {1.0})).value == 1.0);
  CHECK(ddim_fusion_prior(FusionSpec(ModelFamily({ModelClass::fixed({0.25, 0.25, 0.5}),
                                                  ModelClass::multinomial(3)}),
                                     {0.25, 0.75}))
            .value == 1.5);
  CHECK(ddim_fusion_prior(FusionSpec(ModelFamily({ModelClass::fixed({0.25, 0.25, 0.25, 0.25}),
                                                  ModelClass::multinomial(4)}),
                                     {0.25, 0.75}))
            .value == 2.25);
  CHECK_THROWS_AS(FusionSpec(ModelFamily({kBern}), {0.9}), Error);
  CHECK_THROWS_AS(FusionSpec(ModelFamily({kBern}), {1.0}, 0.0), Error);
  CHECK_THROWS_AS(FusionSpec(ModelFamily({kBern}), {1.0}, 1.5), Error);
}

TEST_CASE("fusion posterior") {
  const ModelFamily family({kFair, kBern});
  const FusionSpec uniform(family, {0.5, 0.5}, 1.0);
  const std::vector<double> skew{0.05, 0.95};
  const auto biased = sample(kBern, skew, 500, 31);
  const double v = ddim_fusion_posterior(uniform, biased).value;
  CHECK(v >= 0.95);
  CHECK(v <= 1.0);

  Sequence balanced(250, 0);
  balanced.insert(balanced.end(), 250, 1);
  const double w = ddim_fusion_posterior(uniform, balanced).value;
  CHECK(w >= 0.0);
  CHECK(w <= 0.2);

  CHECK(ddim_fusion_posterior(FusionSpec(ModelFamily({kBern}), {1.0}), balanced).value == 1.0);

  // posterior weights come from exp(-beta (L - ln w)), normalized
  const auto est = ddim_fusion_posterior(FusionSpec(family, {0.3, 0.7}, 0.5), Sequence{0, 0, 0, 1});
  const double a = -0.5 * (est.details.codelengths[0] - std::log(0.3));
  const double b = -0.5 * (est.details.codelengths[1] - std::log(0.7));
  CHECK(est.value == doctest::Approx(std::exp(b) / (std::exp(a) + std::exp(b))).epsilon(1e-12));

  // convex-combination bounds and the small-beta limit
  const ModelFamily three({kFair, kBern, ModelClass::fixed({0.9, 0.1})});
  const FusionSpec prior_like(three, {1.0 / 3, 1.0 / 3, 1.0 - 2.0 / 3}, 1e-9);
  for (int seed = 0; seed < 20; ++seed) {
    const std::vector<double> theta{0.1 + 0.04 * seed, 0.9 - 0.04 * seed};
    const auto x = sample(kBern, theta, 60, seed);
    const double post = ddim_fusion_posterior(FusionSpec(three, {0.2, 0.5, 0.3}), x).value;
    CHECK(post >= 0.0);
    CHECK(post <= 1.0);
    CHECK(ddim_fusion_posterior(prior_like, x).value ==
          doctest::Approx(ddim_fusion_prior(prior_like).value).epsilon(1e-6));
  }
  CHECK_THROWS_AS(ddim_fusion_posterior(uniform, Sequence{}), Error);
}

TEST_CASE("concatenation") {
  CHECK(ddim_concat(ConcatSpec({kBern, ModelClass::multinomial(3)}, {0.5, 0.5})).value == 1.5);
  CHECK(ddim_concat(ConcatSpec({ModelClass::multinomial(4)}, {1.0})).value == 3.0);
  CHECK(ddim_concat(ConcatSpec({kFair, kBern}, {0.9, 0.1})).value == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(ConcatSpec({kFair, kBern}, {1.0, 0.0}), Error);
  CHECK_THROWS_AS(ConcatSpec({kFair, kBern}, {0.5, 0.6}), Error);
  // scaling the raw ratios before normalizing leaves the value unchanged
  const std::vector<double> raw{2.0, 3.0, 5.0};
  for (double scale : {0.1, 1.0, 7.0}) {
    double total = 0.0;
    for (double r : raw) total += r * scale;
    std::vector<double> ratios;
    for (double r : raw) ratios.push_back(r * scale / total);
    const double sum = ratios[0] + ratios[1] + ratios[2];
    ratios[2] += 1.0 - sum;
    CHECK(ddim_concat(ConcatSpec({kFair, kBern, ModelClass::multinomial(2)}, ratios)).value ==
          doctest::Approx(0.8).epsilon(1e-12));
  }
}

TEST_CASE("ratios from a segmentation") {
  const std::vector<Count> mid{50};
  auto r = ratios_from_segmentation(mid, 100);
  CHECK(r[0] == doctest::Approx(0.5));
  CHECK(r[1] == doctest::Approx(0.5));
  const std::vector<Count> early{10};
  r = ratios_from_segmentation(early, 1000);
  CHECK(r[0] == doctest::Approx(std::log(10.0) / (std::log(10.0) + std::log(990.0))));
  CHECK(r[0] == doctest::Approx(0.250).epsilon(1e-3));
  CHECK(ratios_from_segmentation({}, 10) == std::vector<double>{1.0});
  const std::vector<Count> unit{1, 2};
  r = ratios_from_segmentation(unit, 4);
  CHECK(r[0] == doctest::Approx(std::log(2.0) / (3 * std::log(2.0))));
  const std::vector<Count> bad{5, 5};
  try {
    ratios_from_segmentation(bad, 10);
    FAIL("expected InvalidChangePoints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidChangePoints);
  }
  const std::vector<Count> out_of_range{10};
  CHECK_THROWS_AS(ratios_from_segmentation(out_of_range, 10), Error);
}
