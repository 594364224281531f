#include <cmath>
#include <string>

#include "doctest.h"
#include "nml_ddim/error.hpp"
#include "nml_ddim/io.hpp"

using namespace nml_ddim;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("family spec parsing") {
  const auto two = parse_family_spec("fixed:0.5,0.5;bernoulli");
  REQUIRE(two.size() == 2);
  CHECK(two[0] == ModelClass::fixed({0.5, 0.5}));
  CHECK(two[1] == ModelClass::bernoulli());

  const auto tri = parse_family_spec("multinomial:3");
  REQUIRE(tri.size() == 1);
  CHECK(tri[0].dimension() == 2);

  CHECK(parse_family_spec("  bernoulli ; fixed:0.25, 0.75 ").size() == 2);
  CHECK(code_of([] { parse_family_spec("bernoulli;bernoulli"); }) == ErrorCode::DuplicateMember);
  CHECK(code_of([] { parse_family_spec("gaussian"); }) == ErrorCode::SpecParseError);
  CHECK(code_of([] { parse_family_spec(""); }) == ErrorCode::SpecParseError);
  CHECK(code_of([] { parse_family_spec("bernoulli;"); }) == ErrorCode::SpecParseError);
  CHECK(code_of([] { parse_family_spec("multinomial:1"); }) == ErrorCode::SpecParseError);
  CHECK(code_of([] { parse_family_spec("fixed:0.5,0.6"); }) == ErrorCode::SpecParseError);
  CHECK(code_of([] { parse_family_spec("bernoulli;multinomial:3"); }) ==
        ErrorCode::SpecParseError);

  // positions point at the offending token
  CHECK(message_of([] { parse_family_spec("bernoulli;fixed:0.5,x"); }).find("position 20") !=
        std::string::npos);
  CHECK(message_of([] { parse_family_spec("bernoulli;nope"); }).find("position 10") !=
        std::string::npos);

  // spec strings round-trip
  for (const auto& m : {ModelClass::bernoulli(), ModelClass::multinomial(5),
                        ModelClass::fixed({0.1, 0.2, 0.7})})
    CHECK(parse_model_class(m.spec_string()) == m);
}

TEST_CASE("data files") {
  const auto jsonl = parse_sequences("[0,1,1]\n\n[1]\n", DataFormat::Jsonl, 2);
  REQUIRE(jsonl.size() == 2);
  CHECK(jsonl[0] == Sequence{0, 1, 1});
  CHECK(jsonl[1] == Sequence{1});
  CHECK(parse_sequences("[]\n", DataFormat::Jsonl, 2).front().empty());
  CHECK(parse_sequences("", DataFormat::Jsonl, 2).empty());

  const auto csv = parse_sequences("0\n1\n\n\n2\n1\n", DataFormat::Csv, 3);
  REQUIRE(csv.size() == 2);
  CHECK(csv[0] == Sequence{0, 1});
  CHECK(csv[1] == Sequence{2, 1});

  CHECK(code_of([] { parse_sequences("[0,2]", DataFormat::Jsonl, 2); }) ==
        ErrorCode::OutOfRangeSymbol);
  CHECK(code_of([] { parse_sequences("0\n-1\n", DataFormat::Csv, 2); }) ==
        ErrorCode::OutOfRangeSymbol);
  CHECK(code_of([] { parse_sequences("[0,0.5]", DataFormat::Jsonl, 2); }) ==
        ErrorCode::DataFormatError);
  CHECK(code_of([] { parse_sequences("{\"a\":1}", DataFormat::Jsonl, 2); }) ==
        ErrorCode::DataFormatError);
  CHECK(code_of([] { parse_sequences("0\nx\n", DataFormat::Csv, 2); }) ==
        ErrorCode::DataFormatError);
  CHECK(message_of([] { parse_sequences("0\n1\nx\n", DataFormat::Csv, 2); }).find("line 3") !=
        std::string::npos);

  CHECK(guess_data_format("a/b.csv") == DataFormat::Csv);
  CHECK(guess_data_format("a/b.jsonl") == DataFormat::Jsonl);
}

TEST_CASE("experiment spec json") {
  const Json config = Json::parse(R"({
    "experiment": "type2", "family": "fixed:0.8,0.2;fixed:0.2,0.8;bernoulli",
    "mode": "multiple", "reference": [{"model": "bernoulli"}],
    "truth": [{"model": "fixed:0.8,0.2", "params": [0.8, 0.2], "fraction": 0.5},
              {"model": "fixed:0.2,0.8", "params": [0.2, 0.8], "fraction": 0.5}],
    "n_grid": [50, 100], "epsilon_grid": [0.01], "trials": 10, "master_seed": 18446744073709551615,
    "workers": 3, "method": "exact"})");
  const auto spec = experiment_spec_from_json(config);
  CHECK(spec.experiment == ExperimentKind::Type2Error);
  CHECK(spec.family.size() == 3);
  CHECK(spec.truth.size() == 2);
  CHECK(spec.truth[1].params == std::vector<double>{0.2, 0.8});
  CHECK(spec.master_seed == 18446744073709551615ull);
  CHECK(spec.workers == 3);
  CHECK(spec.method == Method::Exact);

  // the echo re-parses to the same spec (workers aside)
  const Json echo = experiment_spec_to_json(spec);
  CHECK_FALSE(echo.contains("workers"));
  const auto again = experiment_spec_from_json(echo);
  CHECK(experiment_spec_to_json(again) == echo);

  CHECK(code_of([] { experiment_spec_from_json(Json::parse(R"({"trails": 3})")); }) ==
        ErrorCode::SpecParseError);
  CHECK(code_of([] { experiment_spec_from_json(Json::parse(R"({"trials": -3})")); }) ==
        ErrorCode::SpecParseError);
  CHECK(code_of([] { experiment_spec_from_json(Json::parse(R"({"truth": [{"params": []}]})")); }) ==
        ErrorCode::SpecParseError);
  CHECK(code_of([] { experiment_spec_from_json(Json::parse(R"({"experiment": "nope"})")); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("report serialization") {
  ExperimentSpec spec;
  spec.experiment = ExperimentKind::ConvergenceRate;
  spec.family = {ModelClass::fixed({0.5, 0.5}), ModelClass::bernoulli()};
  spec.true_member = 1;
  spec.true_params = {0.3, 0.7};
  spec.n_grid = {30, 60};
  spec.epsilon_grid = {0.05};
  spec.trials = 50;
  spec.master_seed = 2;
  const auto report = run_experiment(spec);
  REQUIRE(report.wall_time_seconds.has_value());

  const Json doc = report_to_json(report);
  CHECK(doc["schema_version"] == kSchemaVersion);
  CHECK(doc["experiment"] == "convergence_rate");
  CHECK_FALSE(doc.contains("wall_time_seconds"));
  CHECK(report_to_json(report, true).contains("wall_time_seconds"));
  REQUIRE(doc["rows"].size() == report.rows.size());
  // selection rows carry no bound or epsilon
  CHECK(doc["rows"][0]["bound"].is_null());
  CHECK(doc["rows"][0]["epsilon"].is_null());
  CHECK(doc["rows"][2]["bound_status"].is_string());
  // the embedded spec re-parses
  CHECK(experiment_spec_from_json(doc["spec"]).n_grid == spec.n_grid);
  // and the document itself survives a text round trip
  CHECK(Json::parse(doc.dump()) == doc);

  const std::string csv = report_to_csv(report);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == report.rows.size() + 1);
  CHECK(csv.rfind("experiment,metric,label,n,epsilon,", 0) == 0);
  CHECK(csv.find("\"fixed:0.5,0.5\"") != std::string::npos);  // quoted label
}

TEST_CASE("bits are added beside nats") {
  Json doc = {{"total_nats", std::log(2.0)},
              {"nested", {{"log_complexity_nats", 2.0 * std::log(2.0)}}},
              {"list_nats", {std::log(2.0), 0.0}},
              {"n", 3}};
  add_bits(doc);
  CHECK(doc["total_bits"].get<double>() == doctest::Approx(1.0));
  CHECK(doc["nested"]["log_complexity_bits"].get<double>() == doctest::Approx(2.0));
  CHECK(doc["list_bits"][0].get<double>() == doctest::Approx(1.0));
  CHECK(doc["total_nats"].get<double>() == doctest::Approx(std::log(2.0)));
  CHECK_FALSE(doc.contains("n_bits"));
}
