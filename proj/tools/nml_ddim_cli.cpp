#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nml_ddim/change_detection.hpp"
#include "nml_ddim/ddim.hpp"
#include "nml_ddim/error.hpp"
#include "nml_ddim/io.hpp"
#include "nml_ddim/mdl_learning.hpp"
#include "nml_ddim/simulation.hpp"

namespace {

using namespace nml_ddim;

/// Bad invocation that CLI11 cannot detect by itself; exits 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  bool bits = false;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  bool timing = false;

  std::string family;
  std::string data;
  std::string format;
  std::string method = "auto";

  Count n = 0;

  int two_stage = 0;
  double lambda = 2.0;

  std::string ddim_method;
  std::vector<double> weights;
  double beta = 1.0;
  std::vector<Count> n_grid;
  std::vector<double> ratios;
  std::vector<Count> change_points;

  std::optional<std::size_t> max_changes;
  Count min_len = 1;

  double epsilon = 0.0;
  std::string mode = "multiple";
  std::string reference;
  std::vector<Count> reference_changes;
  Count split = 0;

  std::string experiment;
  std::string config;
  std::string csv;
};

Json envelope(const char* command) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = command;
  return doc;
}

std::vector<Sequence> load_data(const Options& o, int alphabet_size) {
  const DataFormat format =
      o.format.empty() ? guess_data_format(o.data) : parse_data_format(o.format);
  auto sequences = read_sequences(o.data, format, alphabet_size);
  if (sequences.empty()) throw Error(ErrorCode::EmptySequence, "data file holds no sequence");
  for (const auto& s : sequences)
    if (s.empty()) throw Error(ErrorCode::EmptySequence, "data file holds an empty sequence");
  return sequences;
}

Json cmd_complexity(const Options& o) {
  const auto classes = parse_class_list(o.family);
  const Method method = parse_method(o.method);
  auto doc = envelope("complexity");
  doc["n"] = o.n;
  Json results = Json::array();
  for (const auto& model : classes) {
    const Method used = resolve_method(model, o.n, method);
    Json r;
    r["model"] = model.spec_string();
    r["method"] = method_name(used);
    r["log_complexity_nats"] = log_parametric_complexity(model, o.n, used);
    results.push_back(std::move(r));
  }
  if (results.size() == 1) {
    for (auto& [k, v] : results[0].items()) doc[k] = v;
  } else {
    doc["members"] = std::move(results);
  }
  return doc;
}

Json cmd_learn(const Options& o) {
  const auto family = parse_family_spec(o.family);
  const Method method = parse_method(o.method);
  auto doc = envelope("learn");
  doc["family"] = o.family;
  Json results = Json::array();
  for (const auto& x : load_data(o, family.alphabet_size())) {
    Json r;
    if (o.two_stage > 0) {
      const auto ts = two_stage_learn(family, x, o.two_stage, o.lambda);
      r["selected_index"] = ts.selected_index;
      r["selected_model"] = family[ts.selected_index].spec_string();
      r["params"] = ts.params;
      r["neg_log_likelihood_nats"] = ts.neg_log_likelihood;
      r["parameter_code_nats"] = ts.parameter_code;
      r["total_nats"] = ts.total;
    } else {
      const auto learned = mdl_learn(family, x, method);
      r["selected_index"] = learned.selected_index;
      r["selected_model"] = family[learned.selected_index].spec_string();
      Json reports = Json::array();
      for (std::size_t i = 0; i < family.size(); ++i) {
        Json rep = to_json(learned.reports[i]);
        rep["model"] = family[i].spec_string();
        reports.push_back(std::move(rep));
      }
      r["codelengths"] = std::move(reports);
    }
    results.push_back(std::move(r));
  }
  doc["mode"] = o.two_stage > 0 ? "two_stage" : "nml";
  doc["results"] = std::move(results);
  return doc;
}

Json cmd_ddim(const Options& o) {
  auto doc = envelope("ddim");
  doc["method"] = o.ddim_method;
  const auto classes = parse_class_list(o.family);
  auto with_model = [](const ModelClass& m, const DdimEstimate& est) {
    Json j = to_json(est);
    j["model"] = m.spec_string();
    return j;
  };
  if (o.ddim_method == "parametric" || o.ddim_method == "slope") {
    if (o.ddim_method == "slope" && o.n_grid.empty()) throw UsageError("slope needs --n-grid");
    Json estimates = Json::array();
    for (const auto& m : classes)
      estimates.push_back(with_model(m, o.ddim_method == "slope" ? ddim_slope(m, o.n_grid)
                                                                 : ddim_parametric(m)));
    doc["estimates"] = std::move(estimates);
  } else if (o.ddim_method == "fusion-prior" || o.ddim_method == "fusion-posterior") {
    std::vector<double> w = o.weights;
    if (w.empty()) w.assign(classes.size(), 1.0 / static_cast<double>(classes.size()));
    const FusionSpec spec(classes, w, o.beta);
    if (o.ddim_method == "fusion-prior") {
      doc["estimate"] = to_json(ddim_fusion_prior(spec));
    } else {
      if (o.data.empty()) throw UsageError("fusion-posterior needs --data");
      Json results = Json::array();
      for (const auto& x : load_data(o, classes.front().alphabet_size()))
        results.push_back(to_json(ddim_fusion_posterior(spec, x, parse_method(o.method))));
      doc["results"] = std::move(results);
    }
  } else if (o.ddim_method == "concat") {
    std::vector<double> ratios = o.ratios;
    if (ratios.empty()) {
      if (o.n < 1) throw UsageError("concat needs --ratios or --change-points with --n");
      ratios = ratios_from_segmentation(o.change_points, o.n);
    }
    doc["estimate"] = to_json(ddim_concat(ConcatSpec(classes, ratios)));
  } else {
    throw UsageError("unknown ddim method '" + o.ddim_method + "'");
  }
  return doc;
}

Json cmd_segment(const Options& o) {
  const auto family = parse_family_spec(o.family);
  DmsOptions options;
  options.max_changes = o.max_changes;
  options.min_segment_len = o.min_len;
  options.method = parse_method(o.method);
  auto doc = envelope("segment");
  doc["family"] = o.family;
  Json results = Json::array();
  for (const auto& x : load_data(o, family.alphabet_size()))
    results.push_back(to_json(dms_segment(x, family, options)));
  doc["results"] = std::move(results);
  return doc;
}

Json cmd_test_change(const Options& o) {
  const auto family = parse_family_spec(o.family);
  const Method method = parse_method(o.method);
  auto doc = envelope("test-change");
  doc["family"] = o.family;
  doc["mode"] = o.mode;
  Json results = Json::array();
  for (const auto& x : load_data(o, family.alphabet_size())) {
    if (o.mode == "single") {
      if (o.split < 1) throw UsageError("single mode needs --split");
      results.push_back(to_json(single_change_statistic(x, o.split, family, o.epsilon, method)));
    } else {
      if (o.reference.empty()) throw UsageError("multiple mode needs --reference");
      const ModelSequence reference(o.reference_changes, parse_class_list(o.reference));
      results.push_back(to_json(mdl_change_statistic(x, reference, family, o.epsilon, method)));
    }
  }
  doc["results"] = std::move(results);
  return doc;
}

Json cmd_simulate(const Options& o) {
  std::ifstream in(o.config);
  if (!in) throw Error(ErrorCode::DataFormatError, "cannot open config " + o.config);
  const Json config = Json::parse(in, nullptr, false);
  if (config.is_discarded()) throw Error(ErrorCode::SpecParseError, "config is not valid JSON");
  ExperimentSpec spec = experiment_spec_from_json(config);
  const ExperimentKind kind = parse_experiment(o.experiment);
  if (config.contains("experiment") && spec.experiment != kind)
    throw UsageError("--experiment disagrees with the config's experiment");
  spec.experiment = kind;
  if (o.seed) spec.master_seed = *o.seed;
  else if (!config.contains("master_seed"))
    throw UsageError("simulate needs --seed or master_seed in the config");
  if (o.workers) spec.workers = *o.workers;

  const ExperimentReport report = run_experiment(spec);
  if (!o.csv.empty()) {
    std::ofstream csv(o.csv, std::ios::binary);
    if (!csv) throw Error(ErrorCode::DataFormatError, "cannot write " + o.csv);
    csv << report_to_csv(report);
  }
  return report_to_json(report, o.timing);
}

void emit(const Json& doc, const Options& o) {
  const std::string text = doc.dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(o.out, std::ios::binary);
  if (!file) throw Error(ErrorCode::DataFormatError, "cannot write " + o.out);
  file << text;
}

void emit_error(std::string_view code, const std::string& message) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["error"] = {{"code", code}, {"message", message}};
  std::cout << doc.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"MDL learning, descriptive dimension and change detection with NML codes",
               "nml-ddim"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--bits", o.bits, "Also report codelengths in bits (nats stay canonical)");
  app.add_option("--seed", o.seed, "Master seed for stochastic subcommands");
  app.add_option("--workers", o.workers, "Worker threads for simulate")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Write the JSON document here instead of stdout");
  app.add_flag("--timing", o.timing, "Include wall time in simulate reports");

  auto add_family = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--family", o.family, "Semicolon-separated model classes");
    if (required) opt->required();
  };
  auto add_data = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--data", o.data, "JSONL or CSV data file");
    if (required) opt->required();
    sub->add_option("--format", o.format, "jsonl or csv (default: from the extension)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
  };
  auto add_method = [&](CLI::App* sub) {
    sub->add_option("--method", o.method, "Complexity evaluation: exact, asymptotic or auto")
        ->check(CLI::IsMember({"exact", "asymptotic", "auto"}));
  };

  auto* complexity = app.add_subcommand("complexity", "Log parametric complexity ln C_n");
  add_family(complexity);
  complexity->add_option("--n", o.n, "Sample size")->required()->check(CLI::PositiveNumber);
  add_method(complexity);

  auto* learn = app.add_subcommand("learn", "MDL model selection over a family");
  add_family(learn);
  add_data(learn);
  add_method(learn);
  learn->add_option("--two-stage", o.two_stage, "Use the two-stage code with this grid resolution")
      ->check(CLI::PositiveNumber);
  learn->add_option("--lambda", o.lambda, "Two-stage parameter code multiplier (>= 2)");

  auto* ddim = app.add_subcommand("ddim", "Descriptive dimension estimates");
  add_family(ddim);
  ddim->add_option("--ddim-method", o.ddim_method,
                   "parametric, slope, fusion-prior, fusion-posterior or concat")
      ->required()
      ->check(CLI::IsMember({"parametric", "slope", "fusion-prior", "fusion-posterior", "concat"}));
  ddim->add_option("--weights", o.weights, "Fusion prior weights")->delimiter(',');
  ddim->add_option("--beta", o.beta, "Posterior temperature in (0, 1]");
  ddim->add_option("--n-grid", o.n_grid, "Sample sizes for the slope fit")->delimiter(',');
  ddim->add_option("--ratios", o.ratios, "Concatenation ratios")->delimiter(',');
  ddim->add_option("--change-points", o.change_points, "Change points for concat ratios")
      ->delimiter(',');
  ddim->add_option("--n", o.n, "Sequence length for concat ratios");
  add_data(ddim, false);
  add_method(ddim);

  auto* segment = app.add_subcommand("segment", "Dynamic model selection segmentation");
  add_family(segment);
  add_data(segment);
  add_method(segment);
  segment->add_option("--max-changes", o.max_changes, "Upper limit on change points");
  segment->add_option("--min-len", o.min_len, "Shortest allowed segment")
      ->check(CLI::PositiveNumber);

  auto* test = app.add_subcommand("test-change", "MDL change tests");
  add_family(test);
  add_data(test);
  add_method(test);
  test->add_option("--epsilon", o.epsilon, "Per-symbol threshold")->required();
  test->add_option("--mode", o.mode, "multiple or single")
      ->check(CLI::IsMember({"multiple", "single"}));
  test->add_option("--reference", o.reference, "Reference classes, semicolon-separated");
  test->add_option("--reference-changes", o.reference_changes, "Reference change points")
      ->delimiter(',');
  test->add_option("--split", o.split, "Split position for the single test");

  auto* simulate = app.add_subcommand("simulate", "Run a bound-versus-empirical experiment");
  simulate->add_option("--experiment", o.experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember({"convergence_rate", "agnostic_rate", "expected_distance", "type1",
                             "type2", "ddim_slope", "posterior_ddim_trace"}));
  simulate->add_option("--config", o.config, "JSON experiment config")->required();
  simulate->add_option("--csv", o.csv, "Also write the tidy CSV table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;
    std::cerr << app.help();
    return 2;
  }

  try {
    Json doc;
    if (*complexity) doc = cmd_complexity(o);
    else if (*learn) doc = cmd_learn(o);
    else if (*ddim) doc = cmd_ddim(o);
    else if (*segment) doc = cmd_segment(o);
    else if (*test) doc = cmd_test_change(o);
    else doc = cmd_simulate(o);
    if (o.bits) {
      add_bits(doc);
      doc["display_unit"] = "bits";
    }
    emit(doc, o);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    emit_error(code_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what());
    return 1;
  }
}
