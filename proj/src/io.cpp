#include "nml_ddim/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nml_ddim/error.hpp"

namespace nml_ddim {

namespace {

[[noreturn]] void parse_error(std::size_t position, const std::string& what) {
  throw Error(ErrorCode::SpecParseError, what + " at position " + std::to_string(position));
}

[[noreturn]] void format_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::DataFormatError, "line " + std::to_string(line) + ": " + what);
}

bool is_blank(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Trims blanks, moving `offset` past the leading ones.
std::string_view trim(std::string_view text, std::size_t& offset) {
  while (!text.empty() && is_blank(text.front())) {
    text.remove_prefix(1);
    ++offset;
  }
  while (!text.empty() && is_blank(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::pair<std::string_view, std::size_t>> split(std::string_view text, char sep,
                                                           std::size_t offset) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      out.emplace_back(text.substr(start, i - start), offset + start);
      start = i + 1;
    }
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& value) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string join_classes(const std::vector<ModelClass>& classes) {
  std::string out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ';';
    out += classes[i].spec_string();
  }
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Config readers. Every failure names the offending key.

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::SpecParseError, "config key '" + key + "': " + what);
}

double get_double(const Json& v, const std::string& key) {
  if (!v.is_number()) config_error(key, "expected a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  config_error(key, "expected a non-negative integer");
}

std::vector<double> get_doubles(const Json& v, const std::string& key) {
  if (!v.is_array()) config_error(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_double(e, key));
  return out;
}

std::vector<Count> get_counts(const Json& v, const std::string& key) {
  if (!v.is_array()) config_error(key, "expected an array of integers");
  std::vector<Count> out;
  for (const auto& e : v) out.push_back(static_cast<Count>(get_unsigned(e, key)));
  return out;
}

std::string get_string(const Json& v, const std::string& key) {
  if (!v.is_string()) config_error(key, "expected a string");
  return v.get<std::string>();
}

std::vector<SegmentSpec> get_segments(const Json& v, const std::string& key) {
  if (!v.is_array()) config_error(key, "expected an array of segments");
  std::vector<SegmentSpec> out;
  for (const auto& e : v) {
    if (!e.is_object() || !e.contains("model")) config_error(key, "segment needs a model");
    for (const auto& [k, _] : e.items())
      if (k != "model" && k != "params" && k != "fraction")
        config_error(key, "unknown segment key '" + k + "'");
    SegmentSpec seg{parse_model_class(get_string(e["model"], key)), {}, 1.0};
    if (e.contains("params")) seg.params = get_doubles(e["params"], key);
    if (e.contains("fraction")) seg.fraction = get_double(e["fraction"], key);
    out.push_back(std::move(seg));
  }
  return out;
}

Json segments_to_json(const std::vector<SegmentSpec>& segments) {
  Json out = Json::array();
  for (const auto& seg : segments)
    out.push_back({{"model", seg.model.spec_string()}, {"params", seg.params},
                   {"fraction", seg.fraction}});
  return out;
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

ModelClass parse_model_class(std::string_view text, std::size_t offset) {
  text = trim(text, offset);
  if (text.empty()) parse_error(offset, "empty model spec");
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  const std::size_t args_offset = offset + colon + 1;

  if (name == "bernoulli") {
    if (colon != std::string_view::npos) parse_error(offset + colon, "bernoulli takes no arguments");
    return ModelClass::bernoulli();
  }
  if (name == "multinomial") {
    int m = 0;
    std::size_t pos = args_offset;
    const auto arg = trim(args, pos);
    if (colon == std::string_view::npos || !parse_number(arg, m))
      parse_error(pos, "multinomial needs an integer alphabet size");
    if (m < 2) parse_error(pos, "multinomial alphabet size must be >= 2");
    return ModelClass::multinomial(m);
  }
  if (name == "fixed") {
    if (colon == std::string_view::npos) parse_error(offset + name.size(), "fixed needs parameters");
    std::vector<double> params;
    for (auto [piece, pos] : split(args, ',', args_offset)) {
      const auto value = trim(piece, pos);
      double p = 0.0;
      if (!parse_number(value, p)) parse_error(pos, "expected a probability");
      params.push_back(p);
    }
    if (params.size() < 2) parse_error(args_offset, "fixed needs >= 2 probabilities");
    try {
      return ModelClass::fixed(std::move(params));
    } catch (const Error& e) {
      parse_error(args_offset, e.what());
    }
  }
  parse_error(offset, "unknown model '" + std::string(name) + "'");
}

std::vector<ModelClass> parse_class_list(std::string_view text) {
  std::vector<ModelClass> out;
  for (const auto& [piece, pos] : split(text, ';', 0)) out.push_back(parse_model_class(piece, pos));
  return out;
}

ModelFamily parse_family_spec(std::string_view text) {
  auto classes = parse_class_list(text);
  for (std::size_t i = 1; i < classes.size(); ++i)
    if (classes[i].alphabet_size() != classes[0].alphabet_size())
      throw Error(ErrorCode::SpecParseError, "family members must share one alphabet");
  return ModelFamily(std::move(classes));
}

DataFormat guess_data_format(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
}

DataFormat parse_data_format(std::string_view text) {
  if (text == "jsonl") return DataFormat::Jsonl;
  if (text == "csv") return DataFormat::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown data format '" + std::string(text) + "'");
}

std::vector<Sequence> parse_sequences(std::string_view text, DataFormat format,
                                      int alphabet_size) {
  std::vector<Sequence> out;
  auto check_symbol = [&](long long v, std::size_t line) {
    if (v < 0 || v >= alphabet_size)
      throw Error(ErrorCode::OutOfRangeSymbol, "line " + std::to_string(line) + ": symbol " +
                                                   std::to_string(v) + " outside alphabet of size " +
                                                   std::to_string(alphabet_size));
    return static_cast<Symbol>(v);
  };

  std::size_t line_no = 0;
  bool in_sequence = false;
  for (auto [raw, _] : split(text, '\n', 0)) {
    ++line_no;
    std::size_t ignored = 0;
    const auto line = trim(raw, ignored);
    if (format == DataFormat::Jsonl) {
      if (line.empty()) continue;
      Json parsed = Json::parse(line, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_array()) format_error(line_no, "expected a JSON array");
      Sequence seq;
      for (const auto& v : parsed) {
        if (!v.is_number_integer()) format_error(line_no, "symbols must be integers");
        seq.push_back(check_symbol(v.get<long long>(), line_no));
      }
      out.push_back(std::move(seq));
    } else {
      if (line.empty()) {
        in_sequence = false;
        continue;
      }
      long long v = 0;
      if (!parse_number(line, v)) format_error(line_no, "expected one integer symbol per row");
      if (!in_sequence) out.emplace_back();
      in_sequence = true;
      out.back().push_back(check_symbol(v, line_no));
    }
  }
  return out;
}

std::vector<Sequence> read_sequences(const std::filesystem::path& path, DataFormat format,
                                     int alphabet_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataFormatError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sequences(buf.str(), format, alphabet_size);
}

ExperimentSpec experiment_spec_from_json(const Json& config) {
  if (!config.is_object()) throw Error(ErrorCode::SpecParseError, "config must be a JSON object");
  ExperimentSpec spec;
  for (const auto& [key, v] : config.items()) {
    if (key == "experiment") spec.experiment = parse_experiment(get_string(v, key));
    else if (key == "family") spec.family = parse_family_spec(get_string(v, key)).members();
    else if (key == "weights") spec.weights = get_doubles(v, key);
    else if (key == "true_member") spec.true_member = get_unsigned(v, key);
    else if (key == "true_params") spec.true_params = get_doubles(v, key);
    else if (key == "n_grid") spec.n_grid = get_counts(v, key);
    else if (key == "epsilon_grid") spec.epsilon_grid = get_doubles(v, key);
    else if (key == "bound_targets") spec.bound_targets = get_doubles(v, key);
    else if (key == "trials") spec.trials = get_unsigned(v, key);
    else if (key == "master_seed") spec.master_seed = get_unsigned(v, key);
    else if (key == "method") spec.method = parse_method(get_string(v, key));
    else if (key == "workers") spec.workers = static_cast<unsigned>(get_unsigned(v, key));
    else if (key == "mode") {
      const auto mode = get_string(v, key);
      if (mode != "multiple" && mode != "single") config_error(key, "expected multiple or single");
      spec.mode = mode == "single" ? TestMode::Single : TestMode::Multiple;
    } else if (key == "reference") spec.reference = get_segments(v, key);
    else if (key == "truth") spec.truth = get_segments(v, key);
    else if (key == "split_fraction") spec.split_fraction = get_double(v, key);
    else if (key == "models") spec.models = parse_class_list(get_string(v, key));
    else if (key == "stream") spec.stream = get_segments(v, key);
    else if (key == "beta") spec.beta = get_double(v, key);
    else config_error(key, "unknown key");
  }
  return spec;
}

Json experiment_spec_to_json(const ExperimentSpec& spec) {
  Json out;
  out["experiment"] = experiment_name(spec.experiment);
  if (!spec.family.empty()) out["family"] = join_classes(spec.family);
  out["weights"] = spec.weights;
  out["true_member"] = spec.true_member;
  out["true_params"] = spec.true_params;
  out["n_grid"] = spec.n_grid;
  out["epsilon_grid"] = spec.epsilon_grid;
  out["bound_targets"] = spec.bound_targets;
  out["trials"] = spec.trials;
  out["master_seed"] = spec.master_seed;
  out["method"] = method_name(spec.method);
  out["mode"] = test_mode_name(spec.mode);
  out["reference"] = segments_to_json(spec.reference);
  out["truth"] = segments_to_json(spec.truth);
  out["split_fraction"] = spec.split_fraction;
  if (!spec.models.empty()) out["models"] = join_classes(spec.models);
  out["stream"] = segments_to_json(spec.stream);
  out["beta"] = spec.beta;
  return out;
}

Json report_to_json(const ExperimentReport& report, bool include_timing) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = "experiment_report";
  out["experiment"] = experiment_name(report.spec.experiment);
  out["master_seed"] = report.spec.master_seed;
  out["spec"] = experiment_spec_to_json(report.spec);
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["metric"] = row.metric;
    r["label"] = row.label;
    r["n"] = row.n;
    r["epsilon"] = optional_number(row.epsilon);
    r["trials"] = row.trials;
    r["events"] = row.events;
    r["value"] = row.value;
    r["ci_low"] = row.ci_low;
    r["ci_high"] = row.ci_high;
    r["bound"] = optional_number(row.bound);
    r["bound_status"] = bound_status_name(row.bound_status);
    r["inputs"] = Json::object();
    for (const auto& [k, v] : row.inputs) r["inputs"][k] = v;
    rows.push_back(std::move(r));
  }
  out["rows"] = std::move(rows);
  out["summary"] = Json::object();
  for (const auto& [k, v] : report.summary) out["summary"][k] = v;
  if (include_timing && report.wall_time_seconds)
    out["wall_time_seconds"] = *report.wall_time_seconds;
  return out;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out =
      "experiment,metric,label,n,epsilon,trials,events,value,ci_low,ci_high,bound,bound_status\n";
  const std::string experiment(experiment_name(report.spec.experiment));
  for (const auto& row : report.rows) {
    out += experiment + ',' + csv_field(row.metric) + ',' + csv_field(row.label) + ',' +
           std::to_string(row.n) + ',' + (row.epsilon ? format_double(*row.epsilon) : "") + ',' +
           std::to_string(row.trials) + ',' + std::to_string(row.events) + ',' +
           format_double(row.value) + ',' + format_double(row.ci_low) + ',' +
           format_double(row.ci_high) + ',' + (row.bound ? format_double(*row.bound) : "") + ',' +
           std::string(bound_status_name(row.bound_status)) + '\n';
  }
  return out;
}

Json to_json(const CodelengthReport& report) {
  return {{"n", report.n},
          {"method", method_name(report.method)},
          {"neg_max_loglik_nats", report.neg_max_loglik},
          {"log_complexity_nats", report.log_complexity},
          {"total_nats", report.total}};
}

Json to_json(const DdimEstimate& estimate) {
  Json out;
  out["value"] = estimate.value;
  out["method"] = ddim_method_name(estimate.method);
  const auto& d = estimate.details;
  Json details = Json::object();
  if (!d.n_grid.empty()) {
    details["n_grid"] = d.n_grid;
    details["log_complexities_nats"] = d.log_complexities;
    Json methods = Json::array();
    for (Method m : d.complexity_methods) methods.push_back(method_name(m));
    details["complexity_methods"] = methods;
  }
  if (!d.weights.empty()) details["weights"] = d.weights;
  if (!d.member_ddims.empty()) details["member_ddims"] = d.member_ddims;
  if (!d.codelengths.empty()) details["codelengths_nats"] = d.codelengths;
  if (estimate.method == DdimMethod::FusionPosterior) details["beta"] = d.beta;
  out["details"] = details;
  return out;
}

Json to_json(const Segmentation& segmentation) {
  Json models = Json::array();
  for (const auto& m : segmentation.model_sequence.models()) models.push_back(m.spec_string());
  return {{"change_points", segmentation.model_sequence.change_points()},
          {"models", models},
          {"model_indices", segmentation.model_indices},
          {"segment_codelengths_nats", segmentation.segment_codelengths},
          {"data_codelength_nats", segmentation.data_codelength},
          {"model_code_nats", segmentation.model_code},
          {"total_codelength_nats", segmentation.total_codelength}};
}

Json to_json(const ChangeTestResult& result) {
  Json out;
  out["statistic_nats"] = result.statistic;
  out["decision"] = hypothesis_name(result.decision);
  out["epsilon"] = result.epsilon;
  if (result.best_alternative) {
    out["reference_codelength_nats"] = result.reference_codelength;
    out["best_alternative"] = to_json(*result.best_alternative);
  }
  if (result.split) {
    const auto& s = *result.split;
    out["split"] = {{"t", s.t},
                    {"whole_index", s.whole_index},
                    {"left_index", s.left_index},
                    {"right_index", s.right_index},
                    {"whole_codelength_nats", s.whole_codelength},
                    {"split_codelength_nats", s.split_codelength}};
  }
  return out;
}

void add_bits(Json& doc) {
  constexpr std::string_view suffix = "_nats";
  if (doc.is_array()) {
    for (auto& e : doc) add_bits(e);
    return;
  }
  if (!doc.is_object()) return;
  Json extra = Json::object();
  for (auto& [key, v] : doc.items()) {
    add_bits(v);
    if (key.size() <= suffix.size() || key.compare(key.size() - suffix.size(), suffix.size(),
                                                   suffix) != 0)
      continue;
    const std::string bits_key = key.substr(0, key.size() - suffix.size()) + "_bits";
    if (v.is_number()) {
      extra[bits_key] = v.get<double>() / std::log(2.0);
    } else if (v.is_array()) {
      Json arr = Json::array();
      for (const auto& e : v) arr.push_back(e.is_number() ? Json(e.get<double>() / std::log(2.0)) : e);
      extra[bits_key] = arr;
    }
  }
  for (auto& [key, v] : extra.items()) doc[key] = v;
}

}  // namespace nml_ddim
