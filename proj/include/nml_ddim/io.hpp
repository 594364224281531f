#ifndef NML_DDIM_IO_HPP
#define NML_DDIM_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nml_ddim/change_detection.hpp"
#include "nml_ddim/ddim.hpp"
#include "nml_ddim/simulation.hpp"

namespace nml_ddim {

using Json = nlohmann::ordered_json;

/// Version of every JSON document the tools emit.
inline constexpr int kSchemaVersion = 1;

/// "fixed:p0,p1,...", "bernoulli" or "multinomial:m", surrounding blanks
/// ignored. Throws SpecParseError; `offset` is added to reported positions.
ModelClass parse_model_class(std::string_view text, std::size_t offset = 0);

/// Semicolon-separated classes in priority order. Malformed members raise
/// SpecParseError with the character position; repeats raise DuplicateMember.
ModelFamily parse_family_spec(std::string_view text);
std::vector<ModelClass> parse_class_list(std::string_view text);

enum class DataFormat { Jsonl, Csv };

/// From the extension: ".csv" is Csv, anything else Jsonl.
DataFormat guess_data_format(const std::filesystem::path& path);
DataFormat parse_data_format(std::string_view text);

/// Jsonl: one integer array per non-blank line. Csv: one symbol per row,
/// sequences separated by blank lines. Every symbol is checked against the
/// alphabet (OutOfRangeSymbol); malformed input raises DataFormatError with
/// the line number.
std::vector<Sequence> parse_sequences(std::string_view text, DataFormat format, int alphabet_size);
std::vector<Sequence> read_sequences(const std::filesystem::path& path, DataFormat format,
                                     int alphabet_size);

/// Experiment configuration. Unknown keys raise SpecParseError so typos do
/// not silently fall back to defaults.
ExperimentSpec experiment_spec_from_json(const Json& config);
/// Echo of the spec as stored in reports; `workers` is left out because it
/// never changes results.
Json experiment_spec_to_json(const ExperimentSpec& spec);

Json report_to_json(const ExperimentReport& report, bool include_timing = false);
/// Tidy table, one line per row, with a header line.
std::string report_to_csv(const ExperimentReport& report);

Json to_json(const CodelengthReport& report);
Json to_json(const DdimEstimate& estimate);
Json to_json(const Segmentation& segmentation);
Json to_json(const ChangeTestResult& result);

/// Adds a "<name>_bits" sibling for every "<name>_nats" number, recursively.
void add_bits(Json& doc);

}  // namespace nml_ddim

#endif  // NML_DDIM_IO_HPP
