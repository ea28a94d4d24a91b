#pragma once

// JSON / JSONL / CSV persistence. Every config and parameter document carries
// "version": "v1"; loaders reject other versions and incomplete data.

#include <cstddef>
#include <filesystem>
#include <span>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "merge3/error.hpp"
#include "merge3/estimators.hpp"
#include "merge3/evolve.hpp"
#include "merge3/irt.hpp"
#include "merge3/merge.hpp"

namespace merge3 {

using Json = nlohmann::json;

inline constexpr std::string_view kFormatVersion = "v1";

/// Malformed JSON text, with a 1-based position.
class JsonSyntaxError : public ContractError {
public:
    JsonSyntaxError(const std::string& source, std::size_t line, std::size_t column, const std::string& detail);
    std::size_t line;
    std::size_t column;
};

/// 1-based (line, column) of a byte offset into text.
[[nodiscard]] std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte_offset);

[[nodiscard]] Json parse_json(std::string_view text, const std::string& source = "<input>");
[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Throws unless doc["version"] == "v1".
void require_version(const Json& doc, const std::string& what);

// ResponseMatrix JSONL: one line per respondent.
void write_response_matrix(std::ostream& out, const ResponseMatrix& responses);
[[nodiscard]] ResponseMatrix read_response_matrix(std::istream& in);

[[nodiscard]] Json to_json(const ItemBank& bank);
[[nodiscard]] ItemBank item_bank_from_json(const Json& doc);

[[nodiscard]] Json to_json(std::span<const AbilityVector> abilities, std::size_t dim);
[[nodiscard]] std::vector<AbilityVector> abilities_from_json(const Json& doc);

[[nodiscard]] Json to_json(const SubsetSelection& subset);
[[nodiscard]] SubsetSelection subset_from_json(const Json& doc);

[[nodiscard]] Json to_json(const FitnessEstimate& estimate);

[[nodiscard]] Json to_json(const ParameterVector& parameters);
[[nodiscard]] ParameterVector parameter_vector_from_json(const Json& doc);

[[nodiscard]] Json to_json(const MergeRecipe& recipe);

/// One RunLog record: genome, recipe, lambda, fitness vector, evaluation count.
[[nodiscard]] Json to_json(const Candidate& candidate);

[[nodiscard]] std::string run_log_jsonl(std::span<const Candidate> records);
/// Header "id,generation,index,<objective names...>" then one row per member.
[[nodiscard]] std::string front_csv(const ParetoFront& front, std::span<const std::string> objective_names);
[[nodiscard]] Json front_json(const ParetoFront& front);

/// Minimal CSV table: a header row and numeric or text cells.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::vector<std::string> cells);
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Shortest round-trip text for a double.
[[nodiscard]] std::string format_number(double value);

} // namespace merge3
