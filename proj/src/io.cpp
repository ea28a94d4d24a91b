#include "merge3/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace merge3 {

JsonSyntaxError::JsonSyntaxError(const std::string& source, std::size_t line_, std::size_t column_,
                                 const std::string& detail)
    : ContractError(source + ":" + std::to_string(line_) + ":" + std::to_string(column_) + ": " + detail),
      line(line_),
      column(column_) {}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte_offset) {
    std::size_t line = 1;
    std::size_t column = 1;
    const auto end = std::min(byte_offset, text.size());
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

Json parse_json(std::string_view text, const std::string& source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        // nlohmann reports the offset one past the offending byte.
        const auto offset = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, column] = line_column(text, offset);
        std::string detail = e.what();
        if (const auto pos = detail.find("parse error"); pos != std::string::npos) {
            detail = detail.substr(pos);
        }
        throw JsonSyntaxError(source, line, column, detail);
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ContractError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Json read_json_file(const std::filesystem::path& path) { return parse_json(read_text_file(path), path.string()); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw RuntimeError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw RuntimeError("write failed for " + path.string());
    }
}

void require_version(const Json& doc, const std::string& what) {
    require(doc.is_object(), what + ": expected a JSON object");
    require(doc.contains("version") && doc["version"] == kFormatVersion,
            what + ": missing or unsupported \"version\" (expected \"v1\")");
}

namespace {

Vector vector_from_json(const Json& arr, const std::string& what) {
    require(arr.is_array(), what + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        require(arr[i].is_number(), what + ": expected an array of numbers");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (double x : v) {
        arr.push_back(x);
    }
    return arr;
}

template <class T>
T field(const Json& doc, const char* key, const std::string& what) {
    require(doc.contains(key), what + ": missing field \"" + key + "\"");
    try {
        return doc.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ContractError(what + ": field \"" + key + "\" has the wrong type");
    }
}

} // namespace

void write_response_matrix(std::ostream& out, const ResponseMatrix& responses) {
    for (std::size_t m = 0; m < responses.n_respondents(); ++m) {
        Json row;
        row["respondent_id"] = responses.respondent_ids()[m];
        Json cells = Json::array();
        for (std::size_t i = 0; i < responses.n_items(); ++i) {
            cells.push_back({{"item_id", responses.item_ids()[i]}, {"correct", responses.at(i, m)}});
        }
        row["responses"] = std::move(cells);
        out << row.dump() << '\n';
    }
}

ResponseMatrix read_response_matrix(std::istream& in) {
    std::vector<std::string> respondents;
    std::vector<std::unordered_map<std::string, std::uint8_t>> rows;
    std::vector<std::string> item_order;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto row = parse_json(line, "responses line " + std::to_string(line_no));
        const std::string what = "responses line " + std::to_string(line_no);
        respondents.push_back(field<std::string>(row, "respondent_id", what));
        require(row.contains("responses") && row["responses"].is_array(), what + ": missing \"responses\" array");
        std::unordered_map<std::string, std::uint8_t> cells;
        for (const auto& cell : row["responses"]) {
            const auto id = field<std::string>(cell, "item_id", what);
            const auto c = field<int>(cell, "correct", what);
            require(c == 0 || c == 1, what + ": correct must be 0 or 1");
            require(cells.emplace(id, static_cast<std::uint8_t>(c)).second, what + ": duplicate item " + id);
            if (rows.empty()) {
                item_order.push_back(id);
            }
        }
        rows.push_back(std::move(cells));
    }
    require(!rows.empty(), "responses: no respondents");
    ResponseMatrix out(item_order, respondents);
    for (std::size_t m = 0; m < rows.size(); ++m) {
        require(rows[m].size() == item_order.size(),
                "responses: respondent " + respondents[m] + " does not answer every item");
        for (std::size_t i = 0; i < item_order.size(); ++i) {
            const auto it = rows[m].find(item_order[i]);
            require(it != rows[m].end(), "responses: respondent " + respondents[m] + " is missing item " + item_order[i]);
            out.set(i, m, it->second);
        }
    }
    return out;
}

Json to_json(const ItemBank& bank) {
    Json items = Json::array();
    for (const auto& it : bank.items()) {
        items.push_back({{"item_id", it.item_id}, {"alpha", vector_to_json(it.alpha)}, {"beta", it.beta}});
    }
    return {{"version", kFormatVersion}, {"d", bank.dim()}, {"items", std::move(items)}};
}

ItemBank item_bank_from_json(const Json& doc) {
    require_version(doc, "item bank");
    const auto d = field<std::size_t>(doc, "d", "item bank");
    require(doc.contains("items") && doc["items"].is_array(), "item bank: missing \"items\" array");
    ItemBank bank(d);
    for (const auto& it : doc["items"]) {
        ItemParams p;
        p.item_id = field<std::string>(it, "item_id", "item bank");
        require(it.contains("alpha"), "item bank: missing field \"alpha\"");
        p.alpha = vector_from_json(it["alpha"], "item bank alpha");
        p.beta = field<double>(it, "beta", "item bank");
        bank.add(std::move(p));
    }
    return bank;
}

Json to_json(std::span<const AbilityVector> abilities, std::size_t dim) {
    Json list = Json::array();
    for (const auto& a : abilities) {
        list.push_back({{"model_id", a.model_id}, {"gamma", vector_to_json(a.gamma)}});
    }
    return {{"version", kFormatVersion}, {"d", dim}, {"abilities", std::move(list)}};
}

std::vector<AbilityVector> abilities_from_json(const Json& doc) {
    require_version(doc, "abilities");
    const auto d = field<std::size_t>(doc, "d", "abilities");
    require(doc.contains("abilities") && doc["abilities"].is_array(), "abilities: missing \"abilities\" array");
    std::vector<AbilityVector> out;
    for (const auto& a : doc["abilities"]) {
        AbilityVector v;
        v.model_id = field<std::string>(a, "model_id", "abilities");
        require(a.contains("gamma"), "abilities: missing field \"gamma\"");
        v.gamma = vector_from_json(a["gamma"], "abilities gamma");
        require(static_cast<std::size_t>(v.gamma.size()) == d, "abilities: gamma length differs from d");
        out.push_back(std::move(v));
    }
    return out;
}

Json to_json(const SubsetSelection& subset) {
    return {{"indices", subset.indices}, {"weights", subset.weights}, {"method", subset.method}};
}

SubsetSelection subset_from_json(const Json& doc) {
    require(doc.is_object(), "subset: expected a JSON object");
    SubsetSelection s;
    s.indices = field<std::vector<std::size_t>>(doc, "indices", "subset");
    s.weights = field<std::vector<double>>(doc, "weights", "subset");
    s.method = doc.value("method", std::string("random"));
    return s;
}

Json to_json(const FitnessEstimate& e) {
    Json out{{"value", e.value}, {"kind", std::string(to_string(e.kind))}, {"evals", e.n_correctness_evals}};
    out["lambda"] = e.lambda ? vector_to_json(*e.lambda) : Json(nullptr);
    out["c"] = e.blend_c ? Json(*e.blend_c) : Json(nullptr);
    return out;
}

Json to_json(const ParameterVector& p) {
    Json manifest = Json::array();
    for (const auto& s : p.shape_manifest) {
        manifest.push_back({{"name", s.name}, {"length", s.length}});
    }
    return {{"version", kFormatVersion},
            {"model_id", p.model_id},
            {"manifest", std::move(manifest)},
            {"values", vector_to_json(p.values)}};
}

ParameterVector parameter_vector_from_json(const Json& doc) {
    require_version(doc, "parameters");
    ParameterVector p;
    p.model_id = doc.value("model_id", std::string());
    require(doc.contains("values"), "parameters: missing field \"values\"");
    p.values = vector_from_json(doc["values"], "parameters values");
    if (doc.contains("manifest")) {
        for (const auto& s : doc["manifest"]) {
            p.shape_manifest.push_back({field<std::string>(s, "name", "manifest"), field<std::size_t>(s, "length", "manifest")});
        }
    }
    p.validate();
    return p;
}

Json to_json(const MergeRecipe& r) {
    return {{"method", std::string(to_string(r.method))},
            {"coefficients", r.coefficients},
            {"density", r.density},
            {"seed", r.seed}};
}

Json to_json(const Candidate& c) {
    Json out;
    out["id"] = c.id;
    out["generation"] = c.generation;
    out["index"] = c.index;
    out["genome"] = c.genome;
    out["recipe"] = to_json(c.decoded);
    out["valid"] = c.valid;
    Json fitness = Json::array();
    Json estimates = Json::array();
    std::size_t evals = 0;
    Json lambda = nullptr;
    for (const auto& f : c.fitness) {
        fitness.push_back(f.value);
        estimates.push_back(to_json(f));
        evals += f.n_correctness_evals;
        if (f.lambda && lambda.is_null()) {
            lambda = vector_to_json(*f.lambda);
        }
    }
    out["fitness"] = std::move(fitness);
    out["lambda"] = std::move(lambda);
    out["evals"] = evals;
    out["estimates"] = std::move(estimates);
    if (!c.valid) {
        out["error"] = c.error;
    }
    return out;
}

std::string run_log_jsonl(std::span<const Candidate> records) {
    std::string out;
    for (const auto& c : records) {
        out += to_json(c).dump();
        out += '\n';
    }
    return out;
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string front_csv(const ParetoFront& front, std::span<const std::string> objective_names) {
    std::vector<std::string> header{"id", "generation", "index"};
    header.insert(header.end(), objective_names.begin(), objective_names.end());
    CsvTable table(header);
    for (const auto& c : front.members) {
        std::vector<std::string> row{std::to_string(c.id), std::to_string(c.generation), std::to_string(c.index)};
        const auto obj = c.objectives();
        require(obj.size() == objective_names.size(), "front_csv: objective name count mismatch");
        for (double v : obj) {
            row.push_back(format_number(v));
        }
        table.add_row(std::move(row));
    }
    return table.str();
}

Json front_json(const ParetoFront& front) {
    Json members = Json::array();
    for (const auto& c : front.members) {
        members.push_back(to_json(c));
    }
    return {{"version", kFormatVersion}, {"members", std::move(members)}};
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    require(!header_.empty(), "CsvTable: empty header");
}

void CsvTable::add_row(std::vector<std::string> cells) {
    require(cells.size() == header_.size(), "CsvTable: row width differs from header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += cells[i];
        }
        out += '\n';
    };
    emit(header_);
    for (const auto& r : rows_) {
        emit(r);
    }
    return out;
}

} // namespace merge3
