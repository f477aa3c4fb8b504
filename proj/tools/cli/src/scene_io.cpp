#include "pqproj/cli/scene_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace pqproj::cli {

namespace {

Json matrix_json(const ExprMatrix& m) {
    Json rows = Json::array();
    for (const auto& row : m) rows.push_back(row);
    return rows;
}

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw SceneFileError(std::string("scene file is missing '") + key + "'");
    return *it;
}

ExprMatrix read_matrix(const nlohmann::json& doc, const char* key, int m) {
    const auto& v = field(doc, key);
    if (!v.is_array() || static_cast<int>(v.size()) != m)
        throw SceneFileError(std::string("'") + key + "' must be an array of " + std::to_string(m) + " rows");
    ExprMatrix out;
    for (const auto& row : v) {
        if (!row.is_array() || static_cast<int>(row.size()) != m)
            throw SceneFileError(std::string("each row of '") + key + "' must hold " + std::to_string(m) + " entries");
        std::vector<std::string> r;
        for (const auto& e : row) {
            if (e.is_string()) r.push_back(e.get<std::string>());
            else if (e.is_number()) r.push_back(format_number(e.get<double>()));
            else throw SceneFileError(std::string("entries of '") + key + "' must be expression strings");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<double> read_bounds(const nlohmann::json& domain, const char* key, int m) {
    const auto& v = field(domain, key);
    if (!v.is_array() || static_cast<int>(v.size()) != m)
        throw SceneFileError(std::string("domain '") + key + "' must hold " + std::to_string(m) + " numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw SceneFileError(std::string("domain '") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace

Json scene_to_json(const SceneSpec& spec) {
    Json doc;
    doc["name"] = spec.name;
    doc["notes"] = spec.notes;
    doc["dimension"] = spec.dimension();
    doc["epsilon"] = spec.epsilon;
    doc["coords"] = spec.coords;
    doc["domain"] = Json{{"min", spec.lo}, {"max", spec.hi}};
    doc["g"] = matrix_json(spec.g);
    doc["gbar"] = matrix_json(spec.gbar);
    doc["P"] = matrix_json(spec.P);
    doc["Q"] = matrix_json(spec.Q);
    return doc;
}

SceneSpec scene_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SceneFileError("scene file must hold a JSON object");
    SceneSpec s;
    if (auto it = doc.find("name"); it != doc.end() && it->is_string()) s.name = it->get<std::string>();
    if (auto it = doc.find("notes"); it != doc.end() && it->is_string()) s.notes = it->get<std::string>();

    const auto& dim = field(doc, "dimension");
    if (!dim.is_number_integer() || dim.get<long long>() < 1)
        throw SceneFileError("'dimension' must be a positive integer");
    const int m = static_cast<int>(dim.get<long long>());

    const auto& eps = field(doc, "epsilon");
    if (!eps.is_number()) throw SceneFileError("'epsilon' must be a number");
    s.epsilon = eps.get<double>();

    const auto& coords = field(doc, "coords");
    if (!coords.is_array() || static_cast<int>(coords.size()) != m)
        throw SceneFileError("'coords' must list " + std::to_string(m) + " names");
    for (const auto& c : coords) {
        if (!c.is_string()) throw SceneFileError("coordinate names must be strings");
        s.coords.push_back(c.get<std::string>());
    }

    const auto& domain = field(doc, "domain");
    if (!domain.is_object()) throw SceneFileError("'domain' must be an object with 'min' and 'max'");
    s.lo = read_bounds(domain, "min", m);
    s.hi = read_bounds(domain, "max", m);

    s.g = read_matrix(doc, "g", m);
    s.gbar = read_matrix(doc, "gbar", m);
    s.P = read_matrix(doc, "P", m);
    s.Q = read_matrix(doc, "Q", m);
    return s;
}

std::string serialize_scene(const SceneSpec& spec) { return scene_to_json(spec).dump(2) + "\n"; }

SceneSpec parse_scene(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SceneFileError(std::string("scene file is not valid JSON: ") + e.what());
    }
    return scene_from_json(doc);
}

SceneSpec read_scene_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SceneFileError("cannot open scene file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str());
}

std::string scene_digest(const SceneSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize_scene(spec)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + hex;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

}  // namespace pqproj::cli
