#pragma once

// Dataset manifest: participants, diagnosis labels, interaction scenarios and
// recording paths (relative to the manifest file).

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"

namespace voicescreen {

inline constexpr int kManifestVersion = 1;

enum class DiagnosisLabel { Healthy = 0, Depressed = 1 };
enum class Scenario { Interview, Chatbot, Reading, Synthetic };

inline std::string to_string(DiagnosisLabel l) { return l == DiagnosisLabel::Depressed ? "depressed" : "healthy"; }

inline std::optional<DiagnosisLabel> parse_label(std::string_view s) {
    if (s == "depressed") return DiagnosisLabel::Depressed;
    if (s == "healthy") return DiagnosisLabel::Healthy;
    return std::nullopt;
}

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::Interview: return "interview";
        case Scenario::Chatbot: return "chatbot";
        case Scenario::Reading: return "reading";
        case Scenario::Synthetic: return "synthetic";
    }
    return "synthetic";
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
    if (s == "interview") return Scenario::Interview;
    if (s == "chatbot") return Scenario::Chatbot;
    if (s == "reading") return Scenario::Reading;
    if (s == "synthetic") return Scenario::Synthetic;
    return std::nullopt;
}

struct ParticipantRecord {
    std::string id;
    DiagnosisLabel label = DiagnosisLabel::Healthy;
    Scenario scenario = Scenario::Synthetic;
    std::vector<std::string> recordings;            // relative to the manifest
    std::map<std::string, std::string> embeddings;  // clip id -> FVEC path, relative

    bool operator==(const ParticipantRecord&) const = default;
};

struct DatasetManifest {
    int version = kManifestVersion;
    std::vector<ParticipantRecord> participants;
    std::filesystem::path base_dir;  // directory the relative paths resolve against

    std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }

    const ParticipantRecord* find(std::string_view id) const {
        for (const auto& p : participants) {
            if (p.id == id) return &p;
        }
        return nullptr;
    }

    bool operator==(const DatasetManifest& other) const {
        return version == other.version && participants == other.participants;
    }
};

/// Stable per-participant recording identifier: file stem, de-duplicated by index.
inline std::vector<std::string> recording_ids(const ParticipantRecord& p) {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < p.recordings.size(); ++i) {
        std::string stem = std::filesystem::path(p.recordings[i]).stem().string();
        if (stem.empty() || seen.contains(stem)) stem += "#" + std::to_string(i);
        seen.insert(stem);
        ids.push_back(std::move(stem));
    }
    return ids;
}

inline nlohmann::ordered_json to_json(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["version"] = m.version;
    auto& arr = j["participants"] = nlohmann::ordered_json::array();
    for (const auto& p : m.participants) {
        nlohmann::ordered_json r;
        r["id"] = p.id;
        r["label"] = to_string(p.label);
        r["scenario"] = to_string(p.scenario);
        r["recordings"] = p.recordings;
        if (!p.embeddings.empty()) r["embeddings"] = p.embeddings;
        arr.push_back(std::move(r));
    }
    return j;
}

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    const std::string text = to_json(m).dump(2) + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

namespace detail {

[[noreturn]] inline void schema(const std::string& where, const std::string& what) {
    fail(ErrorCode::SchemaViolation, where + ": " + what);
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema(where, std::string("missing field \"") + key + "\"");
    return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string()) schema(where + "." + key, "expected a string");
    return v.get<std::string>();
}

}  // namespace detail

/// Validates the schema, vocabularies and id uniqueness; when `check_files` is
/// set every referenced path must exist relative to `base_dir`.
inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                          bool check_files = true) {
    using detail::schema;
    if (!j.is_object()) schema("$", "manifest must be a JSON object");
    DatasetManifest m;
    m.base_dir = base_dir;
    const auto& version = detail::require(j, "version", "$");
    if (!version.is_number_integer()) schema("$.version", "expected an integer");
    m.version = version.get<int>();
    if (m.version != kManifestVersion) schema("$.version", "unsupported version " + std::to_string(m.version));

    const auto& parts = detail::require(j, "participants", "$");
    if (!parts.is_array()) schema("$.participants", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string where = "$.participants[" + std::to_string(i) + "]";
        const auto& pj = parts[i];
        if (!pj.is_object()) schema(where, "expected an object");
        ParticipantRecord p;
        p.id = detail::require_string(pj, "id", where);
        if (p.id.empty()) schema(where + ".id", "id must be non-empty");
        if (!ids.insert(p.id).second) fail(ErrorCode::DuplicateId, where + ".id: duplicate participant id \"" + p.id + "\"");

        const std::string label = detail::require_string(pj, "label", where);
        const auto parsed_label = parse_label(label);
        if (!parsed_label) fail(ErrorCode::UnknownLabel, where + ".label: \"" + label + "\" is not depressed|healthy");
        p.label = *parsed_label;

        const std::string scenario = detail::require_string(pj, "scenario", where);
        const auto parsed_scenario = parse_scenario(scenario);
        if (!parsed_scenario) schema(where + ".scenario", "\"" + scenario + "\" is not interview|chatbot|reading|synthetic");
        p.scenario = *parsed_scenario;

        const auto& recs = detail::require(pj, "recordings", where);
        if (!recs.is_array() || recs.empty()) schema(where + ".recordings", "expected a non-empty array of paths");
        for (std::size_t r = 0; r < recs.size(); ++r) {
            if (!recs[r].is_string()) schema(where + ".recordings[" + std::to_string(r) + "]", "expected a string");
            p.recordings.push_back(recs[r].get<std::string>());
        }
        if (const auto it = pj.find("embeddings"); it != pj.end()) {
            if (!it->is_object()) schema(where + ".embeddings", "expected an object of clip id -> path");
            for (const auto& [clip, path] : it->items()) {
                if (!path.is_string()) schema(where + ".embeddings." + clip, "expected a string");
                p.embeddings.emplace(clip, path.get<std::string>());
            }
        }
        if (check_files) {
            for (std::size_t r = 0; r < p.recordings.size(); ++r) {
                if (!std::filesystem::exists(base_dir / p.recordings[r])) {
                    fail(ErrorCode::MissingFile, where + ".recordings[" + std::to_string(r) + "]: " +
                                                     (base_dir / p.recordings[r]).string() + " does not exist");
                }
            }
            for (const auto& [clip, path] : p.embeddings) {
                if (!std::filesystem::exists(base_dir / path)) {
                    fail(ErrorCode::MissingFile, where + ".embeddings." + clip + ": " + (base_dir / path).string() +
                                                     " does not exist");
                }
            }
        }
        m.participants.push_back(std::move(p));
    }
    return m;
}

inline DatasetManifest parse_manifest(const std::filesystem::path& path, bool check_files = true) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingFile, "manifest " + path.string() + " does not exist");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return manifest_from_json(j, base, check_files);
}

}  // namespace voicescreen
