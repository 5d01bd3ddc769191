#pragma once

// Pipeline configuration: scenario filter, clip sampling, feature set, model,
// training hyperparameters, fold count and the global seed. Serializes to and
// from a single JSON object.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "voicescreen/error.hpp"
#include "voicescreen/features.hpp"
#include "voicescreen/manifest.hpp"
#include "voicescreen/models.hpp"
#include "voicescreen/segmenter.hpp"

namespace voicescreen {

inline constexpr int kPipelineVersion = 1;

struct PipelineConfig {
    std::vector<Scenario> scenarios{Scenario::Interview, Scenario::Chatbot, Scenario::Reading, Scenario::Synthetic};
    seg::ClipSamplingConfig sampling;  // the seed field is derived per (T, N) cell
    double threshold_db = seg::kDefaultThresholdDb;
    double min_region_ms = seg::kDefaultMinRegionMs;
    feat::FeatureSetId feature_set = feat::FeatureSetId::EgemapsLite;
    model::ModelKind model = model::ModelKind::Mlp;
    model::TrainConfig train;  // the seed field is derived per fold
    int folds = 5;
    std::uint64_t seed = 0;

    bool includes(Scenario s) const {
        for (auto x : scenarios) {
            if (x == s) return true;
        }
        return false;
    }

    void validate() const {
        if (scenarios.empty()) fail(ErrorCode::InvalidArgument, "scenario filter is empty");
        sampling.validate();
        train.validate();
        if (folds < 2) fail(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");
        if (!std::isfinite(threshold_db)) fail(ErrorCode::InvalidArgument, "threshold_db must be finite");
        if (!(min_region_ms >= 0.0)) fail(ErrorCode::InvalidArgument, "min_region_ms must be non-negative");
    }

    bool operator==(const PipelineConfig& o) const {
        return scenarios == o.scenarios && sampling.clip_duration_s == o.sampling.clip_duration_s &&
               sampling.clip_count == o.sampling.clip_count && sampling.min_voiced_ratio == o.sampling.min_voiced_ratio &&
               sampling.allow_overlap == o.sampling.allow_overlap && threshold_db == o.threshold_db &&
               min_region_ms == o.min_region_ms && feature_set == o.feature_set && model == o.model &&
               train.learning_rate == o.train.learning_rate && train.epochs == o.train.epochs &&
               train.batch_size == o.train.batch_size && train.l2 == o.train.l2 &&
               train.hidden_dim == o.train.hidden_dim && folds == o.folds && seed == o.seed;
    }
};

inline nlohmann::ordered_json scenarios_json(const std::vector<Scenario>& s) {
    auto j = nlohmann::ordered_json::array();
    for (auto x : s) j.push_back(to_string(x));
    return j;
}

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["version"] = kPipelineVersion;
    j["scenario"] = scenarios_json(c.scenarios);
    j["T"] = c.sampling.clip_duration_s;
    j["N"] = c.sampling.clip_count;
    j["min_voiced_ratio"] = c.sampling.min_voiced_ratio;
    j["allow_overlap"] = c.sampling.allow_overlap;
    j["threshold_db"] = c.threshold_db;
    j["min_region_ms"] = c.min_region_ms;
    j["feature_set"] = feat::to_string(c.feature_set);
    j["model"] = model::to_string(c.model);
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"l2", c.train.l2},
                  {"hidden_dim", c.train.hidden_dim}};
    j["folds"] = c.folds;
    j["seed"] = c.seed;
    return j;
}

namespace detail {

template <typename T>
T config_value(const nlohmann::json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::SchemaViolation, where + ": wrong type");
    }
}

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) fail(ErrorCode::SchemaViolation, where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) fail(ErrorCode::SchemaViolation, where + "." + key + ": unknown field");
    }
}

}  // namespace detail

/// Fields absent from `j` keep their values from `base`.
inline PipelineConfig pipeline_from_json(const nlohmann::json& j, PipelineConfig base = {}) {
    using detail::config_value;
    detail::check_keys(j,
                       {"version", "scenario", "T", "N", "min_voiced_ratio", "allow_overlap", "threshold_db",
                        "min_region_ms", "feature_set", "model", "train", "folds", "seed"},
                       "$");
    PipelineConfig c = std::move(base);
    if (j.contains("version") && config_value<int>(j["version"], "$.version") != kPipelineVersion) {
        fail(ErrorCode::SchemaViolation, "$.version: unsupported pipeline config version");
    }
    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        c.scenarios.clear();
        auto add = [&](const nlohmann::json& v, const std::string& where) {
            const auto parsed = parse_scenario(config_value<std::string>(v, where));
            if (!parsed) fail(ErrorCode::SchemaViolation, where + ": unknown scenario");
            c.scenarios.push_back(*parsed);
        };
        if (s.is_array()) {
            for (std::size_t i = 0; i < s.size(); ++i) add(s[i], "$.scenario[" + std::to_string(i) + "]");
        } else {
            add(s, "$.scenario");
        }
    }
    if (j.contains("T")) c.sampling.clip_duration_s = config_value<double>(j["T"], "$.T");
    if (j.contains("N")) c.sampling.clip_count = config_value<int>(j["N"], "$.N");
    if (j.contains("min_voiced_ratio")) {
        c.sampling.min_voiced_ratio = config_value<double>(j["min_voiced_ratio"], "$.min_voiced_ratio");
    }
    if (j.contains("allow_overlap")) c.sampling.allow_overlap = config_value<bool>(j["allow_overlap"], "$.allow_overlap");
    if (j.contains("threshold_db")) c.threshold_db = config_value<double>(j["threshold_db"], "$.threshold_db");
    if (j.contains("min_region_ms")) c.min_region_ms = config_value<double>(j["min_region_ms"], "$.min_region_ms");
    if (j.contains("feature_set")) {
        const auto parsed = feat::parse_feature_set(config_value<std::string>(j["feature_set"], "$.feature_set"));
        if (!parsed) fail(ErrorCode::SchemaViolation, "$.feature_set: unknown feature set");
        c.feature_set = *parsed;
    }
    if (j.contains("model")) {
        const auto parsed = model::parse_model_kind(config_value<std::string>(j["model"], "$.model"));
        if (!parsed) fail(ErrorCode::SchemaViolation, "$.model: expected mlp or svm");
        c.model = *parsed;
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        detail::check_keys(t, {"learning_rate", "epochs", "batch_size", "l2", "hidden_dim"}, "$.train");
        if (t.contains("learning_rate")) c.train.learning_rate = config_value<double>(t["learning_rate"], "$.train.learning_rate");
        if (t.contains("epochs")) c.train.epochs = config_value<int>(t["epochs"], "$.train.epochs");
        if (t.contains("batch_size")) c.train.batch_size = config_value<int>(t["batch_size"], "$.train.batch_size");
        if (t.contains("l2")) c.train.l2 = config_value<double>(t["l2"], "$.train.l2");
        if (t.contains("hidden_dim")) c.train.hidden_dim = config_value<int>(t["hidden_dim"], "$.train.hidden_dim");
    }
    if (j.contains("folds")) c.folds = config_value<int>(j["folds"], "$.folds");
    if (j.contains("seed")) c.seed = config_value<std::uint64_t>(j["seed"], "$.seed");
    c.validate();
    return c;
}

}  // namespace voicescreen
