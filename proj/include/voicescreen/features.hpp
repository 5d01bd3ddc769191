#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/lld.hpp"
#include "voicescreen/stats.hpp"

namespace voicescreen::feat {

enum class FeatureSetId { Is09, EgemapsLite, Embedding };

inline std::string to_string(FeatureSetId id) {
    switch (id) {
        case FeatureSetId::Is09: return "is09";
        case FeatureSetId::EgemapsLite: return "egemaps-lite";
        case FeatureSetId::Embedding: return "embedding";
    }
    return "unknown";
}

inline std::optional<FeatureSetId> parse_feature_set(std::string_view s) {
    if (s == "is09") return FeatureSetId::Is09;
    if (s == "egemaps-lite") return FeatureSetId::EgemapsLite;
    if (s == "embedding") return FeatureSetId::Embedding;
    return std::nullopt;
}

inline constexpr std::size_t kIs09Dims = 384;
inline constexpr std::size_t kEgemapsLiteDims = 68;
inline constexpr double kMinVoicedSeconds = 1.0;

struct FeatureVector {
    FeatureSetId set_id = FeatureSetId::Is09;
    std::vector<double> values;
    bool quality_flag = false;  // some voiced-only block had no present value and was zero-filled

    std::size_t dims() const noexcept { return values.size(); }
};

// ---------------------------------------------------------------------------
// Functionals

inline constexpr std::size_t kFunctionalCount = 12;

inline const std::array<const char*, kFunctionalCount>& functional_names() {
    static const std::array<const char*, kFunctionalCount> names{
        "mean", "stddev", "skewness", "kurtosis", "min", "max", "range", "relpos_min", "relpos_max",
        "slope", "offset", "mse"};
    return names;
}

using FunctionalValues = std::array<double, kFunctionalCount>;

/// The 12 statistics over the present values of a contour. Time is normalized
/// to [0, 1] over the whole contour (frame i of n sits at i / (n - 1)), and the
/// regression is fitted on (time, value) pairs of present frames. Skewness and
/// kurtosis are the standardized third and fourth central moments (population,
/// kurtosis not excess); both are 0 when the standard deviation is 0.
inline FunctionalValues apply_functionals(std::span<const double> contour) {
    std::vector<double> t, v;
    const std::size_t n = contour.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (dsp::is_missing(contour[i])) continue;
        t.push_back(n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
        v.push_back(contour[i]);
    }
    if (v.empty()) fail(ErrorCode::EmptyContour, "contour has no present values");

    FunctionalValues out{};
    const std::size_t m = v.size();
    const double mean = stats::mean(v);
    std::size_t imin = 0, imax = 0;
    for (std::size_t k = 1; k < m; ++k) {
        if (v[k] < v[imin]) imin = k;
        if (v[k] > v[imax]) imax = k;
    }
    out[0] = mean;
    out[4] = v[imin];
    out[5] = v[imax];
    out[6] = v[imax] - v[imin];
    out[7] = t[imin];
    out[8] = t[imax];
    out[10] = mean;
    if (m < 2) return out;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(m);
    m3 /= static_cast<double>(m);
    m4 /= static_cast<double>(m);
    const double sd = std::sqrt(m2);
    out[1] = sd;
    if (sd > 0.0) {
        out[2] = m3 / (sd * sd * sd);
        out[3] = m4 / (m2 * m2);
    }

    const double tm = stats::mean(t);
    double stt = 0.0, stv = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        stt += (t[k] - tm) * (t[k] - tm);
        stv += (t[k] - tm) * (v[k] - mean);
    }
    const double slope = stt > 0.0 ? stv / stt : 0.0;
    const double offset = mean - slope * tm;
    double sse = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double r = v[k] - (offset + slope * t[k]);
        sse += r * r;
    }
    out[9] = slope;
    out[10] = offset;
    out[11] = sse / static_cast<double>(m);
    return out;
}

inline FunctionalValues apply_functionals(const dsp::LldContour& c) { return apply_functionals(c.values); }

/// First differences; the first frame's delta is 0. A delta is missing when
/// either of its frames is.
inline std::vector<double> delta(std::span<const double> x) {
    std::vector<double> d(x.size(), dsp::kMissing);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (dsp::is_missing(x[i])) continue;
        if (i == 0) {
            d[i] = 0.0;
        } else if (!dsp::is_missing(x[i - 1])) {
            d[i] = x[i] - x[i - 1];
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Feature sets

inline const std::vector<std::string>& is09_llds() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"zcr", "rms", "f0", "hnr"};
        for (int i = 1; i <= 12; ++i) n.push_back("mfcc" + std::to_string(i));
        return n;
    }();
    return names;
}

inline const std::vector<std::string>& egemaps_lite_llds() {
    static const std::vector<std::string> names{"log_f0",   "energy_db",      "jitter",      "shimmer", "hnr",
                                                "centroid", "slope_0_500",    "slope_500_1500",
                                                "alpha_ratio", "hammarberg",  "mfcc1",       "mfcc2",   "mfcc3"};
    return names;
}

inline const std::array<const char*, 5>& egemaps_lite_functionals() {
    static const std::array<const char*, 5> names{"mean", "stddev", "p20", "p50", "p80"};
    return names;
}

inline const std::vector<std::string>& feature_names(FeatureSetId id) {
    static const std::vector<std::string> is09 = [] {
        std::vector<std::string> n;
        for (const char* suffix : {"", "_delta"}) {
            for (const auto& lld : is09_llds()) {
                for (const char* f : functional_names()) n.push_back(lld + suffix + "_" + f);
            }
        }
        return n;
    }();
    static const std::vector<std::string> egemaps = [] {
        std::vector<std::string> n;
        for (const auto& lld : egemaps_lite_llds()) {
            for (const char* f : egemaps_lite_functionals()) n.push_back(lld + "_" + f);
        }
        for (const char* s : {"voiced_ratio", "voiced_segments_per_s", "voiced_segment_mean_s"}) n.emplace_back(s);
        return n;
    }();
    static const std::vector<std::string> none;
    switch (id) {
        case FeatureSetId::Is09: return is09;
        case FeatureSetId::EgemapsLite: return egemaps;
        default: return none;
    }
}

namespace detail {

inline void require_voiced(const dsp::LldSet& llds) {
    const double voiced_s = static_cast<double>(llds.voiced_frames()) * dsp::kHopMs / 1000.0;
    if (voiced_s + 1e-9 < kMinVoicedSeconds) {
        fail(ErrorCode::InsufficientVoiced,
             "clip has " + std::to_string(voiced_s) + " s of voiced frames, features need at least 1 s");
    }
}

/// Appends `width` values from `fn(contour)`, or zeros plus the quality flag
/// when the contour has no present value.
template <typename Fn>
void append_block(FeatureVector& fv, std::span<const double> contour, std::size_t width, Fn&& fn) {
    const bool any = std::any_of(contour.begin(), contour.end(), [](double x) { return !dsp::is_missing(x); });
    if (!any) {
        fv.values.insert(fv.values.end(), width, 0.0);
        fv.quality_flag = true;
        return;
    }
    const auto block = fn(contour);
    fv.values.insert(fv.values.end(), block.begin(), block.end());
}

inline std::array<double, 5> summary5(std::span<const double> contour) {
    std::vector<double> v;
    for (double x : contour) {
        if (!dsp::is_missing(x)) v.push_back(x);
    }
    std::sort(v.begin(), v.end());
    return {stats::mean(v), stats::stddev(v), stats::percentile_sorted(v, 20.0), stats::percentile_sorted(v, 50.0),
            stats::percentile_sorted(v, 80.0)};
}

}  // namespace detail

/// 16 LLDs and their deltas, 12 functionals each: all LLD blocks first, then
/// all delta blocks.
inline FeatureVector extract_is09(const dsp::LldSet& llds) {
    detail::require_voiced(llds);
    FeatureVector fv;
    fv.set_id = FeatureSetId::Is09;
    fv.values.reserve(kIs09Dims);
    auto functionals = [](std::span<const double> c) { return apply_functionals(c); };
    for (const auto& name : is09_llds()) {
        detail::append_block(fv, llds.get(name).values, kFunctionalCount, functionals);
    }
    for (const auto& name : is09_llds()) {
        const auto d = delta(llds.get(name).values);
        detail::append_block(fv, d, kFunctionalCount, functionals);
    }
    return fv;
}

/// Voiced runs of the pitch track: ratio of voiced frames, runs per second of
/// clip, and mean run length in seconds.
inline std::array<double, 3> temporal_statistics(const dsp::LldSet& llds) {
    const auto& v = llds.voicing.is_voiced;
    const double hop_s = dsp::kHopMs / 1000.0;
    std::size_t voiced = 0, runs = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i]) continue;
        ++voiced;
        if (i == 0 || !v[i - 1]) ++runs;
    }
    const double frames = static_cast<double>(v.size());
    const double duration_s = frames > 0.0 ? (frames - 1.0) * hop_s + dsp::kPitchFrameMs / 1000.0 : 0.0;
    return {frames > 0.0 ? static_cast<double>(voiced) / frames : 0.0,
            duration_s > 0.0 ? static_cast<double>(runs) / duration_s : 0.0,
            runs ? static_cast<double>(voiced) * hop_s / static_cast<double>(runs) : 0.0};
}

/// 13 LLDs x (mean, stddev, p20, p50, p80) plus 3 temporal statistics.
inline FeatureVector extract_egemaps_lite(const dsp::LldSet& llds) {
    detail::require_voiced(llds);
    FeatureVector fv;
    fv.set_id = FeatureSetId::EgemapsLite;
    fv.values.reserve(kEgemapsLiteDims);
    for (const auto& name : egemaps_lite_llds()) {
        detail::append_block(fv, llds.get(name).values, 5, detail::summary5);
    }
    const auto temporal = temporal_statistics(llds);
    fv.values.insert(fv.values.end(), temporal.begin(), temporal.end());
    return fv;
}

inline FeatureVector extract(FeatureSetId id, const dsp::LldSet& llds) {
    switch (id) {
        case FeatureSetId::Is09: return extract_is09(llds);
        case FeatureSetId::EgemapsLite: return extract_egemaps_lite(llds);
        default: fail(ErrorCode::InvalidArgument, "embedding features are loaded, not extracted");
    }
}

inline FeatureVector extract_is09(const AudioBuffer& clip) { return extract_is09(dsp::compute_llds(clip)); }
inline FeatureVector extract_egemaps_lite(const AudioBuffer& clip) {
    return extract_egemaps_lite(dsp::compute_llds(clip));
}

// ---------------------------------------------------------------------------
// FVEC embedding files: "FVEC", u32 version, u32 n_frames, u32 dims, then
// n_frames x dims float32, all little-endian.

inline constexpr std::uint32_t kFvecVersion = 1;
inline constexpr std::size_t kFvecHeaderBytes = 16;

struct EmbeddingMatrix {
    std::size_t n_frames = 0;
    std::size_t dims = 0;
    std::vector<float> values;  // row-major

    float at(std::size_t frame, std::size_t dim) const { return values[frame * dims + dim]; }
};

inline EmbeddingMatrix decode_fvec(std::span<const unsigned char> bytes) {
    if (bytes.size() < kFvecHeaderBytes || std::memcmp(bytes.data(), "FVEC", 4) != 0) {
        fail(ErrorCode::BadMagic, "embedding file does not start with FVEC");
    }
    const std::uint32_t version = voicescreen::detail::read_u32(bytes.data() + 4);
    if (version != kFvecVersion) fail(ErrorCode::BadMagic, "unsupported FVEC version " + std::to_string(version));
    EmbeddingMatrix m;
    m.n_frames = voicescreen::detail::read_u32(bytes.data() + 8);
    m.dims = voicescreen::detail::read_u32(bytes.data() + 12);
    if (m.n_frames == 0 || m.dims == 0) fail(ErrorCode::DimMismatch, "FVEC declares an empty matrix");
    const std::size_t expected = m.n_frames * m.dims;
    const std::size_t payload = bytes.size() - kFvecHeaderBytes;
    if (payload != expected * 4) {
        fail(ErrorCode::DimMismatch, "FVEC declares " + std::to_string(m.n_frames) + "x" + std::to_string(m.dims) +
                                         " but carries " + std::to_string(payload) + " payload bytes");
    }
    m.values.resize(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        const float v = std::bit_cast<float>(voicescreen::detail::read_u32(bytes.data() + kFvecHeaderBytes + 4 * i));
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteValue, "FVEC value " + std::to_string(i) + " is not finite");
        }
        m.values[i] = v;
    }
    return m;
}

inline EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_fvec(bytes);
}

inline std::vector<unsigned char> encode_fvec(const EmbeddingMatrix& m) {
    if (m.values.size() != m.n_frames * m.dims) fail(ErrorCode::DimMismatch, "matrix shape and payload disagree");
    std::vector<unsigned char> out{'F', 'V', 'E', 'C'};
    voicescreen::detail::put_u32(out, kFvecVersion);
    voicescreen::detail::put_u32(out, static_cast<std::uint32_t>(m.n_frames));
    voicescreen::detail::put_u32(out, static_cast<std::uint32_t>(m.dims));
    for (float v : m.values) voicescreen::detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

inline void write_embedding_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m) {
    write_file_atomic(path, encode_fvec(m));
}

/// Column means. Each column is summed in sorted order, so the result does not
/// depend on frame order.
inline FeatureVector pool_mean(const EmbeddingMatrix& m) {
    if (m.n_frames == 0) fail(ErrorCode::DimMismatch, "cannot pool an empty matrix");
    FeatureVector fv;
    fv.set_id = FeatureSetId::Embedding;
    fv.values.resize(m.dims);
    std::vector<double> column(m.n_frames);
    for (std::size_t j = 0; j < m.dims; ++j) {
        for (std::size_t i = 0; i < m.n_frames; ++i) column[i] = m.at(i, j);
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (double x : column) sum += x;
        fv.values[j] = sum / static_cast<double>(m.n_frames);
    }
    return fv;
}

/// Sidecar index: a JSON object mapping clip id to FVEC path (relative paths
/// resolve against the index file's directory).
inline std::map<std::string, std::filesystem::path> load_embedding_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::SchemaViolation, path.string() + ": expected an object of clip id -> path");
    std::map<std::string, std::filesystem::path> index;
    for (const auto& [clip, p] : j.items()) {
        if (!p.is_string()) fail(ErrorCode::SchemaViolation, path.string() + ": $." + clip + " must be a string");
        index.emplace(clip, path.parent_path() / p.get<std::string>());
    }
    return index;
}

}  // namespace voicescreen::feat
