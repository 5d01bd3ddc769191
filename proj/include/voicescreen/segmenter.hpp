#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/lld.hpp"
#include "voicescreen/rng.hpp"
#include "voicescreen/stats.hpp"

namespace voicescreen::seg {

inline constexpr double kDefaultThresholdDb = -25.0;
inline constexpr double kDefaultMinRegionMs = 100.0;
inline constexpr double kDefaultMinVoicedRatio = 0.5;
inline constexpr double kActivityFrameMs = 25.0;
inline constexpr double kActivityHopMs = 10.0;
inline constexpr double kReferencePercentile = 95.0;
inline constexpr double kGridStepS = 1.0;

struct VoicedRegion {
    double start_s = 0.0;
    double end_s = 0.0;
    double duration_s() const noexcept { return end_s - start_s; }
    bool operator==(const VoicedRegion&) const = default;
};

/// Energy-based activity detection. A 25 ms frame is active when its RMS
/// level exceeds the recording's 95th-percentile frame level plus
/// `threshold_db`; floor-level frames never are. A run of active frames spans
/// from the centre of its first frame to the centre of its last, stretched to
/// the recording edges when the run touches them.
inline std::vector<VoicedRegion> detect_voiced_regions(const AudioBuffer& buf,
                                                       double threshold_db = kDefaultThresholdDb,
                                                       double min_region_ms = kDefaultMinRegionMs) {
    if (buf.empty()) fail(ErrorCode::EmptyAudio, "cannot detect regions in an empty buffer");
    const int rate = buf.sample_rate_hz;
    const std::size_t len = ms_to_samples(kActivityFrameMs, rate);
    const std::size_t hop = ms_to_samples(kActivityHopMs, rate);
    if (buf.size() < len) return {};

    const std::size_t count = (buf.size() - len) / hop + 1;
    std::vector<double> level(count);
    const std::span<const double> x(buf.samples);
    for (std::size_t i = 0; i < count; ++i) level[i] = dsp::energy_rms_db(x.subspan(i * hop, len));
    const double reference = stats::percentile(level, kReferencePercentile);
    const double threshold = reference + threshold_db;

    std::vector<VoicedRegion> regions;
    const double duration = buf.duration_s();
    const double centre_offset = 0.5 * static_cast<double>(len) / rate;
    std::size_t i = 0;
    while (i < count) {
        const bool active = level[i] > threshold && level[i] > dsp::kEnergyFloorDb;
        if (!active) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < count && level[j + 1] > threshold && level[j + 1] > dsp::kEnergyFloorDb) ++j;
        VoicedRegion r;
        r.start_s = i == 0 ? 0.0 : static_cast<double>(i * hop) / rate + centre_offset;
        r.end_s = j + 1 == count ? duration : static_cast<double>(j * hop) / rate + centre_offset;
        if (r.duration_s() * 1000.0 >= min_region_ms && r.end_s > r.start_s) regions.push_back(r);
        i = j + 1;
    }
    return regions;
}

/// Fraction of [start_s, end_s] covered by the (sorted, disjoint) regions.
inline double voiced_coverage(std::span<const VoicedRegion> regions, double start_s, double end_s) {
    if (!(end_s > start_s)) return 0.0;
    double covered = 0.0;
    for (const auto& r : regions) {
        const double a = std::max(r.start_s, start_s);
        const double b = std::min(r.end_s, end_s);
        if (b > a) covered += b - a;
    }
    return covered / (end_s - start_s);
}

struct ClipSamplingConfig {
    double clip_duration_s = 10.0;  // T
    int clip_count = 5;             // N
    std::uint64_t seed = 0;
    double min_voiced_ratio = kDefaultMinVoicedRatio;
    bool allow_overlap = false;

    void validate() const {
        if (!(clip_duration_s > 0.0) || !std::isfinite(clip_duration_s)) {
            fail(ErrorCode::InvalidArgument, "clip duration must be positive");
        }
        if (clip_count < 1) fail(ErrorCode::InvalidArgument, "clip count must be at least 1");
        if (!(min_voiced_ratio >= 0.0 && min_voiced_ratio <= 1.0)) {
            fail(ErrorCode::InvalidArgument, "min_voiced_ratio must lie in [0, 1]");
        }
    }
};

/// Where a clip comes from, without its samples.
struct ClipPlacement {
    std::size_t source = 0;  // index into the recordings handed to the planner
    std::string participant_id;
    std::string recording_id;
    double start_s = 0.0;
    std::size_t start_sample = 0;
    std::size_t length = 0;
    bool overlap_flag = false;

    std::string clip_id(double duration_s) const;
};

struct Clip {
    std::string participant_id;
    std::string recording_id;
    double start_s = 0.0;
    AudioBuffer buffer;
    bool overlap_flag = false;

    double duration_s() const noexcept { return buffer.duration_s(); }
    std::string clip_id() const;
};

namespace detail {

inline std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", s);
    return buf;
}

}  // namespace detail

/// Stable clip identifier: participant/recording@start+T.
inline std::string make_clip_id(const std::string& participant, const std::string& recording, double start_s,
                                double duration_s) {
    return participant + "/" + recording + "@" + detail::format_seconds(start_s) + "+" +
           detail::format_seconds(duration_s);
}

inline std::string ClipPlacement::clip_id(double duration_s) const {
    return make_clip_id(participant_id, recording_id, start_s, duration_s);
}

inline std::string Clip::clip_id() const {
    return make_clip_id(participant_id, recording_id, start_s, duration_s());
}

/// One recording offered to the planner; only its length and rate matter.
struct RecordingView {
    std::string recording_id;
    std::size_t n_samples = 0;
    int sample_rate_hz = kCanonicalRate;
    std::span<const VoicedRegion> regions;

    RecordingView() = default;
    RecordingView(std::string id, std::size_t n, int rate, std::span<const VoicedRegion> r)
        : recording_id(std::move(id)), n_samples(n), sample_rate_hz(rate), regions(r) {}
    RecordingView(std::string id, const AudioBuffer& buf, std::span<const VoicedRegion> r)
        : RecordingView(std::move(id), buf.size(), buf.sample_rate_hz, r) {}

    double duration_s() const { return static_cast<double>(n_samples) / sample_rate_hz; }
};

struct Candidate {
    std::size_t source = 0;
    double start_s = 0.0;
};

/// Grid positions (1 s stride) whose T-second window fits in the recording
/// and meets the voiced-coverage floor.
inline std::vector<double> candidate_starts(std::size_t n_samples, int rate, std::span<const VoicedRegion> regions,
                                            const ClipSamplingConfig& cfg) {
    std::vector<double> starts;
    const auto length = static_cast<std::size_t>(std::llround(cfg.clip_duration_s * rate));
    for (std::size_t k = 0;; ++k) {
        const double start = static_cast<double>(k) * kGridStepS;
        const auto first = static_cast<std::size_t>(std::llround(start * rate));
        if (first + length > n_samples) break;
        if (voiced_coverage(regions, start, start + cfg.clip_duration_s) >= cfg.min_voiced_ratio) {
            starts.push_back(start);
        }
    }
    return starts;
}

namespace detail {

/// Uniform draw of `k` pairwise-disjoint candidates (same-source windows closer
/// than T overlap). `next[i]` is the first candidate compatible with i; the
/// table counts compatible k-subsets of every suffix.
class DisjointSampler {
public:
    DisjointSampler(std::span<const Candidate> sorted, double duration) : next_(sorted.size()) {
        const std::size_t m = sorted.size();
        std::size_t j = 0;
        for (std::size_t i = 0; i < m; ++i) {
            j = std::max(j, i + 1);
            while (j < m && sorted[j].source == sorted[i].source && sorted[j].start_s < sorted[i].start_s + duration) {
                ++j;
            }
            next_[i] = j;
        }
    }

    /// Size of the largest disjoint subset (earliest-finish greedy).
    std::size_t max_disjoint() const {
        std::size_t count = 0;
        for (std::size_t i = 0; i < next_.size(); i = next_[i]) ++count;
        return count;
    }

    std::vector<std::size_t> sample(std::size_t k, Rng& rng) const {
        const std::size_t m = next_.size();
        // ways[i][r]: number of disjoint r-subsets of candidates i..m-1.
        std::vector<long double> ways((m + 1) * (k + 1), 0.0L);
        auto at = [&](std::size_t i, std::size_t r) -> long double& { return ways[i * (k + 1) + r]; };
        for (std::size_t i = 0; i <= m; ++i) at(i, 0) = 1.0L;
        for (std::size_t i = m; i-- > 0;) {
            for (std::size_t r = 1; r <= k; ++r) at(i, r) = at(i + 1, r) + at(next_[i], r - 1);
        }
        std::vector<std::size_t> chosen;
        std::size_t i = 0, r = k;
        while (r > 0 && i < m) {
            const long double take = at(next_[i], r - 1) / at(i, r);
            if (static_cast<long double>(uniform01(rng)) < take) {
                chosen.push_back(i);
                i = next_[i];
                --r;
            } else {
                ++i;
            }
        }
        return chosen;
    }

private:
    std::vector<std::size_t> next_;
};

/// `count` distinct indices from [0, n) excluding `taken`, uniformly.
inline std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t count, const std::vector<bool>& taken,
                                              Rng& rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) pool.push_back(i);
    }
    count = std::min(count, pool.size());
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace detail

/// Chooses N clip positions across one participant's recordings. Candidates
/// are drawn uniformly without replacement; with allow_overlap false the draw
/// is uniform over pairwise-disjoint N-subsets. When no such subset exists the
/// largest disjoint subset is topped up with other candidates (and with
/// repeats once candidates run out), and the overlapping clips are flagged.
inline std::vector<ClipPlacement> plan_clips(const std::string& participant_id,
                                             std::span<const RecordingView> recordings,
                                             const ClipSamplingConfig& cfg) {
    cfg.validate();
    bool any_long_enough = false;
    std::vector<Candidate> candidates;
    for (std::size_t s = 0; s < recordings.size(); ++s) {
        const RecordingView& rec = recordings[s];
        if (rec.duration_s() + 1e-9 >= cfg.clip_duration_s) any_long_enough = true;
        for (double start : candidate_starts(rec.n_samples, rec.sample_rate_hz, rec.regions, cfg)) {
            candidates.push_back({s, start});
        }
    }
    if (!any_long_enough) {
        fail(ErrorCode::InsufficientAudio, "participant " + participant_id + ": no recording is at least " +
                                               detail::format_seconds(cfg.clip_duration_s) + " s long");
    }
    if (candidates.empty()) {
        fail(ErrorCode::InsufficientVoiced, "participant " + participant_id + ": no " +
                                                detail::format_seconds(cfg.clip_duration_s) +
                                                " s window reaches the voiced-coverage floor");
    }

    std::string stream;
    for (const auto& r : recordings) stream += (stream.empty() ? "" : "\n") + r.recording_id;
    Rng rng = make_rng(derive_seed(cfg.seed, participant_id, stream));

    const auto n = static_cast<std::size_t>(cfg.clip_count);
    const std::size_t m = candidates.size();
    std::vector<std::size_t> chosen;
    std::vector<bool> taken(m, false);
    if (!cfg.allow_overlap) {
        const detail::DisjointSampler sampler(candidates, cfg.clip_duration_s);
        chosen = sampler.sample(std::min(n, sampler.max_disjoint()), rng);
        for (std::size_t c : chosen) taken[c] = true;
    }
    for (std::size_t c : detail::draw_distinct(m, n - chosen.size(), taken, rng)) {
        chosen.push_back(c);
        taken[c] = true;
    }
    while (chosen.size() < n) chosen.push_back(static_cast<std::size_t>(uniform_index(rng, m)));
    std::sort(chosen.begin(), chosen.end());

    std::vector<ClipPlacement> out;
    out.reserve(n);
    for (std::size_t c : chosen) {
        const auto& cand = candidates[c];
        const int rate = recordings[cand.source].sample_rate_hz;
        ClipPlacement p;
        p.source = cand.source;
        p.participant_id = participant_id;
        p.recording_id = recordings[cand.source].recording_id;
        p.start_s = cand.start_s;
        p.start_sample = static_cast<std::size_t>(std::llround(cand.start_s * rate));
        p.length = static_cast<std::size_t>(std::llround(cfg.clip_duration_s * rate));
        out.push_back(std::move(p));
    }
    for (std::size_t a = 0; a < out.size(); ++a) {
        for (std::size_t b = a + 1; b < out.size(); ++b) {
            if (out[a].source == out[b].source &&
                std::abs(out[a].start_s - out[b].start_s) < cfg.clip_duration_s) {
                out[a].overlap_flag = out[b].overlap_flag = true;
            }
        }
    }
    return out;
}

inline Clip extract_clip(const ClipPlacement& p, const AudioBuffer& buf) {
    Clip clip;
    clip.participant_id = p.participant_id;
    clip.recording_id = p.recording_id;
    clip.start_s = p.start_s;
    clip.overlap_flag = p.overlap_flag;
    const auto first = buf.samples.begin() + static_cast<std::ptrdiff_t>(p.start_sample);
    clip.buffer.samples.assign(first, first + static_cast<std::ptrdiff_t>(p.length));
    clip.buffer.sample_rate_hz = buf.sample_rate_hz;
    return clip;
}

/// N clips of exactly T seconds from one recording. The generator is seeded
/// from (cfg.seed, participant_id, recording_id).
inline std::vector<Clip> sample_clips(const AudioBuffer& buf, std::span<const VoicedRegion> regions,
                                      const ClipSamplingConfig& cfg, const std::string& participant_id = "",
                                      const std::string& recording_id = "") {
    if (buf.duration_s() + 1e-9 < cfg.clip_duration_s) {
        fail(ErrorCode::InsufficientAudio, "recording lasts " + detail::format_seconds(buf.duration_s()) +
                                               " s, clips need " + detail::format_seconds(cfg.clip_duration_s) +
                                               " s");
    }
    const RecordingView view(recording_id, buf, regions);
    std::vector<Clip> clips;
    for (const auto& p : plan_clips(participant_id, std::span<const RecordingView>(&view, 1), cfg)) {
        clips.push_back(extract_clip(p, buf));
    }
    return clips;
}

inline nlohmann::ordered_json inventory_entry(const ClipPlacement& p, double duration_s) {
    nlohmann::ordered_json j;
    j["participant_id"] = p.participant_id;
    j["recording_id"] = p.recording_id;
    j["start_s"] = p.start_s;
    j["duration_s"] = duration_s;
    j["overlap_flag"] = p.overlap_flag;
    return j;
}

/// Clip inventory as JSON lines.
inline std::string inventory_jsonl(std::span<const ClipPlacement> placements, double duration_s) {
    std::string out;
    for (const auto& p : placements) out += inventory_entry(p, duration_s).dump() + "\n";
    return out;
}

}  // namespace voicescreen::seg
