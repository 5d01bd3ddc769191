#pragma once

// Participant-stratified cross-validation with clip-level prediction and
// participant-level majority voting, confusion metrics, and the T x N sweep.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/features.hpp"
#include "voicescreen/lld.hpp"
#include "voicescreen/manifest.hpp"
#include "voicescreen/models.hpp"
#include "voicescreen/parallel.hpp"
#include "voicescreen/pipeline.hpp"
#include "voicescreen/rng.hpp"
#include "voicescreen/segmenter.hpp"

#ifndef VOICESCREEN_VERSION
#define VOICESCREEN_VERSION "0.0.0"
#endif

namespace voicescreen::eval {

using ojson = nlohmann::ordered_json;

inline constexpr int kReportVersion = 1;

// ---------------------------------------------------------------------------
// Confusion counts and metrics (positive class = depressed)

struct ConfusionCounts {
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;

    std::size_t total() const noexcept { return tp + fn + tn + fp; }

    void add(int truth, int predicted) {
        if (truth == 1) {
            (predicted == 1 ? tp : fn) += 1;
        } else {
            (predicted == 1 ? fp : tn) += 1;
        }
    }

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fn += o.fn;
        tn += o.tn;
        fp += o.fp;
        return *this;
    }

    bool operator==(const ConfusionCounts&) const = default;
};

/// Ratios with a zero denominator are absent, never 0.
struct MetricsReport {
    std::optional<double> accuracy, sensitivity, specificity, precision;
    ConfusionCounts counts;
};

inline MetricsReport compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) fail(ErrorCode::EmptyCounts, "no evaluated participants");
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    MetricsReport r;
    r.counts = c;
    r.accuracy = ratio(c.tp + c.tn, c.total());
    r.sensitivity = ratio(c.tp, c.tp + c.fn);
    r.specificity = ratio(c.tn, c.tn + c.fp);
    r.precision = ratio(c.tp, c.tp + c.fp);
    return r;
}

inline ojson counts_json(const ConfusionCounts& c) {
    return ojson{{"tp", c.tp}, {"fn", c.fn}, {"tn", c.tn}, {"fp", c.fp}};
}

inline ojson metrics_json(const std::optional<MetricsReport>& m) {
    auto v = [](const std::optional<double>& x) { return x ? ojson(*x) : ojson(nullptr); };
    if (!m) return ojson{{"accuracy", nullptr}, {"sensitivity", nullptr}, {"specificity", nullptr}, {"precision", nullptr}};
    return ojson{{"accuracy", v(m->accuracy)},
                 {"sensitivity", v(m->sensitivity)},
                 {"specificity", v(m->specificity)},
                 {"precision", v(m->precision)}};
}

// ---------------------------------------------------------------------------
// Voting

/// Modal label of the clip predictions; an exact tie goes to positive.
inline int majority_vote(std::span<const int> labels) {
    if (labels.empty()) fail(ErrorCode::EmptyVote, "majority vote over no clips");
    std::size_t pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) fail(ErrorCode::InvalidArgument, "clip labels must be 0 or 1");
        pos += static_cast<std::size_t>(l);
    }
    return 2 * pos >= labels.size() ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Folds

struct FoldMember {
    std::string id;
    int label = 0;
};

/// folds[f] lists the participant ids held out in fold f, sorted.
using FoldAssignment = std::vector<std::vector<std::string>>;

/// Each label stratum is sorted by id, shuffled by the "folds" stream of the
/// seed, and dealt round-robin. The healthy stratum continues dealing where
/// the depressed one stopped so fold totals stay within one of each other.
inline FoldAssignment make_participant_folds(std::span<const FoldMember> participants, int k, std::uint64_t seed) {
    if (k < 2) fail(ErrorCode::InvalidArgument, "need at least 2 folds");
    std::vector<std::string> strata[2];
    std::set<std::string> seen;
    for (const auto& p : participants) {
        if (p.label != 0 && p.label != 1) fail(ErrorCode::InvalidArgument, "labels must be 0 or 1");
        if (!seen.insert(p.id).second) fail(ErrorCode::DuplicateId, "participant " + p.id + " listed twice");
        strata[p.label].push_back(p.id);
    }
    const auto folds = static_cast<std::size_t>(k);
    for (int label : {1, 0}) {
        if (strata[label].size() < folds) {
            fail(ErrorCode::TooFewParticipants, std::string(label ? "depressed" : "healthy") + " class has " +
                                                    std::to_string(strata[label].size()) + " participants, " +
                                                    std::to_string(k) + " folds need at least that many");
        }
    }
    Rng rng = make_rng(derive_seed(seed, "folds"));
    FoldAssignment out(folds);
    std::size_t next = 0;
    for (int label : {1, 0}) {
        auto& ids = strata[label];
        std::sort(ids.begin(), ids.end());
        shuffle(std::span<std::string>(ids), rng);
        for (auto& id : ids) {
            out[next % folds].push_back(std::move(id));
            ++next;
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

/// Throws LeakageDetected unless the folds are pairwise disjoint and cover
/// exactly `ids`.
inline void verify_partition(const FoldAssignment& folds, std::span<const std::string> ids) {
    std::set<std::string> seen;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (const auto& id : folds[f]) {
            if (!seen.insert(id).second) {
                fail(ErrorCode::LeakageDetected, "participant " + id + " appears in more than one fold");
            }
        }
    }
    const std::set<std::string> expected(ids.begin(), ids.end());
    if (seen != expected) fail(ErrorCode::LeakageDetected, "folds do not cover the participant set exactly");
}

// ---------------------------------------------------------------------------
// Audit log of fit calls

struct AuditEntry {
    std::string cell;
    std::size_t fold = 0;
    std::string call;                       // "standardizer" or "model"
    std::vector<std::string> participants;  // sorted ids whose rows reached the fit

    auto key() const { return std::tie(cell, fold, call); }
};

/// Append-only; entries() returns them sorted by (cell, fold, call).
class AuditLog {
public:
    void record(AuditEntry e) {
        std::lock_guard lock(mutex_);
        entries_.push_back(std::move(e));
    }

    std::vector<AuditEntry> entries() const {
        std::lock_guard lock(mutex_);
        auto out = entries_;
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
        return out;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

private:
    mutable std::mutex mutex_;
    std::vector<AuditEntry> entries_;
};

/// Number of fit calls of `cell` that saw a participant held out in the
/// fold they were made for.
inline std::size_t count_leaks(const AuditLog& log, const std::string& cell, const FoldAssignment& folds) {
    std::size_t leaks = 0;
    for (const auto& e : log.entries()) {
        if (e.cell != cell) continue;
        if (e.fold >= folds.size()) {
            ++leaks;
            continue;
        }
        const auto& test = folds[e.fold];
        for (const auto& id : e.participants) {
            if (std::binary_search(test.begin(), test.end(), id)) ++leaks;
        }
    }
    return leaks;
}

inline ojson audit_json(const AuditLog& log) {
    auto arr = ojson::array();
    for (const auto& e : log.entries()) {
        arr.push_back(ojson{{"cell", e.cell}, {"fold", e.fold}, {"call", e.call}, {"participants", e.participants}});
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Per-recording analysis shared by every (T, N) cell

struct RecordingAnalysis {
    std::string recording_id;
    std::filesystem::path path;
    std::size_t n_samples = 0;
    int sample_rate = kCanonicalRate;
    std::vector<seg::VoicedRegion> regions;
    dsp::LldSet llds;
};

struct ParticipantAnalysis {
    std::string id;
    int label = 0;
    std::vector<RecordingAnalysis> recordings;
    std::string error;  // non-empty when a recording could not be analysed
};

/// Loaded once per dataset: voiced regions and descriptor contours of every
/// recording of the participants passing the scenario filter.
struct DatasetAnalysis {
    std::vector<const ParticipantRecord*> selected;  // manifest order
    std::vector<ParticipantAnalysis> participants;   // parallel to `selected`
    bool has_audio = false;
};

inline std::string describe(const Error& e) { return e.what(); }

inline std::vector<const ParticipantRecord*> select_participants(const DatasetManifest& m, const PipelineConfig& cfg) {
    std::vector<const ParticipantRecord*> out;
    for (const auto& p : m.participants) {
        if (cfg.includes(p.scenario)) out.push_back(&p);
    }
    return out;
}

/// Audio is analysed only for the descriptor-based feature sets; with
/// `contours` false only the voiced regions are computed.
inline DatasetAnalysis analyze_dataset(const DatasetManifest& m, const PipelineConfig& cfg, int jobs = 1,
                                       bool contours = true) {
    DatasetAnalysis a;
    a.selected = select_participants(m, cfg);
    a.has_audio = cfg.feature_set != feat::FeatureSetId::Embedding;
    a.participants.resize(a.selected.size());

    struct Job {
        std::size_t participant, recording;
    };
    std::vector<Job> work;
    for (std::size_t i = 0; i < a.selected.size(); ++i) {
        const auto& rec = *a.selected[i];
        auto& pa = a.participants[i];
        pa.id = rec.id;
        pa.label = rec.label == DiagnosisLabel::Depressed ? 1 : 0;
        const auto ids = recording_ids(rec);
        pa.recordings.resize(rec.recordings.size());
        for (std::size_t r = 0; r < rec.recordings.size(); ++r) {
            pa.recordings[r].recording_id = ids[r];
            pa.recordings[r].path = m.resolve(rec.recordings[r]);
            if (a.has_audio) work.push_back({i, r});
        }
    }
    std::vector<std::string> errors(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t w) {
        auto& ra = a.participants[work[w].participant].recordings[work[w].recording];
        try {
            const auto buf = load_wav_canonical(ra.path);
            ra.n_samples = buf.size();
            ra.sample_rate = buf.sample_rate_hz;
            ra.regions = seg::detect_voiced_regions(buf, cfg.threshold_db, cfg.min_region_ms);
            if (contours) ra.llds = dsp::compute_llds(buf);
        } catch (const Error& e) {
            errors[w] = ra.recording_id + ": " + describe(e);
        }
    });
    for (std::size_t w = 0; w < work.size(); ++w) {
        auto& pa = a.participants[work[w].participant];
        if (!errors[w].empty() && pa.error.empty()) pa.error = errors[w];
    }
    return a;
}

// ---------------------------------------------------------------------------
// Clip features of one (T, N) cell

struct ClipFeatures {
    std::string clip_id;
    std::vector<double> values;
    bool quality_flag = false;
    bool overlap_flag = false;
};

struct ParticipantFeatures {
    std::string id;
    int label = 0;
    std::vector<ClipFeatures> clips;

    bool overlap_flag() const {
        return std::any_of(clips.begin(), clips.end(), [](const auto& c) { return c.overlap_flag; });
    }
};

struct Exclusion {
    std::string id;
    std::string reason;
};

struct CellFeatures {
    std::vector<ParticipantFeatures> participants;  // sorted by id
    std::vector<Exclusion> exclusions;              // sorted by id
};

inline std::string cell_key(double t, int n) { return "T=" + seg::detail::format_seconds(t) + ",N=" + std::to_string(n); }

/// Seed stream of one (T, N) cell; clip sampling and model initialisation
/// derive from it.
inline std::uint64_t cell_seed(std::uint64_t seed, double t, int n) {
    return derive_seed(seed, "cell", seg::detail::format_seconds(t), static_cast<std::uint64_t>(n));
}

inline std::uint64_t sampling_seed(std::uint64_t seed, double t, int n) { return derive_seed(cell_seed(seed, t, n), "clips"); }

inline std::uint64_t model_seed(std::uint64_t seed, double t, int n, std::size_t fold) {
    return derive_seed(cell_seed(seed, t, n), "model", static_cast<std::uint64_t>(fold));
}

namespace detail {

/// Contours of one clip, cut from the recording's contours when the clip
/// starts on a hop boundary and recomputed from the audio otherwise.
inline dsp::LldSet clip_llds(const RecordingAnalysis& ra, const seg::ClipPlacement& p) {
    const std::size_t hop = ms_to_samples(dsp::kHopMs, ra.sample_rate);
    if (p.start_sample % hop == 0) {
        const std::size_t spectral = dsp::frame_count(p.length, ms_to_samples(dsp::kSpectralFrameMs, ra.sample_rate), hop);
        const std::size_t pitch = dsp::frame_count(p.length, ms_to_samples(dsp::kPitchFrameMs, ra.sample_rate), hop);
        return ra.llds.slice(p.start_sample / hop, spectral, pitch);
    }
    const auto buf = load_wav_canonical(ra.path);
    return dsp::compute_llds(seg::extract_clip(p, buf).buffer);
}

inline ParticipantFeatures audio_features(const ParticipantAnalysis& pa, const PipelineConfig& cfg,
                                          const seg::ClipSamplingConfig& sampling) {
    std::vector<seg::RecordingView> views;
    for (const auto& r : pa.recordings) views.emplace_back(r.recording_id, r.n_samples, r.sample_rate, r.regions);
    const auto plan = seg::plan_clips(pa.id, views, sampling);
    ParticipantFeatures out{pa.id, pa.label, {}};
    for (const auto& p : plan) {
        const auto fv = feat::extract(cfg.feature_set, clip_llds(pa.recordings[p.source], p));
        out.clips.push_back({p.clip_id(sampling.clip_duration_s), fv.values, fv.quality_flag, p.overlap_flag});
    }
    return out;
}

/// N distinct precomputed clip embeddings whose id carries duration T, drawn
/// uniformly from the participant's sampling stream.
inline ParticipantFeatures embedding_features(const ParticipantRecord& rec, const DatasetManifest& m,
                                              const seg::ClipSamplingConfig& sampling) {
    const std::string suffix = "+" + seg::detail::format_seconds(sampling.clip_duration_s);
    std::vector<std::pair<std::string, std::string>> available;
    for (const auto& [clip, path] : rec.embeddings) {
        if (clip.size() > suffix.size() && clip.ends_with(suffix)) available.emplace_back(clip, path);
    }
    const auto n = static_cast<std::size_t>(sampling.clip_count);
    if (available.size() < n) {
        fail(ErrorCode::InsufficientAudio, "participant " + rec.id + " has " + std::to_string(available.size()) +
                                               " embeddings of " + suffix.substr(1) + " s clips, " +
                                               std::to_string(n) + " needed");
    }
    Rng rng = make_rng(derive_seed(sampling.seed, rec.id));
    auto picks = seg::detail::draw_distinct(available.size(), n, std::vector<bool>(available.size(), false), rng);
    std::sort(picks.begin(), picks.end());
    ParticipantFeatures out{rec.id, rec.label == DiagnosisLabel::Depressed ? 1 : 0, {}};
    for (std::size_t i : picks) {
        const auto fv = feat::pool_mean(feat::load_embedding_matrix(m.resolve(available[i].second)));
        out.clips.push_back({available[i].first, fv.values, fv.quality_flag, false});
    }
    return out;
}

}  // namespace detail

/// Samples and featurizes N clips per participant for `sampling` (T, N, seed).
/// Participants whose clips cannot be produced are excluded with a reason.
inline CellFeatures build_cell(const DatasetAnalysis& a, const DatasetManifest& m, const PipelineConfig& cfg,
                               const seg::ClipSamplingConfig& sampling, int jobs = 1) {
    const std::size_t n = a.selected.size();
    std::vector<std::optional<ParticipantFeatures>> feats(n);
    std::vector<std::string> reasons(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& pa = a.participants[i];
        if (!pa.error.empty()) {
            reasons[i] = pa.error;
            return;
        }
        try {
            feats[i] = a.has_audio ? detail::audio_features(pa, cfg, sampling)
                                   : detail::embedding_features(*a.selected[i], m, sampling);
        } catch (const Error& e) {
            reasons[i] = describe(e);
        }
    });
    CellFeatures cell;
    for (std::size_t i = 0; i < n; ++i) {
        if (feats[i]) {
            cell.participants.push_back(std::move(*feats[i]));
        } else {
            cell.exclusions.push_back({a.participants[i].id, reasons[i]});
        }
    }
    std::sort(cell.participants.begin(), cell.participants.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    std::sort(cell.exclusions.begin(), cell.exclusions.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    return cell;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct ParticipantOutcome {
    std::string id;
    int label = 0;
    int predicted = 0;
    std::size_t positive_votes = 0;
    std::size_t clips = 0;
    std::size_t fold = 0;
    bool overlap_flag = false;
};

struct FoldReport {
    std::size_t fold = 0;
    std::vector<std::string> test_participants;  // evaluated ids
    std::size_t train_participants = 0;
    std::size_t train_clips = 0;
    ConfusionCounts counts;
    std::optional<MetricsReport> metrics;  // absent when every test participant was excluded
};

struct CvReport {
    PipelineConfig config;  // T and N of this run in config.sampling
    MetricsReport metrics;  // pooled over folds
    std::vector<FoldReport> per_fold;
    std::vector<ParticipantOutcome> outcomes;  // sorted by id
    std::vector<Exclusion> exclusions;
    std::size_t fit_calls = 0;
    std::size_t leaks = 0;
};

namespace detail {

struct FittedFold {
    model::Standardizer standardizer;
    model::AnyModel model;
};

/// The only path to a standardizer or model fit. Every row comes from
/// `train`, and the participants behind the rows are written to the audit log.
inline FittedFold fit_training_fold(std::span<const ParticipantFeatures* const> train, const PipelineConfig& cfg,
                                    std::uint64_t seed, AuditLog& audit, const std::string& cell, std::size_t fold) {
    model::Matrix x;
    std::vector<int> y;
    std::vector<std::string> ids;
    bool classes[2] = {false, false};
    for (const auto* p : train) {
        for (const auto& c : p->clips) {
            x.push_back(c.values);
            y.push_back(p->label);
        }
        if (!p->clips.empty()) {
            ids.push_back(p->id);
            classes[p->label] = true;
        }
    }
    if (!classes[0] || !classes[1]) {
        fail(ErrorCode::FoldCollapse, cell + " fold " + std::to_string(fold) + ": training participants are single-class");
    }
    std::sort(ids.begin(), ids.end());
    audit.record({cell, fold, "standardizer", ids});
    FittedFold out;
    out.standardizer = model::fit_standardizer(x);
    const auto z = model::standardize(out.standardizer, x);
    auto tcfg = cfg.train;
    tcfg.seed = seed;
    audit.record({cell, fold, "model", ids});
    out.model = model::train(cfg.model, z, y, tcfg);
    return out;
}

}  // namespace detail

struct RunOptions {
    int jobs = 1;
    AuditLog* audit = nullptr;               // a private log is used when null
    const DatasetAnalysis* analysis = nullptr;  // analysed on demand when null
};

/// Fold membership over every participant passing the scenario filter.
inline FoldAssignment folds_for(const DatasetAnalysis& a, const PipelineConfig& cfg) {
    std::vector<FoldMember> members;
    std::vector<std::string> ids;
    for (const auto& p : a.participants) {
        members.push_back({p.id, p.label});
        ids.push_back(p.id);
    }
    auto folds = make_participant_folds(members, cfg.folds, cfg.seed);
    verify_partition(folds, ids);
    return folds;
}

/// Runs one fold-by-fold evaluation of precomputed cell features.
inline CvReport cross_validate_cell(const CellFeatures& cell, const FoldAssignment& folds, const PipelineConfig& cfg,
                                    const RunOptions& opt, AuditLog& audit) {
    const double t = cfg.sampling.clip_duration_s;
    const int n = cfg.sampling.clip_count;
    const std::string key = cell_key(t, n);
    std::map<std::string, std::size_t> fold_of;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (const auto& id : folds[f]) fold_of[id] = f;
    }

    std::vector<FoldReport> reports(folds.size());
    std::vector<std::vector<ParticipantOutcome>> outcomes(folds.size());
    parallel_for(folds.size(), opt.jobs, [&](std::size_t f) {
        std::vector<const ParticipantFeatures*> train, test;
        for (const auto& p : cell.participants) {
            const auto it = fold_of.find(p.id);
            if (it == fold_of.end()) fail(ErrorCode::LeakageDetected, "participant " + p.id + " has no fold");
            (it->second == f ? test : train).push_back(&p);
        }
        const auto fitted = detail::fit_training_fold(train, cfg, model_seed(cfg.seed, t, n, f), audit, key, f);
        FoldReport& r = reports[f];
        r.fold = f;
        r.train_participants = train.size();
        for (const auto* p : train) r.train_clips += p->clips.size();
        for (const auto* p : test) {
            std::vector<int> votes;
            for (const auto& c : p->clips) {
                votes.push_back(model::predict(fitted.model, model::standardize(fitted.standardizer, c.values)).label);
            }
            ParticipantOutcome o{p->id, p->label, majority_vote(votes), 0, votes.size(), f, p->overlap_flag()};
            o.positive_votes = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), 1));
            r.counts.add(o.label, o.predicted);
            r.test_participants.push_back(p->id);
            outcomes[f].push_back(std::move(o));
        }
        if (r.counts.total() > 0) r.metrics = compute_metrics(r.counts);
    });

    CvReport report;
    report.config = cfg;
    ConfusionCounts pooled;
    for (const auto& r : reports) pooled += r.counts;
    report.metrics = compute_metrics(pooled);
    report.per_fold = std::move(reports);
    for (auto& fo : outcomes) {
        for (auto& o : fo) report.outcomes.push_back(std::move(o));
    }
    std::sort(report.outcomes.begin(), report.outcomes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    report.exclusions = cell.exclusions;
    for (const auto& e : audit.entries()) report.fit_calls += e.cell == key;
    report.leaks = count_leaks(audit, key, folds);
    if (report.leaks) fail(ErrorCode::LeakageDetected, key + ": a fit call saw held-out participants");
    return report;
}

inline CvReport run_cross_validation(const DatasetManifest& m, const PipelineConfig& cfg, const RunOptions& opt = {}) {
    cfg.validate();
    AuditLog private_log;
    AuditLog& audit = opt.audit ? *opt.audit : private_log;
    std::optional<DatasetAnalysis> own;
    if (!opt.analysis) own = analyze_dataset(m, cfg, opt.jobs);
    const DatasetAnalysis& a = opt.analysis ? *opt.analysis : *own;
    if (a.selected.empty()) fail(ErrorCode::TooFewParticipants, "no participant matches the scenario filter");
    const auto folds = folds_for(a, cfg);
    auto sampling = cfg.sampling;
    sampling.seed = sampling_seed(cfg.seed, sampling.clip_duration_s, sampling.clip_count);
    const auto cell = build_cell(a, m, cfg, sampling, opt.jobs);
    return cross_validate_cell(cell, folds, cfg, opt, audit);
}

// ---------------------------------------------------------------------------
// Sweep

/// A cell with N >= min_n is admissible only when T <= max_t.
struct SweepConstraint {
    int min_n = 0;
    double max_t = 0.0;
};

struct SweepGrid {
    std::vector<double> ts;
    std::vector<int> ns;
    std::vector<SweepConstraint> constraints;
};

/// T in {5, 10, 15, 20} x N in {1, 3, 5, 7, 11}; N = 7 only up to T = 10 and
/// N = 11 only at T = 5.
inline SweepGrid paper_grid() { return {{5.0, 10.0, 15.0, 20.0}, {1, 3, 5, 7, 11}, {{7, 10.0}, {11, 5.0}}}; }

inline std::optional<std::string> inadmissible(const SweepGrid& g, double t, int n) {
    for (const auto& c : g.constraints) {
        if (n >= c.min_n && t > c.max_t) {
            return "N >= " + std::to_string(c.min_n) + " requires T <= " + seg::detail::format_seconds(c.max_t);
        }
    }
    return std::nullopt;
}

struct SweepCell {
    double t = 0.0;
    int n = 0;
    std::optional<CvReport> report;
    std::string skip_reason;
};

struct SweepResult {
    PipelineConfig config;
    SweepGrid grid;
    std::vector<SweepCell> cells;  // T-major, each axis in request order
};

/// Every cell either gets a report or a skip reason; a cell whose evaluation
/// fails is recorded with the error instead of aborting the sweep.
inline SweepResult run_sweep(const DatasetManifest& m, const PipelineConfig& cfg, const SweepGrid& grid,
                             const RunOptions& opt = {}) {
    cfg.validate();
    AuditLog private_log;
    AuditLog& audit = opt.audit ? *opt.audit : private_log;
    std::optional<DatasetAnalysis> own;
    if (!opt.analysis) own = analyze_dataset(m, cfg, opt.jobs);
    const DatasetAnalysis& a = opt.analysis ? *opt.analysis : *own;
    if (a.selected.empty()) fail(ErrorCode::TooFewParticipants, "no participant matches the scenario filter");
    const auto folds = folds_for(a, cfg);

    SweepResult out{cfg, grid, {}};
    for (double t : grid.ts) {
        for (int n : grid.ns) {
            SweepCell cell{t, n, std::nullopt, {}};
            if (const auto why = inadmissible(grid, t, n)) {
                cell.skip_reason = *why;
            } else {
                auto cell_cfg = cfg;
                cell_cfg.sampling.clip_duration_s = t;
                cell_cfg.sampling.clip_count = n;
                try {
                    cell_cfg.validate();
                    auto sampling = cell_cfg.sampling;
                    sampling.seed = sampling_seed(cfg.seed, t, n);
                    const auto features = build_cell(a, m, cell_cfg, sampling, opt.jobs);
                    cell.report = cross_validate_cell(features, folds, cell_cfg, opt, audit);
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::LeakageDetected) throw;
                    cell.skip_reason = std::string("failed: ") + e.what();
                }
            }
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report JSON

inline ojson reproducibility_json(const PipelineConfig& cfg) {
    ojson j;
    j["tool_version"] = VOICESCREEN_VERSION;
    j["pipeline"] = to_json(cfg);
    return j;
}

inline ojson exclusions_json(const std::vector<Exclusion>& ex) {
    auto arr = ojson::array();
    for (const auto& e : ex) arr.push_back(ojson{{"id", e.id}, {"reason", e.reason}});
    return arr;
}

inline ojson cv_report_json(const CvReport& r) {
    const auto& c = r.config;
    const double t = c.sampling.clip_duration_s;
    const int n = c.sampling.clip_count;
    ojson j;
    j["version"] = kReportVersion;
    j["config"] = ojson{{"scenario", scenarios_json(c.scenarios)},
                        {"T", t},
                        {"N", n},
                        {"feature_set", feat::to_string(c.feature_set)},
                        {"model", model::to_string(c.model)}};
    j["metrics"] = metrics_json(r.metrics);
    j["counts"] = counts_json(r.metrics.counts);
    auto folds = ojson::array();
    for (const auto& f : r.per_fold) {
        folds.push_back(ojson{{"fold", f.fold},
                              {"test_participants", f.test_participants},
                              {"train_participants", f.train_participants},
                              {"train_clips", f.train_clips},
                              {"metrics", metrics_json(f.metrics)},
                              {"counts", counts_json(f.counts)},
                              {"model_seed", model_seed(c.seed, t, n, f.fold)}});
    }
    j["per_fold"] = std::move(folds);
    auto parts = ojson::array();
    for (const auto& o : r.outcomes) {
        parts.push_back(ojson{{"id", o.id},
                              {"label", o.label ? "depressed" : "healthy"},
                              {"predicted", o.predicted ? "depressed" : "healthy"},
                              {"positive_votes", o.positive_votes},
                              {"clips", o.clips},
                              {"fold", o.fold},
                              {"overlap_flag", o.overlap_flag}});
    }
    j["participants"] = std::move(parts);
    j["exclusions"] = exclusions_json(r.exclusions);
    j["leakage_check"] = ojson{{"fit_calls", r.fit_calls}, {"test_ids_in_fit_calls", r.leaks}};
    j["seed"] = c.seed;
    j["sampling_seed"] = sampling_seed(c.seed, t, n);
    j["reproducibility"] = reproducibility_json(c);
    return j;
}

inline ojson sweep_json(const SweepResult& s) {
    ojson j;
    j["version"] = kReportVersion;
    j["kind"] = "sweep";
    auto cells = ojson::array();
    for (const auto& c : s.cells) {
        ojson cell{{"T", c.t}, {"N", c.n}};
        if (c.report) {
            cell["status"] = "evaluated";
            cell["report"] = cv_report_json(*c.report);
        } else {
            cell["status"] = "skipped";
            cell["reason"] = c.skip_reason;
        }
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    j["seed"] = s.config.seed;
    auto repro = reproducibility_json(s.config);
    auto cons = ojson::array();
    for (const auto& c : s.grid.constraints) cons.push_back(ojson{{"min_N", c.min_n}, {"max_T", c.max_t}});
    repro["grid"] = ojson{{"T", s.grid.ts}, {"N", s.grid.ns}, {"constraints", std::move(cons)}};
    j["reproducibility"] = std::move(repro);
    return j;
}

// ---------------------------------------------------------------------------
// Tables

struct TableRow {
    std::string scenario, feature_set, model;
    double t = 0.0;
    int n = 0;
    std::optional<double> accuracy, sensitivity, specificity, precision;
    std::size_t participants = 0, excluded = 0;
    std::string note;
};

namespace detail {

inline std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(ErrorCode::SchemaViolation, std::string("metric ") + key + " is not a number");
    return it->get<double>();
}

inline TableRow row_from_report(const nlohmann::json& r) {
    try {
        TableRow row;
        const auto& c = r.at("config");
        std::string scen;
        for (const auto& s : c.at("scenario")) scen += (scen.empty() ? "" : "+") + s.get<std::string>();
        row.scenario = scen;
        row.t = c.at("T").get<double>();
        row.n = c.at("N").get<int>();
        row.feature_set = c.at("feature_set").get<std::string>();
        row.model = c.at("model").get<std::string>();
        const auto& m = r.at("metrics");
        row.accuracy = opt_number(m, "accuracy");
        row.sensitivity = opt_number(m, "sensitivity");
        row.specificity = opt_number(m, "specificity");
        row.precision = opt_number(m, "precision");
        row.participants = r.at("participants").size();
        row.excluded = r.at("exclusions").size();
        return row;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaViolation, std::string("report: ") + e.what());
    }
}

inline std::string percent(const std::optional<double>& v, const std::string& missing) {
    if (!v) return missing;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
    return buf;
}

}  // namespace detail

/// Rows of a single cross-validation report or of every cell of a sweep.
inline std::vector<TableRow> table_rows(const nlohmann::json& report) {
    std::vector<TableRow> rows;
    if (report.value("kind", "") == "sweep") {
        if (!report.contains("cells") || !report["cells"].is_array()) {
            fail(ErrorCode::SchemaViolation, "sweep report without cells");
        }
        for (const auto& cell : report["cells"]) {
            if (cell.value("status", "") == "evaluated") {
                rows.push_back(detail::row_from_report(cell.at("report")));
            } else {
                TableRow row;
                row.t = cell.value("T", 0.0);
                row.n = cell.value("N", 0);
                row.note = cell.value("reason", "skipped");
                rows.push_back(std::move(row));
            }
        }
    } else {
        rows.push_back(detail::row_from_report(report));
    }
    return rows;
}

inline const std::vector<std::string>& table_header() {
    static const std::vector<std::string> h{"Scenario",    "T (s)",        "N",
                                            "Features",    "Model",        "Accuracy (%)",
                                            "Sensitivity(Recall) (%)",     "Specificity (%)",
                                            "Precision (%)", "Participants", "Excluded",
                                            "Note"};
    return h;
}

/// Missing metrics of evaluated rows render as `missing`.
inline std::vector<std::string> row_cells(const TableRow& r, const std::string& missing = "") {
    const std::string m = r.note.empty() ? missing : "";
    return {r.scenario,
            seg::detail::format_seconds(r.t),
            std::to_string(r.n),
            r.feature_set,
            r.model,
            detail::percent(r.accuracy, m),
            detail::percent(r.sensitivity, m),
            detail::percent(r.specificity, m),
            detail::percent(r.precision, m),
            r.note.empty() ? std::to_string(r.participants) : "",
            r.note.empty() ? std::to_string(r.excluded) : "",
            r.note};
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string render_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
        out << "\n";
    };
    line(table_header());
    for (const auto& r : rows) line(row_cells(r));
    return out.str();
}

inline std::string render_markdown(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        out << "|";
        for (const auto& c : cells) {
            std::string v = c;
            std::replace(v.begin(), v.end(), '|', '/');
            out << " " << v << " |";
        }
        out << "\n";
    };
    line(table_header());
    out << "|";
    for (std::size_t i = 0; i < table_header().size(); ++i) out << " --- |";
    out << "\n";
    for (const auto& r : rows) line(row_cells(r, "n/a"));
    return out.str();
}

}  // namespace voicescreen::eval
