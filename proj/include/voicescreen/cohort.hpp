#pragma once

// Synthetic voice cohorts with a controllable depressed-like effect size.
// Source-filter synthesis: glottal pulse train with per-cycle jitter and
// shimmer, three two-pole formant resonators, syllabic amplitude modulation,
// pauses, and a white noise floor.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/manifest.hpp"
#include "voicescreen/parallel.hpp"
#include "voicescreen/rng.hpp"

namespace voicescreen::cohort {

struct Formant {
    double centre_hz = 500.0;
    double bandwidth_hz = 80.0;
};

struct VoiceParams {
    double f0_mean_hz = 190.0;
    double f0_sd_hz = 12.0;           // slow wander
    double jitter_frac = 0.008;       // target local jitter
    double shimmer_frac = 0.025;      // target local shimmer
    double pause_rate_per_s = 0.3;
    double mean_pause_s = 0.4;
    double syllable_rate_per_s = 4.0;
    std::array<Formant, 3> formants{{{500.0, 80.0}, {1500.0, 120.0}, {2500.0, 160.0}}};
    double noise_floor_db = -60.0;    // dBFS RMS of the additive noise

    void validate() const {
        if (f0_mean_hz < 70.0 || f0_mean_hz > 400.0) fail(ErrorCode::InvalidArgument, "f0_mean_hz outside [70, 400]");
        if (jitter_frac < 0.0 || jitter_frac > 0.1) fail(ErrorCode::InvalidArgument, "jitter_frac outside [0, 0.1]");
        if (shimmer_frac < 0.0 || shimmer_frac > 0.1) fail(ErrorCode::InvalidArgument, "shimmer_frac outside [0, 0.1]");
        if (f0_sd_hz < 0.0 || pause_rate_per_s < 0.0 || mean_pause_s < 0.0 || syllable_rate_per_s < 0.0) {
            fail(ErrorCode::InvalidArgument, "voice rates and spreads must be non-negative");
        }
        for (std::size_t i = 1; i < formants.size(); ++i) {
            if (!(formants[i].centre_hz > formants[i - 1].centre_hz)) {
                fail(ErrorCode::InvalidArgument, "formant centres must ascend");
            }
        }
    }
};

enum class Label { Healthy, Depressed };

struct CohortConfig {
    int n_depressed = 20;
    int n_healthy = 20;
    double effect_size = 1.0;
    double recording_duration_s = 120.0;
    int sample_rate = kCanonicalRate;
    std::uint64_t seed = 7;
};

// Healthy baseline and the full (d = 1) depressed-like shifts. Designed values.
inline constexpr double kBaselineF0MeanHz = 190.0;
inline constexpr double kBaselineF0SpreadHz = 20.0;
inline constexpr double kShiftF0Mean = 0.12;      // f0_mean * (1 - 0.12 d)
inline constexpr double kShiftF0Sd = 0.4;         // f0_sd * (1 - 0.4 d)
inline constexpr double kShiftJitter = 0.015;     // + 1.5 d percentage points
inline constexpr double kShiftShimmer = 0.020;    // + 2.0 d percentage points
inline constexpr double kShiftPauseRate = 0.8;    // pause_rate * (1 + 0.8 d)
inline constexpr double kShiftSyllableRate = 0.2; // syllable_rate * (1 - 0.2 d)

/// Per-participant parameters. The draws consumed from `rng` do not depend on
/// the label, and at d = 0 the label has no effect on the result.
inline VoiceParams class_params(Label label, double d, Rng& rng) {
    if (d < 0.0 || d > 1.0) fail(ErrorCode::InvalidArgument, "effect size must lie in [0, 1]");
    VoiceParams p;
    p.f0_mean_hz = normal(rng, kBaselineF0MeanHz, kBaselineF0SpreadHz);
    const double s = label == Label::Depressed ? d : 0.0;
    p.f0_mean_hz *= 1.0 - kShiftF0Mean * s;
    p.f0_mean_hz = std::clamp(p.f0_mean_hz, 70.0, 400.0);
    p.f0_sd_hz *= 1.0 - kShiftF0Sd * s;
    p.jitter_frac += kShiftJitter * s;
    p.shimmer_frac += kShiftShimmer * s;
    p.pause_rate_per_s *= 1.0 + kShiftPauseRate * s;
    p.syllable_rate_per_s *= 1.0 - kShiftSyllableRate * s;
    return p;
}

// ---------------------------------------------------------------------------
// Synthesis primitives

/// Rosenberg glottal pulse: cosine opening over 40% of the nominal period,
/// quarter-cosine closure over 16%. Positions are in samples so that a pulse
/// train with an integer period renders identical cycles.
inline constexpr double kOpenFraction = 0.40;
inline constexpr double kCloseFraction = 0.16;

struct Pulse {
    double position = 0.0;        // onset, samples
    double nominal_period = 0.0;  // samples; sets the pulse shape
    double amplitude = 1.0;
};

inline double rosenberg(double t, double open, double close) {
    if (t < 0.0) return 0.0;
    if (t <= open) return 0.5 * (1.0 - std::cos(std::numbers::pi * t / open));
    if (t <= open + close) return std::cos(0.5 * std::numbers::pi * (t - open) / close);
    return 0.0;
}

/// Renders pulses into a zeroed buffer of `n` samples.
inline std::vector<double> render_pulses(const std::vector<Pulse>& pulses, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (const auto& p : pulses) {
        const double open = kOpenFraction * p.nominal_period;
        const double close = kCloseFraction * p.nominal_period;
        const auto first = static_cast<std::ptrdiff_t>(std::ceil(p.position));
        const auto last = static_cast<std::ptrdiff_t>(std::floor(p.position + open + close));
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(first, 0); k <= last; ++k) {
            if (k >= static_cast<std::ptrdiff_t>(n)) break;
            out[static_cast<std::size_t>(k)] += p.amplitude * rosenberg(static_cast<double>(k) - p.position, open, close);
        }
    }
    return out;
}

/// Pulse train with independent Gaussian relative perturbations of period
/// (sd `period_sd`) and amplitude (sd `amplitude_sd`).
inline std::vector<Pulse> perturbed_pulse_train(double f0_hz, double duration_s, double period_sd,
                                                double amplitude_sd, Rng& rng, int rate = kCanonicalRate) {
    std::vector<Pulse> pulses;
    const double period = rate / f0_hz;
    const double end = duration_s * rate - period;
    double pos = 0.0;
    while (pos < end) {
        const double a = std::max(0.05, 1.0 + amplitude_sd * standard_normal(rng));
        pulses.push_back({pos, period, a});
        pos += period * std::max(0.5, 1.0 + period_sd * standard_normal(rng));
    }
    return pulses;
}

/// Two-pole resonator with unit DC gain.
inline void resonate(std::vector<double>& x, const Formant& f, int rate) {
    const double r = std::exp(-std::numbers::pi * f.bandwidth_hz / rate);
    const double a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * f.centre_hz / rate);
    const double a2 = r * r;
    const double gain = 1.0 - a1 + a2;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
        const double y = gain * v + a1 * y1 - a2 * y2;
        y2 = y1;
        y1 = y;
        v = y;
    }
}

inline void peak_normalize(std::vector<double>& x, double peak) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    if (m <= 0.0) return;
    const double g = peak / m;
    for (double& v : x) v *= g;
}

// Relative Gaussian sd whose expected mean absolute consecutive difference
// equals the target local perturbation: E|z1 - z2| = 2 sd / sqrt(pi).
inline double perturbation_sd(double target_local) { return target_local * std::sqrt(std::numbers::pi) / 2.0; }

inline constexpr double kSyllableDepth = 0.15;
inline constexpr double kPeakLevel = 0.9;

inline AudioBuffer synth_voice(const VoiceParams& params, double duration_s, Rng& rng, int rate = kCanonicalRate) {
    params.validate();
    if (duration_s < 2.0) fail(ErrorCode::InvalidArgument, "synthesis needs at least 2 s");
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));

    // Slow F0 wander: three low-frequency sinusoids scaled to the requested sd.
    std::array<double, 3> wander_hz{}, wander_phase{};
    for (std::size_t k = 0; k < 3; ++k) {
        wander_hz[k] = uniform(rng, 0.1, 0.8);
        wander_phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
    const double wander_amp = params.f0_sd_hz * std::sqrt(2.0 / 3.0);
    auto f0_at = [&](double t) {
        double w = 0.0;
        for (std::size_t k = 0; k < 3; ++k) w += std::sin(2.0 * std::numbers::pi * wander_hz[k] * t + wander_phase[k]);
        return std::clamp(params.f0_mean_hz + wander_amp * w, 50.0, 500.0);
    };

    // Pauses: Poisson onsets, exponential lengths clamped to [0.15, 2] s.
    std::vector<std::pair<double, double>> pauses;
    if (params.pause_rate_per_s > 0.0) {
        double t = exponential(rng, 1.0 / params.pause_rate_per_s);
        while (t < duration_s) {
            const double len = std::clamp(exponential(rng, params.mean_pause_s), 0.15, 2.0);
            pauses.emplace_back(t, t + len);
            t += len + exponential(rng, 1.0 / params.pause_rate_per_s);
        }
    }
    auto in_pause = [&](double t) {
        for (const auto& [a, b] : pauses) {
            if (t >= a && t < b) return true;
            if (a > t) break;
        }
        return false;
    };

    const double syllable_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    auto envelope = [&](double t) {
        const double c = std::cos(2.0 * std::numbers::pi * params.syllable_rate_per_s * t + syllable_phase);
        return 1.0 - kSyllableDepth * (0.5 - 0.5 * c);
    };

    const double jitter_sd = perturbation_sd(params.jitter_frac);
    const double shimmer_sd = perturbation_sd(params.shimmer_frac);
    std::vector<Pulse> pulses;
    double t = 0.0;
    while (t < duration_s) {
        const double period = 1.0 / f0_at(t);
        const double z_period = standard_normal(rng);
        const double z_amp = standard_normal(rng);
        if (!in_pause(t)) {
            const double amp = std::max(0.05, 1.0 + shimmer_sd * z_amp) * envelope(t);
            pulses.push_back({t * rate, period * rate, amp});
        }
        t += period * std::max(0.5, 1.0 + jitter_sd * z_period);
    }

    auto x = render_pulses(pulses, n);
    for (const auto& f : params.formants) resonate(x, f, rate);
    peak_normalize(x, kPeakLevel);

    const double noise_rms = std::pow(10.0, params.noise_floor_db / 20.0);
    for (double& v : x) v += noise_rms * standard_normal(rng);
    peak_normalize(x, kPeakLevel);

    return AudioBuffer{std::move(x), rate};
}

// ---------------------------------------------------------------------------
// Cohort generation

inline std::string participant_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%03d", index + 1);
    return buf;
}

/// Writes one WAV per participant plus manifest.json into out_dir.
/// Participants are synthesized on up to `jobs` threads.
inline DatasetManifest generate_cohort(const CohortConfig& cfg, const std::filesystem::path& out_dir, int jobs = 1) {
    if (cfg.n_depressed < 1 || cfg.n_healthy < 1) fail(ErrorCode::InvalidArgument, "cohort needs both classes");
    if (cfg.effect_size < 0.0 || cfg.effect_size > 1.0) fail(ErrorCode::InvalidArgument, "effect size outside [0, 1]");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest manifest;
    manifest.base_dir = out_dir;
    const int total = cfg.n_depressed + cfg.n_healthy;
    for (int i = 0; i < total; ++i) {
        ParticipantRecord rec;
        rec.id = participant_id(i);
        rec.label = i < cfg.n_depressed ? DiagnosisLabel::Depressed : DiagnosisLabel::Healthy;
        rec.scenario = Scenario::Synthetic;
        rec.recordings.push_back(rec.id + ".wav");
        manifest.participants.push_back(std::move(rec));
    }
    parallel_for(manifest.participants.size(), jobs, [&](std::size_t i) {
        const auto& rec = manifest.participants[i];
        // The generator stream is keyed by participant id only.
        Rng rng = make_rng(derive_seed(cfg.seed, "participant", rec.id));
        const auto label = rec.label == DiagnosisLabel::Depressed ? Label::Depressed : Label::Healthy;
        const auto params = class_params(label, cfg.effect_size, rng);
        write_wav(out_dir / rec.recordings.front(), synth_voice(params, cfg.recording_duration_s, rng, cfg.sample_rate));
    });
    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace voicescreen::cohort
