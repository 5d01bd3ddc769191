#pragma once

// Per-frame low-level descriptors: pitch and voicing, cycle perturbation
// (jitter/shimmer), harmonics-to-noise ratio, MFCCs, spectral balance,
// zero-crossing rate and energy. Every per-frame value depends only on the
// samples of that frame, so contours of a sub-range of a recording equal the
// matching slice of the recording's contours.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/fft.hpp"

namespace voicescreen::dsp {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

inline constexpr double kDefaultFminHz = 55.0;
inline constexpr double kDefaultFmaxHz = 500.0;
inline constexpr double kVoicingThreshold = 0.45;
inline constexpr double kOctaveGuardRatio = 0.85;
inline constexpr double kEnergyFloorDb = -120.0;
inline constexpr double kHnrMinDb = -20.0;
inline constexpr double kHnrMaxDb = 40.0;

// Frame policy.
inline constexpr double kSpectralFrameMs = 25.0;
inline constexpr double kPitchFrameMs = 40.0;
inline constexpr double kHopMs = 10.0;

// ---------------------------------------------------------------------------
// Energy and zero crossings

inline double rms(std::span<const double> frame) {
    if (frame.empty()) return 0.0;
    double acc = 0.0;
    for (double x : frame) acc += x * x;
    return std::sqrt(acc / static_cast<double>(frame.size()));
}

inline double energy_rms_db(std::span<const double> frame) {
    const double r = rms(frame);
    if (r <= 0.0) return kEnergyFloorDb;
    return std::max(kEnergyFloorDb, 20.0 * std::log10(r));
}

/// Sign changes per second; zero counts as positive.
inline double zcr(std::span<const double> frame, int sample_rate) {
    if (frame.size() < 2) return 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = 1; i < frame.size(); ++i) {
        if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++crossings;
    }
    return static_cast<double>(crossings) * sample_rate / static_cast<double>(frame.size());
}

// ---------------------------------------------------------------------------
// Normalized autocorrelation

/// r(lag) = sum x[n] x[n+lag] / sqrt(sum x[n]^2 * sum x[n+lag]^2) over the
/// overlapping part of a mean-removed frame, for lags 0..max_lag.
class NormalizedAutocorr {
public:
    NormalizedAutocorr(std::span<const double> frame, std::size_t max_lag) {
        const std::size_t n = frame.size();
        max_lag = std::min(max_lag, n == 0 ? 0 : n - 1);
        const double mean = n ? std::accumulate(frame.begin(), frame.end(), 0.0) / static_cast<double>(n) : 0.0;
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = frame[i] - mean;

        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];

        const std::size_t fft_size = next_pow2(n + max_lag + 1);
        std::vector<std::complex<double>> buf(fft_size);
        for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
        fft_inplace(buf);
        for (auto& c : buf) c = std::complex<double>(std::norm(c), 0.0);
        fft_inplace(buf, true);

        r_.assign(max_lag + 1, 0.0);
        for (std::size_t lag = 0; lag <= max_lag; ++lag) {
            const double head = prefix[n - lag];              // x[0 .. n-lag)
            const double tail = prefix[n] - prefix[lag];      // x[lag .. n)
            const double denom = std::sqrt(head * tail);
            r_[lag] = denom > 1e-300 ? buf[lag].real() / denom : 0.0;
        }
    }

    std::size_t max_lag() const noexcept { return r_.empty() ? 0 : r_.size() - 1; }
    double operator[](std::size_t lag) const noexcept { return r_[lag]; }

    /// Parabolic refinement around integer lag; returns (refined lag, refined value).
    std::pair<double, double> refine(std::size_t lag) const noexcept {
        if (lag == 0 || lag + 1 >= r_.size()) return {static_cast<double>(lag), r_[lag]};
        const double a = r_[lag - 1], b = r_[lag], c = r_[lag + 1];
        const double denom = a - 2.0 * b + c;
        if (!(denom < 0.0)) return {static_cast<double>(lag), b};
        const double delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
        return {static_cast<double>(lag) + delta, b - 0.25 * (a - c) * delta};
    }

private:
    std::vector<double> r_;
};

// ---------------------------------------------------------------------------
// Pitch

struct PitchEstimate {
    bool is_voiced = false;
    double f0_hz = 0.0;       // 0 when unvoiced
    double strength = 0.0;    // refined autocorrelation peak (voicing probability proxy)
};

inline std::size_t min_pitch_frame(int sample_rate, double fmin) {
    return static_cast<std::size_t>(std::ceil(sample_rate / fmin));
}

namespace detail {

inline PitchEstimate pick_pitch(const NormalizedAutocorr& r, int sample_rate, double fmin, double fmax) {
    const auto lo = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sample_rate / fmax)));
    const auto hi = std::min(static_cast<std::size_t>(std::ceil(sample_rate / fmin)), r.max_lag() - 1);
    std::vector<std::size_t> peaks;
    double global = -1.0;
    for (std::size_t lag = lo; lag <= hi; ++lag) {
        if (r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) {
            peaks.push_back(lag);
            global = std::max(global, r[lag]);
        }
    }
    PitchEstimate est;
    if (peaks.empty() || global <= 0.0) return est;
    // Octave guard: the smallest lag whose peak is close to the best one.
    std::size_t chosen = peaks.front();
    for (std::size_t lag : peaks) {
        if (r[lag] >= kOctaveGuardRatio * global) {
            chosen = lag;
            break;
        }
    }
    const auto [lag, value] = r.refine(chosen);
    est.strength = std::clamp(value, 0.0, 1.0);
    const double f0 = sample_rate / lag;
    if (r[chosen] >= kVoicingThreshold && f0 >= fmin * 0.98 && f0 <= fmax * 1.02) {
        est.is_voiced = true;
        est.f0_hz = f0;
    }
    return est;
}

inline double hnr_from_r(double r) {
    if (r >= 1.0) return kHnrMaxDb;
    if (r <= 0.0) return kHnrMinDb;
    return std::clamp(10.0 * std::log10(r / (1.0 - r)), kHnrMinDb, kHnrMaxDb);
}

inline double hnr_at(const NormalizedAutocorr& r, double lag_exact) {
    const auto centre = static_cast<std::size_t>(std::lround(lag_exact));
    if (centre + 1 > r.max_lag() || centre < 1) return hnr_from_r(centre <= r.max_lag() ? r[centre] : 0.0);
    std::size_t best = centre;
    if (r[centre - 1] > r[best]) best = centre - 1;
    if (r[centre + 1] > r[best]) best = centre + 1;
    if (best < 1 || best + 1 > r.max_lag()) return hnr_from_r(r[best]);
    return hnr_from_r(r.refine(best).second);
}

}  // namespace detail

inline PitchEstimate f0_autocorr(std::span<const double> frame, int sample_rate,
                                 double fmin = kDefaultFminHz, double fmax = kDefaultFmaxHz) {
    if (!(fmin > 0.0) || fmax <= fmin) fail(ErrorCode::InvalidArgument, "pitch band must satisfy 0 < fmin < fmax");
    const std::size_t needed = min_pitch_frame(sample_rate, fmin);
    if (frame.size() < needed + 2) {
        fail(ErrorCode::FrameTooShort, "pitch frame of " + std::to_string(frame.size()) +
                                           " samples cannot hold one period at " + std::to_string(fmin) + " Hz");
    }
    NormalizedAutocorr r(frame, needed + 1);
    return detail::pick_pitch(r, sample_rate, fmin, fmax);
}

/// 10*log10(r / (1 - r)) with r the normalized autocorrelation at the F0 lag,
/// clamped to [-20, 40] dB.
inline double hnr_db(std::span<const double> frame, double f0_hz, int sample_rate) {
    if (!(f0_hz > 0.0) || !std::isfinite(f0_hz)) fail(ErrorCode::UnvoicedFrame, "HNR needs a valid F0");
    const double lag = sample_rate / f0_hz;
    if (lag + 2.0 >= static_cast<double>(frame.size())) {
        fail(ErrorCode::FrameTooShort, "frame shorter than the F0 period");
    }
    NormalizedAutocorr r(frame, static_cast<std::size_t>(std::ceil(lag)) + 2);
    return detail::hnr_at(r, lag);
}

// ---------------------------------------------------------------------------
// Cycle perturbation

/// Mean absolute difference of consecutive periods over the mean period.
inline double jitter_local(std::span<const double> periods) {
    if (periods.size() < 2) fail(ErrorCode::TooFewPeriods, "jitter needs at least two periods");
    double diff = 0.0, sum = periods[0];
    for (std::size_t i = 1; i < periods.size(); ++i) {
        diff += std::abs(periods[i] - periods[i - 1]);
        sum += periods[i];
    }
    const double n = static_cast<double>(periods.size());
    return (diff / (n - 1.0)) / (sum / n);
}

/// Mean absolute difference of consecutive cycle amplitudes over the mean amplitude.
inline double shimmer_local(std::span<const double> amplitudes) {
    if (amplitudes.size() < 2) fail(ErrorCode::TooFewPeriods, "shimmer needs at least two amplitudes");
    for (double a : amplitudes) {
        if (!(a > 0.0)) fail(ErrorCode::NonPositiveAmplitude, "cycle amplitudes must be positive");
    }
    double diff = 0.0, sum = amplitudes[0];
    for (std::size_t i = 1; i < amplitudes.size(); ++i) {
        diff += std::abs(amplitudes[i] - amplitudes[i - 1]);
        sum += amplitudes[i];
    }
    const double n = static_cast<double>(amplitudes.size());
    return (diff / (n - 1.0)) / (sum / n);
}

/// One glottal cycle found by the cycle tracker.
struct Cycle {
    double start = 0.0;      // samples, relative to the analysed span
    double period = 0.0;     // samples
    double amplitude = 0.0;  // RMS over the cycle
};

namespace detail {

inline double window_correlation(std::span<const double> x, std::size_t a, std::size_t b, std::size_t w) {
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
        const double u = x[a + k], v = x[b + k];
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    const double denom = std::sqrt(saa * sbb);
    return denom > 1e-300 ? sab / denom : 0.0;
}

}  // namespace detail

/// Cycle-by-cycle tracking guided by the expected period `period_at(pos)`
/// (samples). The first cycle boundary is anchored at the quietest quarter
/// period inside the first cycle; each next boundary is the lag, within
/// 0.75..1.25 expected periods, that best matches one period of waveform
/// (normalized cross-correlation, parabolic refinement). Cycle amplitude is
/// the RMS between consecutive boundaries.
template <typename PeriodFn>
std::vector<Cycle> track_cycles(std::span<const double> x, PeriodFn&& period_at) {
    std::vector<Cycle> cycles;
    const double p0 = period_at(0.0);
    if (!(p0 > 2.0) || static_cast<double>(x.size()) < 3.0 * p0) return cycles;

    // Anchor: minimum-energy quarter period in [w/2, w/2 + P).
    const auto w0 = static_cast<std::size_t>(std::lround(p0));
    const std::size_t quarter = std::max<std::size_t>(1, w0 / 4);
    std::size_t anchor = w0 / 2;
    {
        double best = std::numeric_limits<double>::infinity();
        const std::size_t end = std::min(x.size() - quarter, w0 / 2 + w0);
        for (std::size_t t = w0 / 2; t < end; ++t) {
            double e = 0.0;
            for (std::size_t k = t; k < t + quarter; ++k) e += x[k] * x[k];
            if (e < best) {
                best = e;
                anchor = t;
            }
        }
    }

    double position = static_cast<double>(anchor);
    std::vector<double> corr;
    while (true) {
        const double period = period_at(position);
        if (!(period > 2.0)) break;
        const auto w = static_cast<std::size_t>(std::lround(period));
        const auto base = static_cast<std::size_t>(std::lround(position));
        if (base < w / 2) break;
        const auto lo = static_cast<std::size_t>(std::ceil(0.75 * period));
        const auto hi = static_cast<std::size_t>(std::floor(1.25 * period));
        if (lo < 2 || base + hi + 1 + w - w / 2 > x.size()) break;

        const std::size_t ref = base - w / 2;
        corr.assign(hi - lo + 3, 0.0);
        for (std::size_t lag = lo - 1; lag <= hi + 1; ++lag) {
            corr[lag - lo + 1] = detail::window_correlation(x, ref, ref + lag, w);
        }
        std::size_t b = 1;
        for (std::size_t k = 2; k + 1 < corr.size(); ++k) {
            if (corr[k] > corr[b]) b = k;
        }
        double delta = 0.0;
        if (corr[b] < 1.0 - 1e-12) {  // an exact repeat needs no refinement
            const double denom = corr[b - 1] - 2.0 * corr[b] + corr[b + 1];
            if (denom < 0.0) delta = std::clamp(0.5 * (corr[b - 1] - corr[b + 1]) / denom, -0.5, 0.5);
        }
        const std::size_t lag = lo + b - 1;
        const double measured = static_cast<double>(lag) + delta;
        const double next = position + measured;
        const auto next_base = static_cast<std::size_t>(std::lround(next));
        if (next_base > x.size()) break;

        double energy = 0.0;
        for (std::size_t k = base; k < next_base; ++k) energy += x[k] * x[k];
        const double amp = next_base > base ? std::sqrt(energy / static_cast<double>(next_base - base)) : 0.0;
        cycles.push_back({position, measured, amp});
        position = next;
    }
    // The last boundary has no following cycle to confirm it.
    if (!cycles.empty()) cycles.pop_back();
    return cycles;
}

inline std::vector<Cycle> track_cycles(std::span<const double> x, double period_samples) {
    return track_cycles(x, [period_samples](double) { return period_samples; });
}

// ---------------------------------------------------------------------------
// Spectral analysis: Hamming window, power-of-two FFT, mel filterbank, DCT.

inline std::vector<double> hamming(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return w;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline constexpr std::size_t kMelFilters = 26;
inline constexpr std::size_t kDefaultMfcc = 13;
inline constexpr double kMelLowHz = 0.0;
inline constexpr double kMelHighHz = 8000.0;
inline constexpr double kLogEnergyFloor = 1e-10;

struct SpectralShape {
    double centroid_hz = 0.0;
    double slope_0_500 = 0.0;      // dB per Hz
    double slope_500_1500 = 0.0;   // dB per Hz
    double alpha_ratio_db = 0.0;
    double hammarberg_db = 0.0;
};

/// Window, FFT, filterbank and DCT tables for one frame length and rate.
class SpectralAnalyzer {
public:
    SpectralAnalyzer(std::size_t frame_len, int sample_rate, std::size_t n_mfcc = kDefaultMfcc)
        : frame_len_(frame_len),
          rate_(sample_rate),
          fft_size_(next_pow2(frame_len)),
          n_mfcc_(n_mfcc),
          window_(hamming(frame_len)) {
        if (frame_len < 2) fail(ErrorCode::FrameTooShort, "spectral frame needs at least two samples");
        if (n_mfcc == 0 || n_mfcc > kMelFilters) fail(ErrorCode::InvalidArgument, "n_coeffs must be in 1..26");
        build_filterbank();
        build_dct();
    }

    std::size_t frame_length() const noexcept { return frame_len_; }
    std::size_t fft_size() const noexcept { return fft_size_; }
    std::size_t bins() const noexcept { return fft_size_ / 2 + 1; }
    double bin_hz(std::size_t k) const noexcept {
        return static_cast<double>(k) * rate_ / static_cast<double>(fft_size_);
    }

    /// Magnitude spectrum |X(k)| of the windowed frame, bins 0..fft/2.
    std::vector<double> magnitude(std::span<const double> frame) const {
        check(frame);
        std::vector<std::complex<double>> buf(fft_size_);
        for (std::size_t i = 0; i < frame_len_; ++i) buf[i] = frame[i] * window_[i];
        fft_inplace(buf);
        std::vector<double> mag(bins());
        for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
        return mag;
    }

    std::vector<double> mfcc_from_magnitude(std::span<const double> mag) const {
        std::vector<double> log_energy(kMelFilters);
        for (std::size_t m = 0; m < kMelFilters; ++m) {
            double e = 0.0;
            for (const auto& [k, w] : filters_[m]) e += w * mag[k] * mag[k];
            log_energy[m] = std::log(std::max(e, kLogEnergyFloor));
        }
        std::vector<double> c(n_mfcc_, 0.0);
        for (std::size_t k = 0; k < n_mfcc_; ++k) {
            double acc = 0.0;
            for (std::size_t m = 0; m < kMelFilters; ++m) acc += dct_[k * kMelFilters + m] * log_energy[m];
            c[k] = acc;
        }
        return c;
    }

    SpectralShape shape_from_magnitude(std::span<const double> mag) const {
        SpectralShape s;
        double weighted = 0.0, total = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k) {
            weighted += bin_hz(k) * mag[k];
            total += mag[k];
        }
        s.centroid_hz = total > 0.0 ? weighted / total : 0.0;
        s.slope_0_500 = band_slope(mag, 0.0, 500.0);
        s.slope_500_1500 = band_slope(mag, 500.0, 1500.0);
        const double low = band_energy(mag, 50.0, 1000.0, false);
        const double high = band_energy(mag, 1000.0, 5000.0, true);
        s.alpha_ratio_db = 10.0 * std::log10(std::max(high, 1e-20) / std::max(low, 1e-20));
        s.hammarberg_db = band_peak_db(mag, 0.0, 2000.0, true) - band_peak_db(mag, 2000.0, 5000.0, false);
        return s;
    }

    std::vector<double> mfcc(std::span<const double> frame) const { return mfcc_from_magnitude(magnitude(frame)); }

    SpectralShape shape(std::span<const double> frame) const {
        if (rms(frame) <= 1e-6) fail(ErrorCode::SilentFrame, "spectral descriptors undefined on a silent frame");
        return shape_from_magnitude(magnitude(frame));
    }

private:
    void check(std::span<const double> frame) const {
        if (frame.size() != frame_len_) {
            fail(ErrorCode::DimensionMismatch, "analyzer built for " + std::to_string(frame_len_) +
                                                   "-sample frames, got " + std::to_string(frame.size()));
        }
    }

    void build_filterbank() {
        const double high = std::min(kMelHighHz, rate_ / 2.0);
        const double mlo = hz_to_mel(kMelLowHz), mhi = hz_to_mel(high);
        std::vector<double> edges(kMelFilters + 2);
        for (std::size_t j = 0; j < edges.size(); ++j) {
            edges[j] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(j) / static_cast<double>(kMelFilters + 1));
        }
        filters_.assign(kMelFilters, {});
        for (std::size_t m = 0; m < kMelFilters; ++m) {
            const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
            for (std::size_t k = 0; k < bins(); ++k) {
                const double f = bin_hz(k);
                double w = 0.0;
                if (f > left && f <= centre) w = (f - left) / (centre - left);
                else if (f > centre && f < right) w = (right - f) / (right - centre);
                if (w > 0.0) filters_[m].emplace_back(k, w);
            }
        }
    }

    void build_dct() {
        dct_.resize(n_mfcc_ * kMelFilters);
        const double m = static_cast<double>(kMelFilters);
        for (std::size_t k = 0; k < n_mfcc_; ++k) {
            const double scale = k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
            for (std::size_t j = 0; j < kMelFilters; ++j) {
                dct_[k * kMelFilters + j] =
                    scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(j) + 0.5) / m);
            }
        }
    }

    double band_slope(std::span<const double> mag, double lo, double hi) const {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < mag.size(); ++k) {
            const double f = bin_hz(k);
            if (f < lo || f > hi) continue;
            const double y = 20.0 * std::log10(std::max(mag[k], 1e-12));
            sx += f;
            sy += y;
            sxx += f * f;
            sxy += f * y;
            ++n;
        }
        if (n < 2) return 0.0;
        const double dn = static_cast<double>(n);
        const double denom = dn * sxx - sx * sx;
        return denom != 0.0 ? (dn * sxy - sx * sy) / denom : 0.0;
    }

    double band_energy(std::span<const double> mag, double lo, double hi, bool include_hi) const {
        double e = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k) {
            const double f = bin_hz(k);
            if (f >= lo && (f < hi || (include_hi && f == hi))) e += mag[k] * mag[k];
        }
        return e;
    }

    double band_peak_db(std::span<const double> mag, double lo, double hi, bool include_lo) const {
        double peak = 0.0;
        for (std::size_t k = 0; k < mag.size(); ++k) {
            const double f = bin_hz(k);
            if ((f > lo || (include_lo && f == lo)) && f <= hi) peak = std::max(peak, mag[k]);
        }
        return 20.0 * std::log10(std::max(peak, 1e-12));
    }

    std::size_t frame_len_;
    int rate_;
    std::size_t fft_size_;
    std::size_t n_mfcc_;
    std::vector<double> window_;
    std::vector<std::vector<std::pair<std::size_t, double>>> filters_;
    std::vector<double> dct_;
};

/// MFCCs of one frame: Hamming window, power spectrum, 26 mel filters over
/// 0-8 kHz, natural-log energies floored at 1e-10, orthonormal DCT-II. c0 first.
inline std::vector<double> mfcc(std::span<const double> frame, int sample_rate, std::size_t n_coeffs = kDefaultMfcc) {
    if (frame.size() < 2) fail(ErrorCode::FrameTooShort, "MFCC frame needs at least two samples");
    return SpectralAnalyzer(frame.size(), sample_rate, n_coeffs).mfcc(frame);
}

inline SpectralShape spectral_descriptors(std::span<const double> frame, int sample_rate) {
    if (frame.size() < 2) fail(ErrorCode::FrameTooShort, "spectral frame needs at least two samples");
    return SpectralAnalyzer(frame.size(), sample_rate).shape(frame);
}

// ---------------------------------------------------------------------------
// Contours

struct LldContour {
    std::string name;
    std::vector<double> values;  // NaN marks a missing (unvoiced / silent) frame
    double frame_rate_hz = 100.0;

    std::size_t size() const noexcept { return values.size(); }
    std::size_t present() const noexcept {
        return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return !is_missing(v); }));
    }
};

struct VoicingDecision {
    std::vector<bool> is_voiced;
    std::vector<double> f0_hz;  // 0 on unvoiced frames
};

/// All descriptor contours of one buffer. Spectral/energy contours use
/// 25 ms frames, pitch-synchronous ones 40 ms frames, both with a 10 ms hop.
struct LldSet {
    int sample_rate = kCanonicalRate;
    std::size_t spectral_frames = 0;
    std::size_t pitch_frames = 0;
    std::vector<LldContour> contours;
    VoicingDecision voicing;

    const LldContour& get(std::string_view name) const {
        for (const auto& c : contours) {
            if (c.name == name) return c;
        }
        fail(ErrorCode::InvalidArgument, "no contour named " + std::string(name));
    }

    std::size_t voiced_frames() const {
        return static_cast<std::size_t>(std::count(voicing.is_voiced.begin(), voicing.is_voiced.end(), true));
    }

    /// Contours of the sub-range of the source that starts at `first_frame`
    /// hops and is `spectral`/`pitch` frames long.
    LldSet slice(std::size_t first_frame, std::size_t spectral, std::size_t pitch) const;
};

inline const std::vector<std::string>& spectral_contour_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n{"zcr", "rms", "energy_db"};
        for (int i = 0; i < static_cast<int>(kDefaultMfcc); ++i) n.push_back("mfcc" + std::to_string(i));
        for (const char* s : {"centroid", "slope_0_500", "slope_500_1500", "alpha_ratio", "hammarberg"}) n.emplace_back(s);
        return n;
    }();
    return names;
}

inline const std::vector<std::string>& pitch_contour_names() {
    static const std::vector<std::string> names{"voicing_prob", "f0", "log_f0", "hnr", "jitter", "shimmer"};
    return names;
}

inline bool is_pitch_contour(std::string_view name) {
    const auto& n = pitch_contour_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

/// Semitones relative to 27.5 Hz.
inline double f0_to_semitones(double f0_hz) { return 12.0 * std::log2(f0_hz / 27.5); }

inline std::size_t frame_count(std::size_t n_samples, std::size_t frame_len, std::size_t hop) {
    return n_samples >= frame_len ? (n_samples - frame_len) / hop + 1 : 0;
}

inline LldSet compute_llds(const AudioBuffer& buf) {
    const int rate = buf.sample_rate_hz;
    const std::size_t hop = ms_to_samples(kHopMs, rate);
    const std::size_t spec_len = ms_to_samples(kSpectralFrameMs, rate);
    const std::size_t pitch_len = ms_to_samples(kPitchFrameMs, rate);
    const double frame_rate = 1000.0 / kHopMs;
    if (buf.size() < pitch_len) {
        fail(ErrorCode::AudioTooShort, "descriptor extraction needs at least " + std::to_string(pitch_len) + " samples");
    }

    LldSet set;
    set.sample_rate = rate;
    set.spectral_frames = frame_count(buf.size(), spec_len, hop);
    set.pitch_frames = frame_count(buf.size(), pitch_len, hop);
    const std::span<const double> samples(buf.samples);

    // Spectral / energy contours.
    const auto& snames = spectral_contour_names();
    std::vector<LldContour> spectral(snames.size());
    for (std::size_t i = 0; i < snames.size(); ++i) {
        spectral[i].name = snames[i];
        spectral[i].frame_rate_hz = frame_rate;
        spectral[i].values.resize(set.spectral_frames);
    }
    const SpectralAnalyzer analyzer(spec_len, rate);
    for (std::size_t f = 0; f < set.spectral_frames; ++f) {
        const auto frame = samples.subspan(f * hop, spec_len);
        spectral[0].values[f] = zcr(frame, rate);
        spectral[1].values[f] = rms(frame);
        spectral[2].values[f] = energy_rms_db(frame);
        const auto mag = analyzer.magnitude(frame);
        const auto cep = analyzer.mfcc_from_magnitude(mag);
        for (std::size_t k = 0; k < cep.size(); ++k) spectral[3 + k].values[f] = cep[k];
        const std::size_t base = 3 + kDefaultMfcc;
        if (rms(frame) > 1e-6) {
            const auto s = analyzer.shape_from_magnitude(mag);
            spectral[base + 0].values[f] = s.centroid_hz;
            spectral[base + 1].values[f] = s.slope_0_500;
            spectral[base + 2].values[f] = s.slope_500_1500;
            spectral[base + 3].values[f] = s.alpha_ratio_db;
            spectral[base + 4].values[f] = s.hammarberg_db;
        } else {
            for (std::size_t j = 0; j < 5; ++j) spectral[base + j].values[f] = kMissing;
        }
    }

    // Pitch-synchronous contours.
    const auto& pnames = pitch_contour_names();
    std::vector<LldContour> pitch(pnames.size());
    for (std::size_t i = 0; i < pnames.size(); ++i) {
        pitch[i].name = pnames[i];
        pitch[i].frame_rate_hz = frame_rate;
        pitch[i].values.assign(set.pitch_frames, kMissing);
    }
    set.voicing.is_voiced.assign(set.pitch_frames, false);
    set.voicing.f0_hz.assign(set.pitch_frames, 0.0);
    const std::size_t max_lag = min_pitch_frame(rate, kDefaultFminHz) + 1;
    for (std::size_t f = 0; f < set.pitch_frames; ++f) {
        const auto frame = samples.subspan(f * hop, pitch_len);
        const NormalizedAutocorr r(frame, max_lag);
        const auto est = detail::pick_pitch(r, rate, kDefaultFminHz, kDefaultFmaxHz);
        pitch[0].values[f] = est.strength;
        if (!est.is_voiced) continue;
        set.voicing.is_voiced[f] = true;
        set.voicing.f0_hz[f] = est.f0_hz;
        pitch[1].values[f] = est.f0_hz;
        pitch[2].values[f] = f0_to_semitones(est.f0_hz);
        const double lag = rate / est.f0_hz;
        pitch[3].values[f] = detail::hnr_at(r, lag);

        const auto cycles = track_cycles(frame, lag);
        if (cycles.size() >= 2) {
            std::vector<double> periods, amps;
            for (const auto& c : cycles) {
                periods.push_back(c.period);
                amps.push_back(c.amplitude);
            }
            pitch[4].values[f] = jitter_local(periods);
            if (std::all_of(amps.begin(), amps.end(), [](double a) { return a > 0.0; })) {
                pitch[5].values[f] = shimmer_local(amps);
            }
        }
    }

    set.contours = std::move(spectral);
    for (auto& c : pitch) set.contours.push_back(std::move(c));
    return set;
}

inline LldSet LldSet::slice(std::size_t first_frame, std::size_t spectral, std::size_t pitch) const {
    if (first_frame + spectral > spectral_frames || first_frame + pitch > pitch_frames) {
        fail(ErrorCode::InvalidArgument, "contour slice out of range");
    }
    LldSet out;
    out.sample_rate = sample_rate;
    out.spectral_frames = spectral;
    out.pitch_frames = pitch;
    for (const auto& c : contours) {
        const std::size_t len = is_pitch_contour(c.name) ? pitch : spectral;
        LldContour s{c.name, {}, c.frame_rate_hz};
        s.values.assign(c.values.begin() + static_cast<std::ptrdiff_t>(first_frame),
                        c.values.begin() + static_cast<std::ptrdiff_t>(first_frame + len));
        out.contours.push_back(std::move(s));
    }
    const auto b = static_cast<std::ptrdiff_t>(first_frame);
    const auto e = static_cast<std::ptrdiff_t>(first_frame + pitch);
    out.voicing.is_voiced.assign(voicing.is_voiced.begin() + b, voicing.is_voiced.begin() + e);
    out.voicing.f0_hz.assign(voicing.f0_hz.begin() + b, voicing.f0_hz.begin() + e);
    return out;
}

// ---------------------------------------------------------------------------
// Whole-signal perturbation measurement

struct PerturbationMeasure {
    std::vector<std::vector<double>> periods_s;     // one list per voiced run
    std::vector<std::vector<double>> amplitudes;    // one list per voiced run
    double jitter = kMissing;
    double shimmer = kMissing;
    double mean_f0_hz = kMissing;
};

/// Tracks cycles through every voiced run of the pitch track and pools
/// cycle-to-cycle differences within runs.
inline PerturbationMeasure measure_perturbation(const AudioBuffer& buf) {
    const LldSet llds = compute_llds(buf);
    const int rate = buf.sample_rate_hz;
    const std::size_t hop = ms_to_samples(kHopMs, rate);
    const std::size_t pitch_len = ms_to_samples(kPitchFrameMs, rate);
    const auto& voiced = llds.voicing.is_voiced;
    const auto& f0 = llds.voicing.f0_hz;
    const std::span<const double> samples(buf.samples);

    PerturbationMeasure m;
    double f0_sum = 0.0;
    std::size_t f0_n = 0;
    for (std::size_t i = 0; i < voiced.size(); ++i) {
        if (voiced[i]) {
            f0_sum += f0[i];
            ++f0_n;
        }
    }
    if (f0_n) m.mean_f0_hz = f0_sum / static_cast<double>(f0_n);

    double jit_diff = 0.0, shim_diff = 0.0, period_sum = 0.0, amp_sum = 0.0;
    std::size_t jit_n = 0, shim_n = 0, cycle_n = 0;
    std::size_t i = 0;
    while (i < voiced.size()) {
        if (!voiced[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < voiced.size() && voiced[j + 1]) ++j;
        const std::size_t start = i * hop;
        const std::size_t end = j * hop + pitch_len;
        const auto run = samples.subspan(start, end - start);
        auto period_at = [&](double pos) {
            const double frame = (static_cast<double>(start) + pos - static_cast<double>(pitch_len) / 2.0) /
                                 static_cast<double>(hop);
            const auto idx = std::clamp<long>(std::lround(frame), static_cast<long>(i), static_cast<long>(j));
            return rate / f0[static_cast<std::size_t>(idx)];
        };
        const auto cycles = track_cycles(run, period_at);
        if (cycles.size() >= 2) {
            std::vector<double> periods, amps;
            for (std::size_t k = 0; k < cycles.size(); ++k) {
                periods.push_back(cycles[k].period / rate);
                amps.push_back(cycles[k].amplitude);
                period_sum += periods.back();
                amp_sum += amps.back();
                ++cycle_n;
                if (k > 0) {
                    jit_diff += std::abs(periods[k] - periods[k - 1]);
                    shim_diff += std::abs(amps[k] - amps[k - 1]);
                    ++jit_n;
                    ++shim_n;
                }
            }
            m.periods_s.push_back(std::move(periods));
            m.amplitudes.push_back(std::move(amps));
        }
        i = j + 1;
    }
    if (jit_n && period_sum > 0.0) m.jitter = (jit_diff / jit_n) / (period_sum / cycle_n);
    if (shim_n && amp_sum > 0.0) m.shimmer = (shim_diff / shim_n) / (amp_sum / cycle_n);
    return m;
}

}  // namespace voicescreen::dsp
