#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "signals.hpp"
#include "voicescreen/cohort.hpp"
#include "voicescreen/lld.hpp"

using namespace voicescreen;
using namespace voicescreen::dsp;
using voicescreen::testing::sawtooth;
using voicescreen::testing::sine;
using voicescreen::testing::white_noise;

namespace {

std::span<const double> head(const AudioBuffer& b, std::size_t n, std::size_t offset = 0) {
    return std::span<const double>(b.samples).subspan(offset, n);
}

AudioBuffer pulse_train(double f0, double seconds, double period_sd, double amp_sd, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    const auto pulses = cohort::perturbed_pulse_train(f0, seconds, period_sd, amp_sd, rng);
    const auto n = static_cast<std::size_t>(seconds * 16000);
    return AudioBuffer{cohort::render_pulses(pulses, n), 16000};
}

}  // namespace

TEST(Pitch, SineAt220) {
    const auto s = sine(220.0, 0.5);
    const auto est = f0_autocorr(head(s, 640), 16000);
    EXPECT_TRUE(est.is_voiced);
    EXPECT_NEAR(est.f0_hz, 220.0, 2.0);
}

TEST(Pitch, SawtoothAt110HasNoOctaveError) {
    const auto s = sawtooth(110.0, 0.5);
    for (std::size_t off : {0u, 37u, 500u}) {
        const auto est = f0_autocorr(head(s, 640, off), 16000);
        EXPECT_TRUE(est.is_voiced);
        EXPECT_NEAR(est.f0_hz, 110.0, 1.5);
    }
}

TEST(Pitch, WhiteNoiseRarelyVoiced) {
    const auto n = white_noise(2.0, 0.3, 11);
    const auto frames = frame_signal(n, 40.0, 10.0);
    std::size_t voiced = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) voiced += f0_autocorr(frames[i], 16000).is_voiced;
    EXPECT_LT(static_cast<double>(voiced) / frames.size(), 0.2);
}

TEST(Pitch, FrameTooShort) {
    const auto s = sine(220.0, 0.01);
    try {
        f0_autocorr(s.samples, 16000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FrameTooShort);
    }
}

TEST(Perturbation, JitterFormula) {
    const std::vector<double> constant(10, 0.01);
    EXPECT_EQ(jitter_local(constant), 0.0);
    std::vector<double> alt;
    for (int i = 0; i < 10; ++i) alt.push_back(i % 2 ? 0.0102 : 0.0100);
    EXPECT_NEAR(jitter_local(alt), 0.0002 / 0.0101, 1e-12);
    EXPECT_THROW(jitter_local(std::vector<double>{0.01}), Error);
}

TEST(Perturbation, ShimmerFormula) {
    EXPECT_EQ(shimmer_local(std::vector<double>(6, 0.7)), 0.0);
    std::vector<double> alt;
    for (int i = 0; i < 10; ++i) alt.push_back(i % 2 ? 1.1 : 1.0);
    EXPECT_NEAR(shimmer_local(alt), 0.1 / 1.05, 1e-12);
    try {
        shimmer_local(std::vector<double>{1.0, 0.0, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveAmplitude);
    }
}

TEST(Perturbation, ScaleInvariance) {
    Rng rng = make_rng(5);
    std::vector<double> p(40), a(40);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = uniform(rng, 0.004, 0.006);
        a[i] = uniform(rng, 0.5, 1.0);
    }
    for (double k : {0.5, 2.0, 8.0}) {
        auto pk = p, ak = a;
        for (auto& v : pk) v *= k;
        for (auto& v : ak) v *= k;
        EXPECT_NEAR(jitter_local(pk), jitter_local(p), 1e-15);
        EXPECT_NEAR(shimmer_local(ak), shimmer_local(a), 1e-15);
    }
}

TEST(Perturbation, PeriodicPulseTrainIsExactlyZero) {
    const auto x = pulse_train(100.0, 3.0, 0.0, 0.0, 1);
    const auto m = measure_perturbation(x);
    EXPECT_EQ(m.jitter, 0.0);
    EXPECT_EQ(m.shimmer, 0.0);
}

TEST(Perturbation, InjectedPerturbationIsRecovered) {
    const auto x = pulse_train(150.0, 4.0, 0.02, 0.03, 21);
    const auto m = measure_perturbation(x);
    EXPECT_GE(m.jitter, 0.01);
    EXPECT_LE(m.jitter, 0.03);
    EXPECT_GE(m.shimmer, 0.015);
    EXPECT_LE(m.shimmer, 0.045);
}

TEST(Hnr, PureSineHitsCeiling) {
    const auto s = sine(220.0, 0.1);
    EXPECT_DOUBLE_EQ(hnr_db(head(s, 640), 220.0, 16000), 40.0);
}

TEST(Hnr, EqualPowerNoiseNearZero) {
    const auto s = sine(200.0, 2.0, 1.0);
    const auto n = white_noise(2.0, std::sqrt(0.5), 3);
    double total = 0.0;
    int count = 0;
    for (std::size_t off = 0; off + 640 <= s.size(); off += 1600) {
        std::vector<double> mix(640);
        for (std::size_t i = 0; i < 640; ++i) mix[i] = s.samples[off + i] + n.samples[off + i];
        total += hnr_db(mix, 200.0, 16000);
        ++count;
    }
    EXPECT_NEAR(total / count, 0.0, 3.0);
}

TEST(Hnr, ForcedNoiseIsLow) {
    const auto n = white_noise(0.04, 0.3, 9);
    EXPECT_LE(hnr_db(n.samples, 150.0, 16000), 5.0);
    EXPECT_THROW(hnr_db(n.samples, 0.0, 16000), Error);
}

TEST(Energy, SineRmsAndZcr) {
    for (double a : {0.1, 0.5, 1.0}) {
        const auto s = sine(220.0, 1.0, a);
        EXPECT_NEAR(rms(s.samples), a / std::sqrt(2.0), 1e-6);
        EXPECT_NEAR(energy_rms_db(s.samples), 20.0 * std::log10(a / std::sqrt(2.0)), 1e-6);
    }
    EXPECT_NEAR(zcr(sine(220.0, 1.0).samples, 16000), 440.0, 5.0);
    EXPECT_EQ(energy_rms_db(std::vector<double>(400, 0.0)), -120.0);
}

// Step-by-step MFCC reference: naive DFT, explicit triangles, explicit DCT.
std::vector<double> reference_mfcc(std::span<const double> frame, int rate) {
    const std::size_t n = frame.size();
    std::size_t nfft = 1;
    while (nfft < n) nfft *= 2;
    std::vector<double> power(nfft / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * t / (n - 1));
            acc += frame[t] * w * std::polar(1.0, -2.0 * std::numbers::pi * k * t / nfft);
        }
        power[k] = std::norm(acc);
    }
    auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double top = std::min(8000.0, rate / 2.0);
    std::vector<double> logs(26);
    for (int m = 1; m <= 26; ++m) {
        const double l = inv(mel(top) * (m - 1) / 27.0);
        const double c = inv(mel(top) * m / 27.0);
        const double r = inv(mel(top) * (m + 1) / 27.0);
        double e = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) {
            const double f = static_cast<double>(k) * rate / nfft;
            double w = 0.0;
            if (f > l && f <= c) w = (f - l) / (c - l);
            if (f > c && f < r) w = (r - f) / (r - c);
            e += w * power[k];
        }
        logs[m - 1] = std::log(std::max(e, 1e-10));
    }
    std::vector<double> out(13);
    for (int k = 0; k < 13; ++k) {
        double acc = 0.0;
        for (int m = 0; m < 26; ++m) acc += logs[m] * std::cos(std::numbers::pi * k * (m + 0.5) / 26.0);
        out[k] = acc * (k == 0 ? std::sqrt(1.0 / 26.0) : std::sqrt(2.0 / 26.0));
    }
    return out;
}

TEST(Mfcc, DimensionAndReferenceAgreement) {
    const auto x = white_noise(0.1, 0.2, 17);
    for (std::size_t len : {200u, 400u}) {
        const auto frame = head(x, len);
        const auto got = mfcc(frame, 16000);
        ASSERT_EQ(got.size(), 13u);
        const auto want = reference_mfcc(frame, 16000);
        for (std::size_t k = 0; k < 13; ++k) EXPECT_NEAR(got[k], want[k], 1e-6) << k;
    }
}

TEST(Mfcc, GainOnlyMovesC0) {
    const auto x = white_noise(0.05, 0.1, 4);
    const auto frame = head(x, 400);
    const auto base = mfcc(frame, 16000);
    std::vector<double> doubled(frame.begin(), frame.end());
    for (auto& v : doubled) v *= 2.0;
    const auto scaled = mfcc(doubled, 16000);
    EXPECT_NEAR(scaled[0] - base[0], std::log(4.0) * std::sqrt(26.0), 1e-9);
    for (std::size_t k = 1; k < 13; ++k) EXPECT_NEAR(scaled[k], base[k], 1e-6);
}

TEST(Spectral, CentroidOfSineAndNoise) {
    EXPECT_NEAR(spectral_descriptors(head(sine(1000.0, 0.1), 512), 16000).centroid_hz, 1000.0, 20.0);
    const auto n = white_noise(4.0, 0.2, 8);
    const auto frames = frame_signal(n, 25.0, 10.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) sum += spectral_descriptors(frames[i], 16000).centroid_hz;
    EXPECT_NEAR(sum / frames.size(), 4000.0, 400.0);
}

TEST(Spectral, LowPassLowersAlphaRatio) {
    const auto n = white_noise(1.0, 0.2, 12);
    auto lp = n;
    for (std::size_t i = 1; i < lp.size(); ++i) lp.samples[i] = 0.1 * n.samples[i] + 0.9 * lp.samples[i - 1];
    const auto raw_frames = frame_signal(n, 25.0, 10.0);
    const auto lp_frames = frame_signal(lp, 25.0, 10.0);
    double raw = 0.0, low = 0.0;
    for (std::size_t i = 0; i < raw_frames.size(); ++i) {
        raw += spectral_descriptors(raw_frames[i], 16000).alpha_ratio_db;
        low += spectral_descriptors(lp_frames[i], 16000).alpha_ratio_db;
    }
    EXPECT_LT(low, raw);
}

TEST(Spectral, SilentFrameRejected) {
    try {
        spectral_descriptors(std::vector<double>(400, 0.0), 16000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SilentFrame);
    }
}

TEST(Invariance, GainLeavesRatioDescriptorsUnchanged) {
    Rng rng = make_rng(2);
    auto voice = cohort::synth_voice(cohort::VoiceParams{}, 2.0, rng);
    const auto frames = frame_signal(voice, 40.0, 10.0);
    const SpectralAnalyzer analyzer(400, 16000);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(a)); };
    for (double g : {0.1, 0.37, 3.0, 10.0}) {
        for (std::size_t i = 20; i < frames.size(); i += 37) {
            std::vector<double> f(frames[i].begin(), frames[i].end());
            std::vector<double> h(f);
            for (auto& v : h) v *= g;
            const auto pa = f0_autocorr(f, 16000), pb = f0_autocorr(h, 16000);
            ASSERT_EQ(pa.is_voiced, pb.is_voiced);
            if (pa.is_voiced) {
                EXPECT_LT(rel(pa.f0_hz, pb.f0_hz), 1e-6);
                EXPECT_LT(rel(hnr_db(f, pa.f0_hz, 16000), hnr_db(h, pa.f0_hz, 16000)), 1e-6);
            }
            EXPECT_LT(rel(zcr(f, 16000), zcr(h, 16000)), 1e-6);
            EXPECT_NEAR(energy_rms_db(h) - energy_rms_db(f), 20.0 * std::log10(g), 1e-9);
            const std::span<const double> fs(f.data(), 400), hs(h.data(), 400);
            const auto sa = analyzer.shape(fs), sb = analyzer.shape(hs);
            EXPECT_LT(rel(sa.centroid_hz, sb.centroid_hz), 1e-6);
            EXPECT_LT(rel(sa.slope_0_500, sb.slope_0_500), 1e-6);
            EXPECT_LT(rel(sa.slope_500_1500, sb.slope_500_1500), 1e-6);
            EXPECT_LT(rel(sa.alpha_ratio_db, sb.alpha_ratio_db), 1e-6);
            EXPECT_LT(rel(sa.hammarberg_db, sb.hammarberg_db), 1e-6);
            const auto ma = analyzer.mfcc(fs), mb = analyzer.mfcc(hs);
            for (std::size_t k = 1; k < ma.size(); ++k) EXPECT_NEAR(ma[k], mb[k], 1e-6);
        }
    }
}

TEST(Invariance, WholePeriodShift) {
    // 200 Hz = 80 samples per period.
    const auto s = sawtooth(200.0, 0.5);
    const auto a = head(s, 640, 800);
    const auto b = head(s, 640, 880);
    const auto pa = f0_autocorr(a, 16000), pb = f0_autocorr(b, 16000);
    EXPECT_NEAR(pa.f0_hz, pb.f0_hz, 0.01 * pa.f0_hz);
    EXPECT_NEAR(hnr_db(a, pa.f0_hz, 16000), hnr_db(b, pb.f0_hz, 16000), 0.4);
    EXPECT_NEAR(zcr(a, 16000), zcr(b, 16000), 0.01 * zcr(a, 16000));
    const auto sa = spectral_descriptors(head(s, 400, 800), 16000);
    const auto sb = spectral_descriptors(head(s, 400, 880), 16000);
    EXPECT_NEAR(sa.centroid_hz, sb.centroid_hz, 0.01 * sa.centroid_hz);
}

TEST(Contours, LengthsAndMissingPattern) {
    Rng rng = make_rng(3);
    cohort::VoiceParams p;
    p.pause_rate_per_s = 1.0;
    const auto voice = cohort::synth_voice(p, 3.0, rng);
    const auto llds = compute_llds(voice);
    EXPECT_EQ(llds.spectral_frames, frame_count(voice.size(), 400, 160));
    EXPECT_EQ(llds.pitch_frames, frame_count(voice.size(), 640, 160));
    for (const auto& c : llds.contours) {
        EXPECT_EQ(c.size(), is_pitch_contour(c.name) ? llds.pitch_frames : llds.spectral_frames) << c.name;
    }
    const auto& f0 = llds.get("f0");
    const auto& hnr = llds.get("hnr");
    for (std::size_t i = 0; i < llds.pitch_frames; ++i) {
        EXPECT_EQ(!is_missing(f0.values[i]), static_cast<bool>(llds.voicing.is_voiced[i]));
        EXPECT_EQ(!is_missing(hnr.values[i]), static_cast<bool>(llds.voicing.is_voiced[i]));
        if (llds.voicing.is_voiced[i]) {
            EXPECT_GE(f0.values[i], kDefaultFminHz * 0.98);
            EXPECT_LE(f0.values[i], kDefaultFmaxHz * 1.02);
        }
    }
}

TEST(Contours, SliceMatchesDirectComputation) {
    Rng rng = make_rng(4);
    const auto voice = cohort::synth_voice(cohort::VoiceParams{}, 4.0, rng);
    const auto full = compute_llds(voice);
    AudioBuffer clip{std::vector<double>(voice.samples.begin() + 16000, voice.samples.begin() + 48000), 16000};
    const auto direct = compute_llds(clip);
    const auto sliced = full.slice(100, direct.spectral_frames, direct.pitch_frames);
    ASSERT_EQ(direct.contours.size(), sliced.contours.size());
    for (std::size_t c = 0; c < direct.contours.size(); ++c) {
        const auto& a = direct.contours[c].values;
        const auto& b = sliced.contours[c].values;
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (is_missing(a[i])) EXPECT_TRUE(is_missing(b[i]));
            else EXPECT_EQ(a[i], b[i]) << direct.contours[c].name << " frame " << i;
        }
    }
}
