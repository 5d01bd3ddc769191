#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "voicescreen/cohort.hpp"
#include "voicescreen/lld.hpp"
#include "voicescreen/segmenter.hpp"
#include "voicescreen/stats.hpp"

using namespace voicescreen;
using namespace voicescreen::cohort;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

VoiceParams steady(double f0) {
    VoiceParams p;
    p.f0_mean_hz = f0;
    p.f0_sd_hz = 0.0;
    p.jitter_frac = 0.0;
    p.shimmer_frac = 0.0;
    p.pause_rate_per_s = 0.0;
    return p;
}

double voiced_ratio(const dsp::LldSet& l) {
    return static_cast<double>(l.voiced_frames()) / static_cast<double>(l.pitch_frames);
}

}  // namespace

TEST(ClassParams, NoEffectMeansIdenticalDraws) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng a = make_rng(seed), b = make_rng(seed);
        const auto h = class_params(Label::Healthy, 0.0, a);
        const auto d = class_params(Label::Depressed, 0.0, b);
        EXPECT_EQ(h.f0_mean_hz, d.f0_mean_hz);
        EXPECT_EQ(h.f0_sd_hz, d.f0_sd_hz);
        EXPECT_EQ(h.jitter_frac, d.jitter_frac);
        EXPECT_EQ(h.shimmer_frac, d.shimmer_frac);
        EXPECT_EQ(h.pause_rate_per_s, d.pause_rate_per_s);
        EXPECT_EQ(h.syllable_rate_per_s, d.syllable_rate_per_s);
        EXPECT_EQ(a(), b());
    }
}

TEST(ClassParams, FullEffectShiftsFromSameBaseline) {
    Rng a = make_rng(5), b = make_rng(5);
    const auto h = class_params(Label::Healthy, 1.0, a);
    const auto d = class_params(Label::Depressed, 1.0, b);
    EXPECT_NEAR(d.f0_mean_hz, h.f0_mean_hz * 0.88, 1e-9);
    EXPECT_NEAR(190.0 * (1.0 - kShiftF0Mean), 167.2, 1e-12);
    EXPECT_NEAR(d.f0_sd_hz, h.f0_sd_hz * 0.6, 1e-12);
    EXPECT_NEAR(d.jitter_frac, h.jitter_frac + 0.015, 1e-15);
    EXPECT_NEAR(d.shimmer_frac, h.shimmer_frac + 0.020, 1e-15);
    EXPECT_NEAR(d.pause_rate_per_s, h.pause_rate_per_s * 1.8, 1e-12);
    EXPECT_NEAR(d.syllable_rate_per_s, h.syllable_rate_per_s * 0.8, 1e-12);
    EXPECT_EQ(h.jitter_frac, 0.008);
    EXPECT_EQ(h.shimmer_frac, 0.025);
    EXPECT_EQ(h.pause_rate_per_s, 0.3);
    EXPECT_EQ(h.syllable_rate_per_s, 4.0);
}

TEST(ClassParams, MonteCarloDirections) {
    Rng rng = make_rng(77);
    double sum[2][6] = {};
    for (int i = 0; i < 1000; ++i) {
        for (int c = 0; c < 2; ++c) {
            const auto p = class_params(c ? Label::Depressed : Label::Healthy, 1.0, rng);
            const double v[6] = {p.f0_mean_hz, p.f0_sd_hz, p.jitter_frac, p.shimmer_frac, p.pause_rate_per_s,
                                 p.syllable_rate_per_s};
            for (int k = 0; k < 6; ++k) sum[c][k] += v[k];
        }
    }
    EXPECT_LT(sum[1][0], sum[0][0]);
    EXPECT_LT(sum[1][1], sum[0][1]);
    EXPECT_GT(sum[1][2], sum[0][2]);
    EXPECT_GT(sum[1][3], sum[0][3]);
    EXPECT_GT(sum[1][4], sum[0][4]);
    EXPECT_LT(sum[1][5], sum[0][5]);
    EXPECT_NEAR(sum[0][0] / 1000.0, 190.0, 2.0);
}

TEST(ClassParams, RejectsEffectOutsideUnitRange) {
    Rng rng = make_rng(1);
    EXPECT_EQ(code_of([&] { class_params(Label::Healthy, 1.5, rng); }), ErrorCode::InvalidArgument);
}

TEST(Synth, PeakNormalizedAndNonSilent) {
    Rng rng = make_rng(2);
    const auto x = synth_voice(VoiceParams{}, 3.0, rng);
    EXPECT_EQ(x.size(), 48000u);
    double peak = 0.0;
    for (double v : x.samples) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 0.9, 1e-12);
    EXPECT_GT(dsp::rms(x.samples), 0.01);
}

TEST(Synth, UnperturbedVoiceMeasuresNearZero) {
    Rng rng = make_rng(3);
    const auto m = dsp::measure_perturbation(synth_voice(steady(180.0), 4.0, rng));
    EXPECT_LT(m.jitter, 0.005);
    EXPECT_LT(m.shimmer, 0.01);
}

TEST(Synth, SteadyPitchMedian) {
    Rng rng = make_rng(4);
    const auto l = dsp::compute_llds(synth_voice(steady(150.0), 4.0, rng));
    std::vector<double> f0;
    for (double v : l.get("f0").values) {
        if (!dsp::is_missing(v)) f0.push_back(v);
    }
    EXPECT_NEAR(stats::percentile(f0, 50.0), 150.0, 5.0);
}

TEST(Synth, NoPausesMostlyVoiced) {
    Rng rng = make_rng(5);
    auto p = VoiceParams{};
    p.pause_rate_per_s = 0.0;
    EXPECT_GE(voiced_ratio(dsp::compute_llds(synth_voice(p, 5.0, rng))), 0.85);
}

TEST(Synth, PausesReduceVoicedFrames) {
    auto p = VoiceParams{};
    p.pause_rate_per_s = 0.0;
    Rng a = make_rng(6);
    const double none = voiced_ratio(dsp::compute_llds(synth_voice(p, 20.0, a)));
    p.pause_rate_per_s = 0.8;
    p.mean_pause_s = 0.6;
    Rng b = make_rng(6);
    EXPECT_LT(voiced_ratio(dsp::compute_llds(synth_voice(p, 20.0, b))), none - 0.1);
}

TEST(Synth, MeasuredParametersCloseOverCohortDraws) {
    Rng rng = make_rng(11);
    for (int i = 0; i < 20; ++i) {
        const double d = uniform(rng, 0.0, 1.0);
        const auto p = class_params(i % 2 ? Label::Depressed : Label::Healthy, d, rng);
        Rng voice = make_rng(100 + static_cast<std::uint64_t>(i));
        const auto m = dsp::measure_perturbation(synth_voice(p, 10.0, voice));
        EXPECT_NEAR(m.mean_f0_hz / p.f0_mean_hz, 1.0, 0.05) << "draw " << i;
        EXPECT_NEAR(m.jitter, p.jitter_frac, 0.01) << "draw " << i;
        EXPECT_NEAR(m.shimmer, p.shimmer_frac, 0.015) << "draw " << i;
    }
}

TEST(Synth, RejectsInvalidInput) {
    Rng rng = make_rng(1);
    EXPECT_EQ(code_of([&] { synth_voice(VoiceParams{}, 1.0, rng); }), ErrorCode::InvalidArgument);
    auto p = VoiceParams{};
    p.jitter_frac = 0.2;
    EXPECT_EQ(code_of([&] { synth_voice(p, 3.0, rng); }), ErrorCode::InvalidArgument);
    p = VoiceParams{};
    p.formants[1].centre_hz = 400.0;
    EXPECT_EQ(code_of([&] { synth_voice(p, 3.0, rng); }), ErrorCode::InvalidArgument);
}

class Generate : public ::testing::Test {
protected:
    std::filesystem::path root = std::filesystem::temp_directory_path() / "voicescreen_cohort_test";
    void SetUp() override { std::filesystem::remove_all(root); }
    void TearDown() override { std::filesystem::remove_all(root); }

    static CohortConfig small(int dep, int healthy, double d) {
        CohortConfig c;
        c.n_depressed = dep;
        c.n_healthy = healthy;
        c.effect_size = d;
        c.recording_duration_s = 3.0;
        c.seed = 7;
        return c;
    }
};

TEST_F(Generate, OneWavAndRowPerParticipant) {
    const auto m = generate_cohort(small(3, 2, 1.0), root / "a");
    ASSERT_EQ(m.participants.size(), 5u);
    std::size_t wavs = 0;
    for (const auto& e : std::filesystem::directory_iterator(root / "a")) wavs += e.path().extension() == ".wav";
    EXPECT_EQ(wavs, 5u);
    const auto parsed = parse_manifest(root / "a" / "manifest.json");
    EXPECT_EQ(parsed, m);
    int dep = 0;
    for (const auto& p : parsed.participants) {
        dep += p.label == DiagnosisLabel::Depressed;
        EXPECT_EQ(p.scenario, Scenario::Synthetic);
        const auto audio = load_wav(parsed.resolve(p.recordings[0]));
        EXPECT_EQ(audio.sample_rate_hz, 16000);
        EXPECT_EQ(audio.size(), 48000u);
    }
    EXPECT_EQ(dep, 3);
}

TEST_F(Generate, SameSeedSameBytes) {
    generate_cohort(small(2, 2, 0.5), root / "a");
    generate_cohort(small(2, 2, 0.5), root / "b");
    for (const auto& e : std::filesystem::directory_iterator(root / "a")) {
        EXPECT_EQ(slurp(e.path()), slurp(root / "b" / e.path().filename())) << e.path().filename();
    }
}

TEST_F(Generate, NoEffectAudioIgnoresLabel) {
    // p003 is depressed in the first cohort and healthy in the second.
    generate_cohort(small(3, 1, 0.0), root / "a");
    generate_cohort(small(2, 2, 0.0), root / "b");
    EXPECT_EQ(slurp(root / "a" / "p003.wav"), slurp(root / "b" / "p003.wav"));
    generate_cohort(small(3, 1, 1.0), root / "c");
    generate_cohort(small(2, 2, 1.0), root / "d");
    EXPECT_NE(slurp(root / "c" / "p003.wav"), slurp(root / "d" / "p003.wav"));
}

TEST_F(Generate, RejectsBadConfig) {
    EXPECT_EQ(code_of([&] { generate_cohort(small(0, 2, 1.0), root); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { generate_cohort(small(2, 2, -0.1), root); }), ErrorCode::InvalidArgument);
}
