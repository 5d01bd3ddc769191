#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "signals.hpp"
#include "voicescreen/segmenter.hpp"

using namespace voicescreen;
using namespace voicescreen::seg;
using namespace voicescreen::testing;

namespace {

ClipSamplingConfig config(double t, int n, std::uint64_t seed = 42) {
    ClipSamplingConfig c;
    c.clip_duration_s = t;
    c.clip_count = n;
    c.seed = seed;
    return c;
}

std::vector<double> starts_of(const std::vector<Clip>& clips) {
    std::vector<double> s;
    for (const auto& c : clips) s.push_back(c.start_s);
    return s;
}

}  // namespace

TEST(Regions, SilenceYieldsNothing) {
    EXPECT_TRUE(detect_voiced_regions(silence(3.0)).empty());
}

TEST(Regions, SteadyToneIsOneRegion) {
    const auto r = detect_voiced_regions(sine(220.0, 3.0));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r[0].start_s, 0.0);
    EXPECT_DOUBLE_EQ(r[0].end_s, 3.0);
}

TEST(Regions, ToneGapToneBoundariesWithinOneHop) {
    const auto x = concat({sine(220.0, 1.0), silence(1.0), sine(220.0, 1.0)});
    const auto r = detect_voiced_regions(x, -25.0, 100.0);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0].start_s, 0.0, 0.01);
    EXPECT_NEAR(r[0].end_s, 1.0, 0.01);
    EXPECT_NEAR(r[1].start_s, 2.0, 0.01);
    EXPECT_NEAR(r[1].end_s, 3.0, 0.01);
}

TEST(Regions, ShortBurstsDropped) {
    const auto x = concat({silence(1.0), sine(220.0, 0.05), silence(1.0), sine(220.0, 0.5), silence(0.5)});
    const auto r = detect_voiced_regions(x, -25.0, 100.0);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NEAR(r[0].start_s, 2.05, 0.01);
}

TEST(Regions, EmptyBufferRejected) {
    try {
        detect_voiced_regions(AudioBuffer{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyAudio);
    }
}

TEST(Coverage, PartialOverlapFraction) {
    const std::vector<VoicedRegion> r{{1.0, 2.0}, {3.0, 5.0}};
    EXPECT_DOUBLE_EQ(voiced_coverage(r, 0.0, 4.0), 0.5);
    EXPECT_DOUBLE_EQ(voiced_coverage(r, 3.0, 5.0), 1.0);
    EXPECT_DOUBLE_EQ(voiced_coverage(r, 5.0, 7.0), 0.0);
}

TEST(Sampling, FullyVoicedSixtySeconds) {
    const auto x = sine(200.0, 60.0, 0.5);
    const auto regions = detect_voiced_regions(x);
    const auto clips = sample_clips(x, regions, config(10.0, 5), "p001", "r1");
    ASSERT_EQ(clips.size(), 5u);
    std::set<double> distinct;
    for (const auto& c : clips) {
        EXPECT_EQ(c.buffer.size(), 160000u);
        EXPECT_GE(c.start_s, 0.0);
        EXPECT_LE(c.start_s, 50.0);
        EXPECT_FALSE(c.overlap_flag);
        distinct.insert(c.start_s);
    }
    EXPECT_EQ(distinct.size(), 5u);
    for (std::size_t a = 0; a < clips.size(); ++a) {
        for (std::size_t b = a + 1; b < clips.size(); ++b) {
            EXPECT_GE(std::abs(clips[a].start_s - clips[b].start_s), 10.0);
        }
    }
}

TEST(Sampling, ClipSamplesComeFromSource) {
    const auto x = white_noise(30.0, 0.3, 5);
    const auto regions = detect_voiced_regions(x);
    const auto clips = sample_clips(x, regions, config(5.0, 3), "p", "r");
    for (const auto& c : clips) {
        const auto first = static_cast<std::size_t>(c.start_s * 16000);
        for (std::size_t i = 0; i < c.buffer.size(); i += 997) EXPECT_EQ(c.buffer.samples[i], x.samples[first + i]);
    }
}

TEST(Sampling, TooShortRecording) {
    const auto x = sine(200.0, 8.0);
    try {
        sample_clips(x, detect_voiced_regions(x), config(10.0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientAudio);
    }
}

TEST(Sampling, NoVoicedWindow) {
    const auto x = concat({sine(200.0, 1.0), silence(19.0)});
    try {
        sample_clips(x, detect_voiced_regions(x), config(5.0, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientVoiced);
    }
}

TEST(Sampling, DeterministicForFixedSeed) {
    const auto x = white_noise(40.0, 0.2, 9);
    const auto regions = detect_voiced_regions(x);
    EXPECT_EQ(starts_of(sample_clips(x, regions, config(5.0, 4), "p", "r")),
              starts_of(sample_clips(x, regions, config(5.0, 4), "p", "r")));
}

TEST(Sampling, SeedChangesOnlyStarts) {
    const auto x = white_noise(40.0, 0.2, 9);
    const auto regions = detect_voiced_regions(x);
    std::set<std::vector<double>> seen;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto clips = sample_clips(x, regions, config(5.0, 4, seed), "p", "r");
        ASSERT_EQ(clips.size(), 4u);
        for (const auto& c : clips) EXPECT_EQ(c.buffer.size(), 80000u);
        seen.insert(starts_of(clips));
    }
    EXPECT_GT(seen.size(), 1u);
}

TEST(Sampling, IdentifiersFeedTheSeed) {
    const auto x = white_noise(60.0, 0.2, 9);
    const auto regions = detect_voiced_regions(x);
    std::set<std::vector<double>> seen;
    for (const char* id : {"a", "b", "c", "d", "e", "f"}) {
        seen.insert(starts_of(sample_clips(x, regions, config(5.0, 3), id, "r")));
    }
    EXPECT_GT(seen.size(), 1u);
}

TEST(Sampling, CoverageMeetsFloorByRecomputation) {
    // Voice for 4 s, silence for 4 s, six times.
    AudioBuffer x;
    for (int k = 0; k < 6; ++k) x = concat({x, sine(200.0, 4.0), silence(4.0)});
    const auto regions = detect_voiced_regions(x);
    auto cfg = config(6.0, 3, 3);
    cfg.min_voiced_ratio = 0.6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        for (const auto& c : sample_clips(x, regions, cfg, "p", "r")) {
            EXPECT_GE(voiced_coverage(regions, c.start_s, c.start_s + 6.0), 0.6);
        }
    }
}

TEST(Sampling, OverlapFallbackFlagsAndKeepsStartsDistinct) {
    const auto x = sine(200.0, 20.0, 0.5);
    const auto clips = sample_clips(x, detect_voiced_regions(x), config(5.0, 11), "p", "r");
    ASSERT_EQ(clips.size(), 11u);
    std::set<double> distinct;
    bool flagged = false;
    for (const auto& c : clips) {
        distinct.insert(c.start_s);
        flagged = flagged || c.overlap_flag;
        EXPECT_LE(c.start_s + 5.0, 20.0);
    }
    EXPECT_EQ(distinct.size(), 11u);
    EXPECT_TRUE(flagged);
}

TEST(Sampling, RepeatsOnceCandidatesRunOut) {
    const auto x = sine(200.0, 10.0, 0.5);
    const auto clips = sample_clips(x, detect_voiced_regions(x), config(10.0, 3), "p", "r");
    ASSERT_EQ(clips.size(), 3u);
    for (const auto& c : clips) {
        EXPECT_EQ(c.start_s, 0.0);
        EXPECT_TRUE(c.overlap_flag);
    }
}

TEST(Sampling, AllowOverlapDrawsDistinctStarts) {
    const auto x = sine(200.0, 12.0, 0.5);
    auto cfg = config(5.0, 6);
    cfg.allow_overlap = true;
    const auto clips = sample_clips(x, detect_voiced_regions(x), cfg, "p", "r");
    std::set<double> distinct;
    for (const auto& c : clips) distinct.insert(c.start_s);
    EXPECT_EQ(distinct.size(), 6u);
}

TEST(Sampling, DisjointDrawIsUniformOverSubsets) {
    // 10 s recording, T = 3: candidates 0..7; enumerate every disjoint pair.
    const auto x = sine(200.0, 10.0, 0.5);
    const auto regions = detect_voiced_regions(x);
    std::map<std::pair<double, double>, int> counts;
    for (int a = 0; a <= 7; ++a) {
        for (int b = a + 3; b <= 7; ++b) counts[{a, b}] = 0;
    }
    ASSERT_EQ(counts.size(), 15u);
    const int trials = 15000;
    for (int t = 0; t < trials; ++t) {
        const auto clips = sample_clips(x, regions, config(3.0, 2, static_cast<std::uint64_t>(t)), "p", "r");
        ASSERT_EQ(clips.size(), 2u);
        auto it = counts.find({clips[0].start_s, clips[1].start_s});
        ASSERT_NE(it, counts.end());
        ++it->second;
    }
    // Each cell expects 1000; 5 sigma is about 160.
    for (const auto& [pair, n] : counts) EXPECT_NEAR(n, 1000, 160) << pair.first << "," << pair.second;
}

TEST(Planning, SpansRecordingsOfOneParticipant) {
    const auto a = sine(200.0, 12.0, 0.5);
    const auto b = sine(200.0, 12.0, 0.5);
    const auto ra = detect_voiced_regions(a);
    const auto rb = detect_voiced_regions(b);
    const std::vector<RecordingView> views{{"r1", a, ra}, {"r2", b, rb}};
    const auto plan = plan_clips("p", views, config(6.0, 4));
    ASSERT_EQ(plan.size(), 4u);
    for (const auto& p : plan) EXPECT_FALSE(p.overlap_flag);
    EXPECT_EQ(std::count_if(plan.begin(), plan.end(), [](const auto& p) { return p.recording_id == "r1"; }), 2);
}

TEST(Planning, ClipIdAndInventory) {
    const auto x = sine(200.0, 30.0, 0.5);
    const auto regions = detect_voiced_regions(x);
    const RecordingView view("r1", x, regions);
    const auto plan = plan_clips("p007", std::span<const RecordingView>(&view, 1), config(10.0, 2));
    EXPECT_EQ(plan[0].clip_id(10.0), "p007/r1@" + std::to_string(static_cast<int>(plan[0].start_s)) + "+10");
    const auto text = inventory_jsonl(plan, 10.0);
    std::size_t lines = 0, pos = 0;
    while ((pos = text.find('\n', pos)) != std::string::npos) {
        ++lines;
        ++pos;
    }
    EXPECT_EQ(lines, 2u);
    const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
    EXPECT_EQ(first["participant_id"], "p007");
    EXPECT_EQ(first["recording_id"], "r1");
    EXPECT_EQ(first["duration_s"], 10.0);
    EXPECT_EQ(first["overlap_flag"], false);
}

TEST(Config, RejectsBadValues) {
    auto c = config(0.0, 1);
    EXPECT_THROW(c.validate(), Error);
    c = config(5.0, 0);
    EXPECT_THROW(c.validate(), Error);
    c = config(5.0, 1);
    c.min_voiced_ratio = 1.5;
    EXPECT_THROW(c.validate(), Error);
}
