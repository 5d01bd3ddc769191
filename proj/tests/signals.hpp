#pragma once

// Test signal generators shared by the unit and acceptance suites.

#include <cmath>
#include <numbers>
#include <vector>

#include "voicescreen/audio.hpp"
#include "voicescreen/rng.hpp"

namespace voicescreen::testing {

inline AudioBuffer sine(double hz, double seconds, double amplitude = 1.0, int rate = 16000, double phase = 0.0) {
    AudioBuffer b;
    b.sample_rate_hz = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate + phase);
    }
    return b;
}

inline AudioBuffer sawtooth(double hz, double seconds, double amplitude = 0.8, int rate = 16000) {
    AudioBuffer b;
    b.sample_rate_hz = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = std::fmod(hz * static_cast<double>(i) / rate, 1.0);
        b.samples[i] = amplitude * (2.0 * phase - 1.0);
    }
    return b;
}

inline AudioBuffer white_noise(double seconds, double sd, std::uint64_t seed, int rate = 16000) {
    Rng rng = make_rng(seed);
    AudioBuffer b;
    b.sample_rate_hz = rate;
    b.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
    for (auto& x : b.samples) x = sd * standard_normal(rng);
    return b;
}

inline AudioBuffer silence(double seconds, int rate = 16000) {
    return AudioBuffer{std::vector<double>(static_cast<std::size_t>(std::llround(seconds * rate)), 0.0), rate};
}

inline AudioBuffer concat(std::initializer_list<AudioBuffer> parts) {
    AudioBuffer out;
    out.sample_rate_hz = parts.begin()->sample_rate_hz;
    for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
    return out;
}

}  // namespace voicescreen::testing
