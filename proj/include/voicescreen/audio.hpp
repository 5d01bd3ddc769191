#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "voicescreen/error.hpp"

namespace voicescreen {

inline constexpr int kCanonicalRate = 16000;

/// Mono sample stream. Samples are in [-1, 1] once loaded or normalized.
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate_hz = kCanonicalRate;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    double duration_s() const noexcept {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
    }
};

inline std::size_t ms_to_samples(double ms, int rate) {
    return static_cast<std::size_t>(std::lround(ms / 1000.0 * rate));
}

/// Fixed-length windows taken left to right; the trailing partial frame is dropped.
/// Frames are views into an owned copy of the source samples.
class FrameSequence {
public:
    FrameSequence() = default;
    FrameSequence(std::vector<double> samples, int rate, double frame_len_ms, double hop_ms)
        : samples_(std::move(samples)),
          rate_(rate),
          frame_len_ms_(frame_len_ms),
          hop_ms_(hop_ms),
          frame_len_(ms_to_samples(frame_len_ms, rate)),
          hop_(ms_to_samples(hop_ms, rate)) {
        count_ = samples_.size() >= frame_len_ ? (samples_.size() - frame_len_) / hop_ + 1 : 0;
    }

    std::size_t size() const noexcept { return count_; }
    std::size_t frame_length() const noexcept { return frame_len_; }
    std::size_t hop() const noexcept { return hop_; }
    int sample_rate() const noexcept { return rate_; }
    double frame_len_ms() const noexcept { return frame_len_ms_; }
    double hop_ms() const noexcept { return hop_ms_; }
    double frame_rate_hz() const noexcept { return 1000.0 / hop_ms_; }
    std::size_t frame_start(std::size_t i) const noexcept { return i * hop_; }

    std::span<const double> operator[](std::size_t i) const noexcept {
        return std::span<const double>(samples_).subspan(i * hop_, frame_len_);
    }

private:
    std::vector<double> samples_;
    int rate_ = kCanonicalRate;
    double frame_len_ms_ = 0.0;
    double hop_ms_ = 0.0;
    std::size_t frame_len_ = 0;
    std::size_t hop_ = 1;
    std::size_t count_ = 0;
};

inline FrameSequence frame_signal(const AudioBuffer& buf, double frame_len_ms, double hop_ms) {
    if (!(hop_ms > 0.0) || frame_len_ms < hop_ms) {
        fail(ErrorCode::InvalidArgument, "frame_signal requires frame_len_ms >= hop_ms > 0");
    }
    const std::size_t frame_len = ms_to_samples(frame_len_ms, buf.sample_rate_hz);
    if (frame_len == 0 || ms_to_samples(hop_ms, buf.sample_rate_hz) == 0) {
        fail(ErrorCode::InvalidArgument, "frame or hop shorter than one sample");
    }
    if (buf.size() < frame_len) {
        fail(ErrorCode::AudioTooShort, "buffer has " + std::to_string(buf.size()) +
                                           " samples, frame needs " + std::to_string(frame_len));
    }
    return FrameSequence(buf.samples, buf.sample_rate_hz, frame_len_ms, hop_ms);
}

// ---------------------------------------------------------------------------
// Resampling: Kaiser-windowed sinc, 64 taps, polyphase table when the rate
// ratio reduces to a manageable number of phases.

namespace detail {

inline constexpr int kResampleTaps = 64;
inline constexpr double kKaiserBeta = 8.0;

inline double kaiser(double x, double half_width) {
    const double r = x / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
           std::cyl_bessel_i(0.0, kKaiserBeta);
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// Taps for output positioned `frac` samples past input index `base`; taps cover
// input indices base - taps/2 + 1 .. base + taps/2. Normalized to unit DC gain.
inline void fill_taps(double frac, double cutoff, std::span<double> taps) {
    const int half = kResampleTaps / 2;
    double sum = 0.0;
    for (int k = 0; k < kResampleTaps; ++k) {
        const double d = static_cast<double>(k - half + 1) - frac;
        taps[k] = cutoff * sinc(cutoff * d) * kaiser(d, half);
        sum += taps[k];
    }
    for (auto& t : taps) t /= sum;
}

}  // namespace detail

inline AudioBuffer resample(const AudioBuffer& buf, int target_hz) {
    if (target_hz <= 0) fail(ErrorCode::InvalidArgument, "target rate must be positive");
    if (target_hz == buf.sample_rate_hz) return buf;

    const auto src = static_cast<std::int64_t>(buf.sample_rate_hz);
    const auto dst = static_cast<std::int64_t>(target_hz);
    const std::int64_t g = std::gcd(src, dst);
    const std::int64_t up = dst / g;    // phases
    const std::int64_t down = src / g;  // input advance per `up` outputs

    const auto in_len = static_cast<std::int64_t>(buf.size());
    const auto out_len = static_cast<std::int64_t>(
        std::llround(static_cast<double>(in_len) * static_cast<double>(dst) / static_cast<double>(src)));
    const double cutoff = std::min(1.0, static_cast<double>(dst) / static_cast<double>(src));
    const int half = detail::kResampleTaps / 2;

    const bool use_table = up <= 4096;
    std::vector<double> table;
    if (use_table) {
        table.resize(static_cast<std::size_t>(up) * detail::kResampleTaps);
        for (std::int64_t p = 0; p < up; ++p) {
            detail::fill_taps(static_cast<double>(p) / static_cast<double>(up), cutoff,
                              std::span<double>(table).subspan(static_cast<std::size_t>(p) * detail::kResampleTaps,
                                                               detail::kResampleTaps));
        }
    }
    std::vector<double> scratch(detail::kResampleTaps);

    AudioBuffer out;
    out.sample_rate_hz = target_hz;
    out.samples.resize(static_cast<std::size_t>(out_len));
    for (std::int64_t n = 0; n < out_len; ++n) {
        const std::int64_t num = n * down;  // position in input samples = num / up
        const std::int64_t base = num / up;
        const std::int64_t phase = num % up;
        std::span<const double> taps;
        if (use_table) {
            taps = std::span<const double>(table).subspan(static_cast<std::size_t>(phase) * detail::kResampleTaps,
                                                          detail::kResampleTaps);
        } else {
            detail::fill_taps(static_cast<double>(phase) / static_cast<double>(up), cutoff, scratch);
            taps = scratch;
        }
        double acc = 0.0;
        for (int k = 0; k < detail::kResampleTaps; ++k) {
            const std::int64_t idx = base - half + 1 + k;
            if (idx >= 0 && idx < in_len) acc += taps[k] * buf.samples[static_cast<std::size_t>(idx)];
        }
        out.samples[static_cast<std::size_t>(n)] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// WAV I/O (RIFF little-endian; PCM16 and IEEE float32 in, PCM16 mono out).

namespace detail {

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

inline AudioBuffer decode_wav(std::span<const unsigned char> bytes) {
    using detail::read_u16;
    using detail::read_u32;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        fail(ErrorCode::MalformedHeader, "not a RIFF/WAVE container");
    }
    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::span<const unsigned char> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t chunk_size = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        const std::size_t avail = std::min<std::size_t>(chunk_size, bytes.size() - body);
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (avail < 16) fail(ErrorCode::MalformedHeader, "fmt chunk too short");
            const unsigned char* f = bytes.data() + body;
            format = read_u16(f);
            channels = read_u16(f + 2);
            rate = read_u32(f + 4);
            bits = read_u16(f + 14);
            if (format == detail::kFormatExtensible) {
                if (avail < 26) fail(ErrorCode::MalformedHeader, "extensible fmt chunk too short");
                format = read_u16(f + 24);  // first two bytes of the sub-format GUID
            }
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.subspan(body, avail);
            have_data = true;
        }
        pos = body + chunk_size + (chunk_size & 1u);
    }
    if (!have_fmt || !have_data) fail(ErrorCode::MalformedHeader, "missing fmt or data chunk");
    if (channels == 0 || rate == 0) fail(ErrorCode::MalformedHeader, "zero channels or sample rate");

    const bool pcm16 = format == detail::kFormatPcm && bits == 16;
    const bool f32 = format == detail::kFormatFloat && bits == 32;
    if (!pcm16 && !f32) {
        fail(ErrorCode::UnsupportedEncoding,
             "format tag " + std::to_string(format) + " with " + std::to_string(bits) + " bits");
    }
    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t n_frames = data.size() / frame_bytes;
    if (n_frames == 0) fail(ErrorCode::EmptyAudio, "data chunk holds no samples");

    AudioBuffer out;
    out.sample_rate_hz = static_cast<int>(rate);
    out.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data.data() + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                acc += static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
            } else {
                const float v = std::bit_cast<float>(read_u32(p));
                if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite float sample");
                acc += std::clamp(static_cast<double>(v), -1.0, 1.0);
            }
        }
        out.samples[i] = acc / static_cast<double>(channels);
    }
    return out;
}

inline AudioBuffer load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

inline std::int16_t to_pcm16(double x) {
    const double scaled = std::round(x * 32768.0);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

/// PCM16 mono encoding of `buf` at its own sample rate.
inline std::vector<unsigned char> encode_wav(const AudioBuffer& buf) {
    using detail::put_u16;
    using detail::put_u32;
    const auto data_bytes = static_cast<std::uint32_t>(buf.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, detail::kFormatPcm);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (double x : buf.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm16(x)));
    return out;
}

/// Writes via a temporary file and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoFailure, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::IoFailure, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoFailure, "rename to " + path.string() + ": " + ec.message());
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
    const auto bytes = encode_wav(buf);
    write_file_atomic(path, bytes);
}

/// Load, downmix, and bring to the canonical analysis rate.
inline AudioBuffer load_wav_canonical(const std::filesystem::path& path) {
    return resample(load_wav(path), kCanonicalRate);
}

}  // namespace voicescreen
