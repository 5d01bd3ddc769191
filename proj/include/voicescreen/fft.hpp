#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace voicescreen::dsp {

constexpr std::size_t next_pow2(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (size, direction) and kept.
inline fftw_plan complex_plan(std::size_t n, bool inverse) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, bool>, fftw_plan> plans;
    const std::lock_guard lock(mutex);
    auto& plan = plans[{n, inverse}];
    if (!plan) {
        std::vector<std::complex<double>> scratch(n);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    return plan;
}

}  // namespace detail

/// In-place complex DFT. The inverse is scaled by 1/n.
inline void fft_inplace(std::span<std::complex<double>> data, bool inverse = false) {
    const std::size_t n = data.size();
    if (n == 0) return;
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(detail::complex_plan(n, inverse), p, p);
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : data) x *= scale;
    }
}

/// Spectrum of a real signal zero-padded to fft_size; returns bins 0..fft_size/2.
inline std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t fft_size) {
    std::vector<std::complex<double>> buf(fft_size);
    for (std::size_t i = 0; i < x.size() && i < fft_size; ++i) buf[i] = x[i];
    fft_inplace(buf);
    buf.resize(fft_size / 2 + 1);
    return buf;
}

}  // namespace voicescreen::dsp
