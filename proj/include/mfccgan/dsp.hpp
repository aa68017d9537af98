// Low-level signal primitives: radix-2 FFT, windows, polyphase resampling.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mfccgan/common.hpp"

namespace mfccgan {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. x.size() must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& x, bool inverse = false) {
    const size_t n = x.size();
    if (!is_power_of_two(n)) throw DataError("fft: size must be a power of two");
    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = x[i + k];
                const std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& c : x) c *= inv;
    }
}

// Real-input FFT: returns bins 0..n/2 (inclusive) of the n-point transform.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& in, size_t n_fft) {
    std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
    const size_t m = std::min(in.size(), n_fft);
    for (size_t i = 0; i < m; ++i) buf[i] = {in[i], 0.0};
    fft_inplace(buf);
    buf.resize(n_fft / 2 + 1);
    return buf;
}

// Periodic Hann window of length n (the STFT analysis convention).
inline std::vector<double> hann_periodic(size_t n) {
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

// Symmetric Hann window of length n.
inline std::vector<double> hann_symmetric(size_t n) {
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    for (size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

// Modified Bessel function of the first kind, order zero (power series).
inline double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Symmetric Kaiser window of length n with shape parameter beta.
inline std::vector<double> kaiser_window(size_t n, double beta) {
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    const double denom = bessel_i0(beta);
    const double half = static_cast<double>(n - 1) / 2.0;
    for (size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) - half) / half;
        w[i] = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / denom;
    }
    return w;
}

// Kaiser-windowed lowpass FIR, unity DC gain. cutoff is normalized to
// Nyquist (1.0 == fs/2), numtaps odd for a symmetric linear-phase design.
inline std::vector<double> design_lowpass(size_t numtaps, double cutoff, double beta) {
    std::vector<double> h(numtaps);
    const auto w = kaiser_window(numtaps, beta);
    const double half = static_cast<double>(numtaps - 1) / 2.0;
    for (size_t i = 0; i < numtaps; ++i) {
        const double m = static_cast<double>(i) - half;
        const double arg = kPi * cutoff * m;
        const double sinc = (std::abs(arg) < 1e-12) ? 1.0 : std::sin(arg) / arg;
        h[i] = cutoff * sinc * w[i];
    }
    const double s = std::accumulate(h.begin(), h.end(), 0.0);
    for (auto& v : h) v /= s;
    return h;
}

namespace detail {
// Length of upfirdn(h, x, up, down) output.
inline int64_t upfirdn_len(int64_t len_h, int64_t len_x, int64_t up, int64_t down) {
    return ((len_x - 1) * up + len_h + down - 1) / down;
}
}  // namespace detail

// Polyphase rational-rate resampler (upsample by up, FIR lowpass, downsample
// by down). Filter: Kaiser(beta=5) windowed sinc, 20*max(up,down)+1 taps,
// centered so the output is delay-compensated. Output length is
// ceil(len * up / down).
inline std::vector<double> resample_poly(const std::vector<double>& x, int64_t up, int64_t down) {
    if (up <= 0 || down <= 0) throw DataError("resample: rates must be positive");
    const int64_t g = std::gcd(up, down);
    up /= g;
    down /= g;
    if (up == 1 && down == 1) return x;
    if (x.empty()) return {};

    const int64_t len_x = static_cast<int64_t>(x.size());
    const int64_t n_out = (len_x * up + down - 1) / down;
    const int64_t max_rate = std::max(up, down);
    const int64_t half_len = 10 * max_rate;
    std::vector<double> h = design_lowpass(static_cast<size_t>(2 * half_len + 1),
                                           1.0 / static_cast<double>(max_rate), 5.0);
    for (auto& v : h) v *= static_cast<double>(up);

    // Zero-pad the filter so the first kept output sample lands on the
    // group-delay-compensated position.
    int64_t n_pre_pad = down - half_len % down;
    int64_t n_post_pad = 0;
    const int64_t n_pre_remove = (half_len + n_pre_pad) / down;
    while (detail::upfirdn_len(static_cast<int64_t>(h.size()) + n_pre_pad + n_post_pad, len_x, up,
                               down) < n_out + n_pre_remove) {
        ++n_post_pad;
    }
    std::vector<double> hp(static_cast<size_t>(n_pre_pad), 0.0);
    hp.insert(hp.end(), h.begin(), h.end());
    hp.insert(hp.end(), static_cast<size_t>(n_post_pad), 0.0);
    const int64_t len_h = static_cast<int64_t>(hp.size());

    std::vector<double> out(static_cast<size_t>(n_out), 0.0);
    for (int64_t j = 0; j < n_out; ++j) {
        const int64_t t = (j + n_pre_remove) * down;
        // y[t] = sum_i x[i] * h[t - i*up] over valid i
        int64_t i_lo = (t - len_h + 1 + up - 1) / up;  // ceil((t - len_h + 1)/up)
        if (i_lo < 0) i_lo = 0;
        int64_t i_hi = t / up;
        if (i_hi > len_x - 1) i_hi = len_x - 1;
        double acc = 0.0;
        for (int64_t i = i_lo; i <= i_hi; ++i) acc += x[static_cast<size_t>(i)] * hp[static_cast<size_t>(t - i * up)];
        out[static_cast<size_t>(j)] = acc;
    }
    return out;
}

}  // namespace mfccgan
