// Uniform scalar quantization of MFCC frames and the .mfcg wire format.
//
// Stream layout (all integers little-endian):
//   offset 0   magic "MFCG" (4 bytes)
//   offset 4   version (1 byte, currently 1)
//   offset 5   n_mfcc (1 byte)
//   offset 6   bits_per_coeff (1 byte, 2..16)
//   offset 7   sample_rate (u32)
//   offset 11  hop_length (u16)
//   offset 13  n_frames (u32)
//   offset 17  per-coefficient quantizer minima (n_mfcc x f32)
//   ...        per-coefficient quantizer maxima (n_mfcc x f32)
//   payload    coefficient indices, bits_per_coeff bits each, row-major
//              [frame][coeff], packed LSB-first, zero-padded to a byte.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "mfccgan/common.hpp"
#include "mfccgan/mfcc.hpp"

namespace mfccgan {

inline constexpr char kStreamMagic[4] = {'M', 'F', 'C', 'G'};
inline constexpr uint8_t kStreamVersion = 1;

struct QuantSpec {
    std::vector<double> min;  // per coefficient; float32-exact values
    std::vector<double> max;
    int bits_per_coeff = 12;

    int n_coeff() const { return static_cast<int>(min.size()); }
    uint32_t levels() const { return 1u << bits_per_coeff; }
    double step(int i) const {
        return (max[static_cast<size_t>(i)] - min[static_cast<size_t>(i)]) /
               static_cast<double>(levels() - 1);
    }
};

inline void validate(const QuantSpec& spec) {
    if (spec.bits_per_coeff < 2 || spec.bits_per_coeff > 16)
        throw DataError("quantizer: bits_per_coeff must be in [2, 16]");
    if (spec.min.empty() || spec.min.size() != spec.max.size())
        throw DataError("quantizer: min/max vectors empty or mismatched");
    for (size_t i = 0; i < spec.min.size(); ++i)
        if (!(spec.min[i] < spec.max[i]))
            throw DataError("quantizer: require min < max for coefficient " + std::to_string(i));
}

struct QuantizedFrames {
    std::vector<uint32_t> values;  // row-major [n_frames][n_mfcc]
    int64_t n_frames = 0;
    int n_mfcc = 0;

    uint32_t& at(int64_t frame, int coeff) {
        return values[static_cast<size_t>(frame) * n_mfcc + coeff];
    }
    uint32_t at(int64_t frame, int coeff) const {
        return values[static_cast<size_t>(frame) * n_mfcc + coeff];
    }
};

// Per-coefficient extrema of the frame matrix, degenerate columns widened by
// +-1e-6. Values are rounded to float32 so the spec survives the wire format
// unchanged; if rounding collapses a range the bounds are nudged apart by one
// ulp at a time.
inline QuantSpec fit_quantizer(const MfccFrames& frames, int bits) {
    if (frames.n_frames < 1) throw DataError("fit_quantizer: empty frames");
    QuantSpec spec;
    spec.bits_per_coeff = bits;
    spec.min.assign(static_cast<size_t>(frames.n_mfcc), 0.0);
    spec.max.assign(static_cast<size_t>(frames.n_mfcc), 0.0);
    for (int c = 0; c < frames.n_mfcc; ++c) {
        double lo = frames.at(0, c), hi = frames.at(0, c);
        for (int64_t t = 1; t < frames.n_frames; ++t) {
            lo = std::min(lo, frames.at(t, c));
            hi = std::max(hi, frames.at(t, c));
        }
        if (lo == hi) {
            lo -= 1e-6;
            hi += 1e-6;
        }
        float flo = static_cast<float>(lo);
        float fhi = static_cast<float>(hi);
        while (!(flo < fhi)) {
            flo = std::nextafterf(flo, -std::numeric_limits<float>::infinity());
            fhi = std::nextafterf(fhi, std::numeric_limits<float>::infinity());
        }
        spec.min[static_cast<size_t>(c)] = flo;
        spec.max[static_cast<size_t>(c)] = fhi;
    }
    validate(spec);
    return spec;
}

// index = round((clamp(v, min, max) - min) / step), ties away from zero.
inline QuantizedFrames quantize(const MfccFrames& frames, const QuantSpec& spec) {
    validate(spec);
    if (frames.n_mfcc != spec.n_coeff())
        throw DataError("quantize: coefficient count mismatch");
    QuantizedFrames out;
    out.n_frames = frames.n_frames;
    out.n_mfcc = frames.n_mfcc;
    out.values.resize(static_cast<size_t>(frames.n_frames) * frames.n_mfcc);
    const uint32_t top = spec.levels() - 1;
    for (int c = 0; c < frames.n_mfcc; ++c) {
        const double lo = spec.min[static_cast<size_t>(c)];
        const double hi = spec.max[static_cast<size_t>(c)];
        const double step = spec.step(c);
        for (int64_t t = 0; t < frames.n_frames; ++t) {
            const double v = std::clamp(frames.at(t, c), lo, hi);
            const double idx = std::round((v - lo) / step);  // half away from zero
            out.at(t, c) = static_cast<uint32_t>(std::clamp(idx, 0.0, static_cast<double>(top)));
        }
    }
    return out;
}

// value = min + index * step. The returned frames carry a minimal config
// (rate/hop/count) reconstructed from meta handed in by the caller.
inline MfccFrames dequantize(const QuantizedFrames& indices, const QuantSpec& spec,
                             int sample_rate = 22050, int hop_length = 256) {
    validate(spec);
    if (indices.n_mfcc != spec.n_coeff())
        throw DataError("dequantize: coefficient count mismatch");
    MfccFrames out;
    out.n_frames = indices.n_frames;
    out.n_mfcc = indices.n_mfcc;
    out.config.sample_rate = sample_rate;
    out.config.hop_length = hop_length;
    out.config.n_mfcc = indices.n_mfcc;
    out.values.resize(static_cast<size_t>(indices.n_frames) * indices.n_mfcc);
    const uint32_t top = spec.levels() - 1;
    for (int64_t t = 0; t < indices.n_frames; ++t)
        for (int c = 0; c < indices.n_mfcc; ++c) {
            const uint32_t idx = indices.at(t, c);
            if (idx > top)
                throw DataError("dequantize: index " + std::to_string(idx) + " out of range");
            out.at(t, c) = spec.min[static_cast<size_t>(c)] + static_cast<double>(idx) * spec.step(c);
        }
    return out;
}

struct StreamMeta {
    int sample_rate = 22050;
    int hop_length = 256;
};

struct EncodedStream {
    StreamMeta meta;
    QuantSpec spec;
    QuantizedFrames indices;
};

namespace detail {

class BitWriter {
public:
    void put(uint32_t value, int bits) {
        for (int b = 0; b < bits; ++b) {
            if (bit_ == 0) bytes_.push_back(0);
            if ((value >> b) & 1u) bytes_.back() |= static_cast<uint8_t>(1u << bit_);
            bit_ = (bit_ + 1) % 8;
        }
    }
    std::vector<uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<uint8_t> bytes_;
    int bit_ = 0;
};

class BitReader {
public:
    BitReader(const uint8_t* data, size_t len) : data_(data), len_(len) {}
    uint32_t get(int bits) {
        uint32_t v = 0;
        for (int b = 0; b < bits; ++b) {
            const size_t byte = pos_ >> 3;
            if (byte >= len_) throw FormatError("bitstream: payload truncated");
            if ((data_[byte] >> (pos_ & 7)) & 1u) v |= (1u << b);
            ++pos_;
        }
        return v;
    }

private:
    const uint8_t* data_;
    size_t len_;
    size_t pos_ = 0;
};

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}
inline uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
inline uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
inline float get_f32(const uint8_t* p) {
    const uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

inline size_t stream_header_size(int n_mfcc) { return 17 + 8 * static_cast<size_t>(n_mfcc); }

inline size_t stream_payload_size(int64_t n_frames, int n_mfcc, int bits) {
    return static_cast<size_t>(ceil_div(n_frames * n_mfcc * bits, 8));
}

inline std::vector<uint8_t> pack(const QuantizedFrames& indices, const QuantSpec& spec,
                                 const StreamMeta& meta) {
    validate(spec);
    if (indices.n_mfcc != spec.n_coeff()) throw DataError("pack: coefficient count mismatch");
    if (indices.n_mfcc < 1 || indices.n_mfcc > 255)
        throw DataError("pack: n_mfcc must fit one byte");
    if (meta.sample_rate <= 0 || meta.hop_length <= 0 || meta.hop_length > 65535)
        throw DataError("pack: bad meta");
    if (indices.n_frames < 0 || indices.n_frames > UINT32_MAX)
        throw DataError("pack: frame count out of range");

    std::vector<uint8_t> out;
    out.reserve(stream_header_size(indices.n_mfcc) +
                stream_payload_size(indices.n_frames, indices.n_mfcc, spec.bits_per_coeff));
    out.insert(out.end(), kStreamMagic, kStreamMagic + 4);
    out.push_back(kStreamVersion);
    out.push_back(static_cast<uint8_t>(indices.n_mfcc));
    out.push_back(static_cast<uint8_t>(spec.bits_per_coeff));
    detail::put_u32(out, static_cast<uint32_t>(meta.sample_rate));
    detail::put_u16(out, static_cast<uint16_t>(meta.hop_length));
    detail::put_u32(out, static_cast<uint32_t>(indices.n_frames));
    for (int c = 0; c < indices.n_mfcc; ++c)
        detail::put_f32(out, static_cast<float>(spec.min[static_cast<size_t>(c)]));
    for (int c = 0; c < indices.n_mfcc; ++c)
        detail::put_f32(out, static_cast<float>(spec.max[static_cast<size_t>(c)]));

    detail::BitWriter bw;
    const uint32_t top = spec.levels() - 1;
    for (int64_t t = 0; t < indices.n_frames; ++t)
        for (int c = 0; c < indices.n_mfcc; ++c) {
            const uint32_t v = indices.at(t, c);
            if (v > top) throw DataError("pack: index out of range");
            bw.put(v, spec.bits_per_coeff);
        }
    const auto payload = bw.take();
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

inline EncodedStream unpack(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 17) throw FormatError("unpack: stream shorter than fixed header");
    if (std::memcmp(bytes.data(), kStreamMagic, 4) != 0)
        throw FormatError("unpack: bad magic");
    if (bytes[4] != kStreamVersion)
        throw FormatError("unpack: unsupported version " + std::to_string(bytes[4]));
    const int n_mfcc = bytes[5];
    const int bits = bytes[6];
    if (n_mfcc < 1) throw FormatError("unpack: n_mfcc must be positive");
    if (bits < 2 || bits > 16) throw FormatError("unpack: bits_per_coeff out of range");
    EncodedStream s;
    s.meta.sample_rate = static_cast<int>(detail::get_u32(bytes.data() + 7));
    s.meta.hop_length = detail::get_u16(bytes.data() + 11);
    const int64_t n_frames = detail::get_u32(bytes.data() + 13);
    if (s.meta.sample_rate <= 0 || s.meta.hop_length <= 0)
        throw FormatError("unpack: bad sample_rate/hop_length");

    const size_t header = stream_header_size(n_mfcc);
    const size_t payload = stream_payload_size(n_frames, n_mfcc, bits);
    if (bytes.size() != header + payload)
        throw FormatError("unpack: stream length " + std::to_string(bytes.size()) +
                          " does not match header+payload " + std::to_string(header + payload));

    s.spec.bits_per_coeff = bits;
    s.spec.min.resize(static_cast<size_t>(n_mfcc));
    s.spec.max.resize(static_cast<size_t>(n_mfcc));
    for (int c = 0; c < n_mfcc; ++c)
        s.spec.min[static_cast<size_t>(c)] = detail::get_f32(bytes.data() + 17 + 4 * c);
    for (int c = 0; c < n_mfcc; ++c)
        s.spec.max[static_cast<size_t>(c)] = detail::get_f32(bytes.data() + 17 + 4 * (n_mfcc + c));
    validate(s.spec);

    s.indices.n_frames = n_frames;
    s.indices.n_mfcc = n_mfcc;
    s.indices.values.resize(static_cast<size_t>(n_frames) * n_mfcc);
    detail::BitReader br(bytes.data() + header, payload);
    for (int64_t t = 0; t < n_frames; ++t)
        for (int c = 0; c < n_mfcc; ++c) s.indices.at(t, c) = br.get(bits);
    return s;
}

// Payload-only bits per second: n_mfcc * bits * sample_rate / hop (floor).
inline int64_t nominal_bitrate(int n_mfcc, int bits, int sample_rate, int hop) {
    if (n_mfcc <= 0 || bits <= 0 || sample_rate <= 0 || hop <= 0)
        throw DataError("nominal_bitrate: all arguments must be positive");
    return static_cast<int64_t>(n_mfcc) * bits * sample_rate / hop;
}

}  // namespace mfccgan
