// AudioClip plus WAV file I/O (16-bit PCM and 32-bit float) and the
// hop-alignment padding the generator's length law depends on.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mfccgan/common.hpp"
#include "mfccgan/dsp.hpp"

namespace mfccgan {

struct AudioClip {
    std::vector<float> samples;  // mono, amplitude in [-1, 1]
    int sample_rate = 22050;

    size_t length() const { return samples.size(); }
    double duration_seconds() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }
};

inline void validate(const AudioClip& clip) {
    if (clip.sample_rate <= 0) throw DataError("audio: sample_rate must be positive");
    for (float s : clip.samples)
        if (!std::isfinite(s)) throw DataError("audio: non-finite sample");
}

// Zero-pads the tail so the length becomes the smallest multiple of hop that
// is >= the input length.
inline AudioClip pad_to_hop(const AudioClip& clip, int64_t hop) {
    if (hop <= 0) throw DataError("pad_to_hop: hop must be positive");
    AudioClip out = clip;
    const int64_t len = static_cast<int64_t>(clip.samples.size());
    const int64_t padded = ceil_div(len, hop) * hop;
    out.samples.resize(static_cast<size_t>(padded), 0.0f);
    return out;
}

inline AudioClip resample_clip(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw DataError("resample: target rate must be positive");
    if (target_rate == clip.sample_rate) return clip;
    std::vector<double> x(clip.samples.begin(), clip.samples.end());
    std::vector<double> y = resample_poly(x, target_rate, clip.sample_rate);
    AudioClip out;
    out.sample_rate = target_rate;
    out.samples.assign(y.begin(), y.end());
    return out;
}

namespace wav_detail {

inline uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
inline uint16_t read_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace wav_detail

// Reads a PCM WAV file. Supported encodings: 16-bit integer PCM and 32-bit
// IEEE float, any channel count. Multichannel input is an error unless
// downmix is set, in which case channels are averaged. If target_rate is
// nonzero the clip is resampled to it.
inline AudioClip load_audio(const std::string& path, int target_rate = 0, bool downmix = false) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_audio: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError("load_audio: not a RIFF/WAVE file: " + path);

    using wav_detail::read_u16;
    using wav_detail::read_u32;

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        const size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) throw FormatError("load_audio: truncated chunk in " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw FormatError("load_audio: short fmt chunk");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == 0xFFFE && chunk_len >= 40)  // WAVE_FORMAT_EXTENSIBLE
                format = read_u16(bytes.data() + body + 24);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_off = body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }
    if (rate == 0 || channels == 0) throw FormatError("load_audio: missing fmt chunk in " + path);
    if (data_off == 0) throw FormatError("load_audio: missing data chunk in " + path);
    if (channels > 1 && !downmix)
        throw DataError("load_audio: " + path + " has " + std::to_string(channels) +
                        " channels; pass downmix to average them");

    const size_t bytes_per_sample = bits / 8;
    if (bytes_per_sample == 0) throw FormatError("load_audio: zero bit depth");
    const size_t n_total = data_len / (bytes_per_sample * channels);
    if (n_total == 0) throw DataError("load_audio: empty audio in " + path);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.resize(n_total);
    const uint8_t* d = bytes.data() + data_off;
    if (format == 1 && bits == 16) {
        for (size_t i = 0; i < n_total; ++i) {
            double acc = 0.0;
            for (size_t c = 0; c < channels; ++c) {
                int16_t v;
                std::memcpy(&v, d + (i * channels + c) * 2, 2);
                acc += static_cast<double>(v) / 32768.0;
            }
            clip.samples[i] = static_cast<float>(acc / channels);
        }
    } else if (format == 3 && bits == 32) {
        for (size_t i = 0; i < n_total; ++i) {
            double acc = 0.0;
            for (size_t c = 0; c < channels; ++c) {
                float v;
                std::memcpy(&v, d + (i * channels + c) * 4, 4);
                acc += v;
            }
            clip.samples[i] = static_cast<float>(acc / channels);
        }
    } else {
        throw FormatError("load_audio: unsupported encoding (format " + std::to_string(format) +
                          ", " + std::to_string(bits) + " bits) in " + path);
    }
    for (auto& s : clip.samples) s = std::clamp(s, -1.0f, 1.0f);
    if (target_rate > 0 && target_rate != clip.sample_rate) clip = resample_clip(clip, target_rate);
    return clip;
}

// Writes a mono WAV file. 16-bit PCM by default, 32-bit float otherwise.
inline void save_audio(const std::string& path, const AudioClip& clip, bool float32 = false) {
    validate(clip);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_audio: cannot open " + path + " for writing");

    const uint32_t n = static_cast<uint32_t>(clip.samples.size());
    const uint16_t bits = float32 ? 32 : 16;
    const uint16_t block = bits / 8;
    const uint32_t data_len = n * block;
    const uint32_t byte_rate = static_cast<uint32_t>(clip.sample_rate) * block;

    auto put_u32 = [&](uint32_t v) {
        const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                              static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    auto put_u16 = [&](uint16_t v) {
        const uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
        f.write(reinterpret_cast<const char*>(b), 2);
    };

    f.write("RIFF", 4);
    put_u32(36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(16);
    put_u16(float32 ? 3 : 1);
    put_u16(1);
    put_u32(static_cast<uint32_t>(clip.sample_rate));
    put_u32(byte_rate);
    put_u16(block);
    put_u16(bits);
    f.write("data", 4);
    put_u32(data_len);
    if (float32) {
        for (float s : clip.samples) {
            const float v = std::clamp(s, -1.0f, 1.0f);
            f.write(reinterpret_cast<const char*>(&v), 4);
        }
    } else {
        for (float s : clip.samples) {
            const double scaled = std::clamp(static_cast<double>(s), -1.0, 1.0) * 32767.0;
            const int16_t v = static_cast<int16_t>(std::lround(scaled));
            const uint8_t b[2] = {static_cast<uint8_t>(v & 0xFF),
                                  static_cast<uint8_t>((v >> 8) & 0xFF)};
            f.write(reinterpret_cast<const char*>(b), 2);
        }
    }
    if (!f) throw DataError("save_audio: write failed for " + path);
}

}  // namespace mfccgan
