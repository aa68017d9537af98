// MFCC analysis frontend: magnitude STFT -> mel filterbank -> log -> DCT-II.
//
// Framing is centered with reflection padding of n_fft/2 on each side, so a
// clip whose length is a multiple of hop_length yields exactly
// length/hop_length frames. That exact count is what keeps the analysis
// aligned with the generator's 256x upsampling.
#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfccgan/audio.hpp"
#include "mfccgan/common.hpp"
#include "mfccgan/dsp.hpp"

namespace mfccgan {

struct AnalysisConfig {
    int sample_rate = 22050;
    int n_fft = 1024;
    int win_length = 1024;
    int hop_length = 256;  // must equal the generator's upsample product
    int n_mels = 80;
    int n_mfcc = 36;       // one of 13, 24, 36
    double fmin = 0.0;
    double fmax = 11025.0;
    double log_floor = 1e-5;
};

inline void validate(const AnalysisConfig& c) {
    if (c.sample_rate <= 0) throw DataError("analysis: sample_rate must be positive");
    if (!is_power_of_two(static_cast<size_t>(c.n_fft)))
        throw DataError("analysis: n_fft must be a power of two");
    if (c.win_length <= 0 || c.win_length > c.n_fft)
        throw DataError("analysis: require 0 < win_length <= n_fft");
    if (c.hop_length <= 0) throw DataError("analysis: hop_length must be positive");
    if (c.n_mfcc != 13 && c.n_mfcc != 24 && c.n_mfcc != 36)
        throw DataError("analysis: n_mfcc must be 13, 24 or 36");
    if (c.n_mels < c.n_mfcc) throw DataError("analysis: n_mfcc must not exceed n_mels");
    if (!(c.fmin < c.fmax && c.fmax <= c.sample_rate / 2.0))
        throw DataError("analysis: require fmin < fmax <= sample_rate/2");
    if (!(c.log_floor > 0.0)) throw DataError("analysis: log_floor must be positive");
}

struct MfccFrames {
    std::vector<double> values;  // row-major [n_frames][n_mfcc]
    int64_t n_frames = 0;
    int n_mfcc = 0;
    AnalysisConfig config;

    double& at(int64_t frame, int coeff) {
        return values[static_cast<size_t>(frame) * n_mfcc + coeff];
    }
    double at(int64_t frame, int coeff) const {
        return values[static_cast<size_t>(frame) * n_mfcc + coeff];
    }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over FFT bins 0..n_fft/2, peak weight 1.
// Returned matrix is row-major [n_mels][n_fft/2 + 1].
inline std::vector<double> mel_filterbank(int sample_rate, int n_fft, int n_mels, double fmin,
                                          double fmax) {
    const int n_bins = n_fft / 2 + 1;
    std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    for (int m = 0; m < n_mels + 2; ++m)
        edges[static_cast<size_t>(m)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / static_cast<double>(n_mels + 1));

    std::vector<double> fb(static_cast<size_t>(n_mels) * n_bins, 0.0);
    for (int m = 0; m < n_mels; ++m) {
        const double left = edges[static_cast<size_t>(m)];
        const double center = edges[static_cast<size_t>(m) + 1];
        const double right = edges[static_cast<size_t>(m) + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / n_fft;
            double w = 0.0;
            if (f >= left && f <= center && center > left)
                w = (f - left) / (center - left);
            else if (f > center && f <= right && right > center)
                w = (right - f) / (right - center);
            fb[static_cast<size_t>(m) * n_bins + k] = w;
        }
    }
    return fb;
}

// Orthonormal DCT-II matrix, row-major [n_out][n_in].
inline std::vector<double> dct_matrix(int n_out, int n_in) {
    std::vector<double> m(static_cast<size_t>(n_out) * n_in);
    const double scale0 = std::sqrt(1.0 / n_in);
    const double scale = std::sqrt(2.0 / n_in);
    for (int j = 0; j < n_out; ++j)
        for (int i = 0; i < n_in; ++i)
            m[static_cast<size_t>(j) * n_in + i] =
                (j == 0 ? scale0 : scale) * std::cos(kPi * (i + 0.5) * j / n_in);
    return m;
}

namespace detail {
// Reflection (no repeated edge sample), valid for any index.
inline int64_t reflect_index(int64_t i, int64_t len) {
    if (len == 1) return 0;
    const int64_t period = 2 * (len - 1);
    int64_t m = i % period;
    if (m < 0) m += period;
    if (m >= len) m = period - m;
    return m;
}
}  // namespace detail

// Extracts MFCC frames. Preconditions: config valid, clip length a positive
// multiple of hop_length (use pad_to_hop first).
inline MfccFrames mfcc_extract(const AudioClip& clip, const AnalysisConfig& config) {
    validate(config);
    if (clip.sample_rate != config.sample_rate)
        throw DataError("mfcc: clip rate " + std::to_string(clip.sample_rate) +
                        " does not match config rate " + std::to_string(config.sample_rate));
    const int64_t len = static_cast<int64_t>(clip.samples.size());
    if (len < config.hop_length) throw DataError("mfcc: clip shorter than one hop");
    if (len % config.hop_length != 0)
        throw DataError("mfcc: clip length must be a multiple of hop_length; call pad_to_hop");

    const int64_t n_frames = len / config.hop_length;
    const int n_bins = config.n_fft / 2 + 1;
    const auto window = hann_periodic(static_cast<size_t>(config.win_length));
    const auto fb = mel_filterbank(config.sample_rate, config.n_fft, config.n_mels, config.fmin,
                                   config.fmax);
    const auto dct = dct_matrix(config.n_mfcc, config.n_mels);
    // Window centered inside the FFT frame when win_length < n_fft.
    const int win_off = (config.n_fft - config.win_length) / 2;

    MfccFrames out;
    out.n_frames = n_frames;
    out.n_mfcc = config.n_mfcc;
    out.config = config;
    out.values.assign(static_cast<size_t>(n_frames) * config.n_mfcc, 0.0);

    std::vector<double> frame(static_cast<size_t>(config.n_fft));
    std::vector<double> mel(static_cast<size_t>(config.n_mels));
    for (int64_t t = 0; t < n_frames; ++t) {
        const int64_t center = t * config.hop_length;
        for (int i = 0; i < config.n_fft; ++i) {
            const int64_t src = detail::reflect_index(center - config.n_fft / 2 + i, len);
            const double w = (i >= win_off && i < win_off + config.win_length)
                                 ? window[static_cast<size_t>(i - win_off)]
                                 : 0.0;
            frame[static_cast<size_t>(i)] = static_cast<double>(clip.samples[static_cast<size_t>(src)]) * w;
        }
        const auto spec = rfft(frame, static_cast<size_t>(config.n_fft));
        for (int m = 0; m < config.n_mels; ++m) {
            double acc = 0.0;
            const double* row = &fb[static_cast<size_t>(m) * n_bins];
            for (int k = 0; k < n_bins; ++k) acc += row[k] * std::abs(spec[static_cast<size_t>(k)]);
            mel[static_cast<size_t>(m)] = std::log(acc + config.log_floor);
        }
        for (int j = 0; j < config.n_mfcc; ++j) {
            double acc = 0.0;
            const double* row = &dct[static_cast<size_t>(j) * config.n_mels];
            for (int m = 0; m < config.n_mels; ++m) acc += row[m] * mel[static_cast<size_t>(m)];
            out.at(t, j) = acc;
        }
    }
    return out;
}

// Flat key=value serialization of AnalysisConfig, one pair per line. This is
// the text document checked into experiment directories.
inline std::string analysis_config_to_kv(const AnalysisConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "sample_rate=" << c.sample_rate << "\n"
       << "n_fft=" << c.n_fft << "\n"
       << "win_length=" << c.win_length << "\n"
       << "hop_length=" << c.hop_length << "\n"
       << "n_mels=" << c.n_mels << "\n"
       << "n_mfcc=" << c.n_mfcc << "\n"
       << "fmin=" << c.fmin << "\n"
       << "fmax=" << c.fmax << "\n"
       << "log_floor=" << c.log_floor << "\n";
    return os.str();
}

inline AnalysisConfig analysis_config_from_kv(const std::string& text) {
    AnalysisConfig c;
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("analysis config: bad line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto geti = [&](const std::string& k, int dflt) {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : std::stoi(it->second);
    };
    auto getd = [&](const std::string& k, double dflt) {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : std::stod(it->second);
    };
    c.sample_rate = geti("sample_rate", c.sample_rate);
    c.n_fft = geti("n_fft", c.n_fft);
    c.win_length = geti("win_length", c.win_length);
    c.hop_length = geti("hop_length", c.hop_length);
    c.n_mels = geti("n_mels", c.n_mels);
    c.n_mfcc = geti("n_mfcc", c.n_mfcc);
    c.fmin = getd("fmin", c.fmin);
    c.fmax = getd("fmax", c.fmax);
    c.log_floor = getd("log_floor", c.log_floor);
    validate(c);
    return c;
}

}  // namespace mfccgan
