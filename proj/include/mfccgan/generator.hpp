// Waveform generator: MFCC frames in, raw audio out, upsampled by the
// product of the transposed-convolution ratios (256 for the codec configs).
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfccgan/audio.hpp"
#include "mfccgan/common.hpp"
#include "mfccgan/layers.hpp"
#include "mfccgan/mfcc.hpp"
#include "mfccgan/tensor.hpp"

namespace mfccgan {

struct GeneratorConfig {
    int in_channels = 36;
    int base_channels = 512;
    std::vector<int> upsample_ratios = {8, 8, 2, 2};
    std::vector<int> residual_dilations = {1, 3, 9};
    double leaky_slope = 0.2;
    int input_kernel = 7;
    int residual_kernel = 3;
    int output_kernel = 7;
    bool weight_norm = true;
    bool noise_channel = false;  // when set, one noise row is appended to the input

    int upsample_product() const {
        int p = 1;
        for (int r : upsample_ratios) p *= r;
        return p;
    }
};

inline void validate(const GeneratorConfig& c) {
    if (c.in_channels < 1) throw DataError("generator: in_channels must be positive");
    if (c.upsample_ratios.empty()) throw DataError("generator: need at least one upsample ratio");
    for (int r : c.upsample_ratios)
        if (r < 1) throw DataError("generator: upsample ratios must be >= 1");
    if (c.base_channels < (1 << c.upsample_ratios.size()))
        throw DataError("generator: base_channels too small for the halving schedule");
    if (c.input_kernel % 2 == 0 || c.output_kernel % 2 == 0 || c.residual_kernel % 2 == 0)
        throw DataError("generator: kernels must be odd");
    for (int d : c.residual_dilations)
        if (d < 1) throw DataError("generator: dilations must be >= 1");
    if (c.leaky_slope < 0.0) throw DataError("generator: leaky_slope must be >= 0");
}

// Dilated-conv residual block: x -> leaky/pad/conv(k,d)/leaky/conv(1) + 1x1 shortcut.
template <typename T>
class ResidualBlock : public Layer<T> {
public:
    ResidualBlock(const std::string& name, int dim, int kernel, int dilation, double slope,
                  bool weight_norm) {
        block_.add(std::make_unique<LeakyReLU<T>>(static_cast<T>(slope)));
        block_.add(std::make_unique<ReflectionPad1d<T>>(static_cast<int64_t>(dilation) * (kernel - 1) / 2));
        block_.add(std::make_unique<Conv1d<T>>(name + ".conv", dim, dim, kernel, 1, dilation, 1, 0,
                                               weight_norm));
        block_.add(std::make_unique<LeakyReLU<T>>(static_cast<T>(slope)));
        block_.add(std::make_unique<Conv1d<T>>(name + ".out", dim, dim, 1, 1, 1, 1, 0, weight_norm));
        shortcut_ = std::make_unique<Conv1d<T>>(name + ".shortcut", dim, dim, 1, 1, 1, 1, 0,
                                                weight_norm);
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        Tensor<T> y = block_.forward(x);
        const Tensor<T> s = shortcut_->forward(x);
        for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += s.data[i];
        return y;
    }
    Tensor<T> backward(const Tensor<T>& g) override {
        Tensor<T> dx = block_.backward(g);
        const Tensor<T> ds = shortcut_->backward(g);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
        return dx;
    }
    std::vector<Param<T>*> params() override {
        auto out = block_.params();
        for (auto* p : shortcut_->params()) out.push_back(p);
        return out;
    }
    int64_t out_length(int64_t n) const override { return n; }

private:
    Sequential<T> block_;
    std::unique_ptr<Conv1d<T>> shortcut_;
};

namespace detail {

// Fills conv kernels with N(0, 0.02^2) draws and biases with zero. For
// weight-normalized layers the raw draw becomes v and g takes the per-row
// norm, so the effective weight equals the draw exactly.
template <typename T>
void init_params(std::vector<Param<T>*> params, uint64_t seed) {
    Rng rng(seed);
    for (size_t i = 0; i < params.size(); ++i) {
        Param<T>& p = *params[i];
        if (p.name.ends_with(".bias")) {
            std::fill(p.value.begin(), p.value.end(), T(0));
        } else if (p.name.ends_with(".weight_g")) {
            continue;  // filled from the preceding weight_v below
        } else {
            for (auto& v : p.value) v = static_cast<T>(0.02 * rng.normal());
            if (i + 1 < params.size() && params[i + 1]->name.ends_with(".weight_g")) {
                Param<T>& g = *params[i + 1];
                const size_t rows = g.count();
                const size_t slice = p.count() / rows;
                for (size_t r = 0; r < rows; ++r) {
                    T sq = T(0);
                    for (size_t k = 0; k < slice; ++k) {
                        const T v = p.value[r * slice + k];
                        sq += v * v;
                    }
                    g.value[r] = std::sqrt(sq);
                }
            }
        }
    }
}

template <typename T>
void zero_params(std::vector<Param<T>*> params) {
    for (auto* p : params) std::fill(p->value.begin(), p->value.end(), T(0));
}

}  // namespace detail

template <typename T>
class Generator {
public:
    explicit Generator(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
        validate(cfg_);
        const int in = cfg_.in_channels + (cfg_.noise_channel ? 1 : 0);
        int ch = cfg_.base_channels;
        int stage = 0;
        net_.add(std::make_unique<ReflectionPad1d<T>>((cfg_.input_kernel - 1) / 2));
        net_.add(std::make_unique<Conv1d<T>>("g.in", in, ch, cfg_.input_kernel, 1, 1, 1, 0,
                                             cfg_.weight_norm));
        for (int r : cfg_.upsample_ratios) {
            const std::string prefix = "g.up" + std::to_string(stage);
            net_.add(std::make_unique<LeakyReLU<T>>(static_cast<T>(cfg_.leaky_slope)));
            net_.add(std::make_unique<ConvTranspose1d<T>>(prefix, ch, ch / 2, 2 * r, r,
                                                          (r + 1) / 2, r % 2, cfg_.weight_norm));
            ch /= 2;
            int b = 0;
            for (int d : cfg_.residual_dilations) {
                net_.add(std::make_unique<ResidualBlock<T>>(
                    prefix + ".res" + std::to_string(b++), ch, cfg_.residual_kernel, d,
                    cfg_.leaky_slope, cfg_.weight_norm));
            }
            ++stage;
        }
        net_.add(std::make_unique<LeakyReLU<T>>(static_cast<T>(cfg_.leaky_slope)));
        net_.add(std::make_unique<ReflectionPad1d<T>>((cfg_.output_kernel - 1) / 2));
        net_.add(std::make_unique<Conv1d<T>>("g.out", ch, 1, cfg_.output_kernel, 1, 1, 1, 0,
                                             cfg_.weight_norm));
        net_.add(std::make_unique<TanhLayer<T>>());
    }

    const GeneratorConfig& config() const { return cfg_; }

    void init(uint64_t seed) { detail::init_params<T>(params(), seed); }
    void init_zero() { detail::zero_params<T>(params()); }

    int64_t output_length(int64_t n_frames) const { return n_frames * cfg_.upsample_product(); }

    // frames: [in_channels x n_frames]; noise: [1 x n_frames] when the config
    // carries a noise channel, ignored otherwise.
    Tensor<T> forward(const Tensor<T>& frames, const Tensor<T>* noise = nullptr) {
        if (frames.channels != cfg_.in_channels)
            throw DataError("generator: expected " + std::to_string(cfg_.in_channels) +
                            " input channels, got " + std::to_string(frames.channels));
        if (!cfg_.noise_channel) return net_.forward(frames);
        Tensor<T> joint(frames.channels + 1, frames.length);
        std::copy(frames.data.begin(), frames.data.end(), joint.data.begin());
        if (noise) {
            if (noise->channels != 1 || noise->length != frames.length)
                throw DataError("generator: noise must be [1 x n_frames]");
            std::copy(noise->data.begin(), noise->data.end(), joint.row(frames.channels));
        }
        return net_.forward(joint);
    }

    // Returns the gradient with respect to the input frames (noise row
    // stripped when present).
    Tensor<T> backward(const Tensor<T>& grad_out) {
        Tensor<T> g = net_.backward(grad_out);
        if (!cfg_.noise_channel) return g;
        Tensor<T> trimmed(g.channels - 1, g.length);
        std::copy(g.data.begin(), g.data.begin() + trimmed.data.size(), trimmed.data.begin());
        return trimmed;
    }

    std::vector<Param<T>*> params() { return net_.params(); }
    void zero_grads() {
        for (auto* p : params()) p->zero_grad();
    }
    size_t param_count() {
        size_t n = 0;
        for (auto* p : params()) n += p->count();
        return n;
    }

private:
    GeneratorConfig cfg_;
    Sequential<T> net_;
};

// [n_frames][n_mfcc] row-major frames -> [n_mfcc x n_frames] tensor.
template <typename T>
Tensor<T> frames_to_tensor(const MfccFrames& frames) {
    Tensor<T> out(frames.n_mfcc, frames.n_frames);
    for (int64_t t = 0; t < frames.n_frames; ++t)
        for (int c = 0; c < frames.n_mfcc; ++c)
            out.at(c, t) = static_cast<T>(frames.at(t, c));
    return out;
}

// Runs the codec decode path: frames in, clip out, length exactly
// n_frames * upsample_product at the frames' sample rate.
template <typename T>
AudioClip generator_forward(Generator<T>& gen, const MfccFrames& frames) {
    const Tensor<T> x = frames_to_tensor<T>(frames);
    const Tensor<T> y = gen.forward(x);
    AudioClip clip;
    clip.sample_rate = frames.config.sample_rate;
    clip.samples.resize(static_cast<size_t>(y.length));
    for (int64_t t = 0; t < y.length; ++t) clip.samples[static_cast<size_t>(t)] = static_cast<float>(y.at(0, t));
    return clip;
}

}  // namespace mfccgan
