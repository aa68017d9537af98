// Multi-scale discriminator: n_scales structurally identical networks, scale
// k judging the clip average-pooled k-1 times. Each network exposes its
// intermediate feature maps (for the feature-matching loss) and a raw score
// map (no sigmoid, as the hinge objective requires).
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfccgan/common.hpp"
#include "mfccgan/generator.hpp"
#include "mfccgan/layers.hpp"
#include "mfccgan/tensor.hpp"

namespace mfccgan {

struct DiscriminatorConfig {
    int n_scales = 3;
    int pool_kernel = 4;
    int pool_stride = 2;
    int pool_pad = 1;
    int base_channels = 16;
    int max_channels = 1024;
    int n_downsample = 4;
    int downsample_stride = 4;
    int downsample_kernel = 41;
    int input_kernel = 15;
    int penultimate_kernel = 5;
    int head_kernel = 3;
    int group_divisor = 4;  // groups of a downsampling conv = in_channels / group_divisor
    double leaky_slope = 0.2;
    bool weight_norm = true;

    // Feature maps per scale (everything except the score head).
    int feature_layers() const { return n_downsample + 2; }
};

inline void validate(const DiscriminatorConfig& c) {
    if (c.n_scales < 1) throw DataError("discriminator: n_scales must be >= 1");
    if (c.base_channels < 1 || c.max_channels < c.base_channels)
        throw DataError("discriminator: bad channel bounds");
    if (c.n_downsample < 1) throw DataError("discriminator: need downsampling layers");
    if (c.downsample_stride < 2) throw DataError("discriminator: downsample stride must be >= 2");
    if (c.downsample_kernel % 2 == 0 || c.input_kernel % 2 == 0 || c.penultimate_kernel % 2 == 0 ||
        c.head_kernel % 2 == 0)
        throw DataError("discriminator: kernels must be odd");
    if (c.group_divisor < 1) throw DataError("discriminator: group_divisor must be >= 1");
    if (c.pool_kernel < c.pool_stride) throw DataError("discriminator: pool kernel too small");
}

// Per-scale forward results: T intermediate feature maps plus the score map.
// The same shape doubles as the gradient container for the backward pass,
// where empty tensors mean "no gradient at this tap".
template <typename T>
struct ScaleFeatures {
    std::vector<Tensor<T>> features;
    Tensor<T> score;
};

template <typename T>
struct FeatureStack {
    std::vector<ScaleFeatures<T>> scales;
};

template <typename T>
class Discriminator {
public:
    explicit Discriminator(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
        validate(cfg_);
        for (int s = 0; s < cfg_.n_scales; ++s) scales_.push_back(build_scale(s));
        for (int s = 0; s + 1 < cfg_.n_scales; ++s)
            pools_.emplace_back(cfg_.pool_kernel, cfg_.pool_stride, cfg_.pool_pad);
    }

    const DiscriminatorConfig& config() const { return cfg_; }

    void init(uint64_t seed) { detail::init_params<T>(params(), seed); }
    void init_zero() { detail::zero_params<T>(params()); }

    // Shortest clip the full scale stack accepts; one score per this many
    // samples at scale 1.
    int64_t min_input_length() const {
        int64_t stride_product = 1;
        for (int i = 0; i < cfg_.n_downsample; ++i) stride_product *= cfg_.downsample_stride;
        int64_t pool_product = 1;
        for (int s = 0; s + 1 < cfg_.n_scales; ++s) pool_product *= cfg_.pool_stride;
        return stride_product * pool_product;
    }

    // audio: [1 x length]. Returns all scales' features and scores.
    FeatureStack<T> forward(const Tensor<T>& audio) {
        if (audio.channels != 1) throw DataError("discriminator: expected mono input");
        if (audio.length < min_input_length())
            throw DataError("discriminator: clip of " + std::to_string(audio.length) +
                            " samples is shorter than the receptive minimum " +
                            std::to_string(min_input_length()));
        FeatureStack<T> out;
        out.scales.resize(static_cast<size_t>(cfg_.n_scales));
        Tensor<T> cur = audio;
        for (int s = 0; s < cfg_.n_scales; ++s) {
            if (s > 0) cur = pools_[static_cast<size_t>(s - 1)].forward(cur);
            Tensor<T> x = cur;
            auto& blocks = scales_[static_cast<size_t>(s)];
            auto& dst = out.scales[static_cast<size_t>(s)];
            for (size_t b = 0; b + 1 < blocks.size(); ++b) {
                x = blocks[b]->forward(x);
                dst.features.push_back(x);
            }
            dst.score = blocks.back()->forward(x);
        }
        return out;
    }

    // grads mirrors the FeatureStack returned by the immediately preceding
    // forward call; empty tensors inject nothing. Returns dL/d(input audio).
    Tensor<T> backward(const FeatureStack<T>& grads) {
        if (grads.scales.size() != scales_.size())
            throw DataError("discriminator: gradient stack has wrong scale count");
        Tensor<T> pooled_grad;  // gradient flowing into the pooled input of the next scale up
        for (int s = cfg_.n_scales - 1; s >= 0; --s) {
            auto& blocks = scales_[static_cast<size_t>(s)];
            const auto& g = grads.scales[static_cast<size_t>(s)];
            if (!g.features.empty() && g.features.size() != blocks.size() - 1)
                throw DataError("discriminator: gradient feature count mismatch");
            Tensor<T> cur = g.score;
            for (size_t b = blocks.size(); b-- > 0;) {
                if (cur.size() == 0) {
                    // No gradient from above this block yet; seed with zeros.
                    cur = Tensor<T>(1, 0);
                }
                cur = blocks[b]->backward(cur);
                if (b > 0 && !g.features.empty() && g.features[b - 1].size() != 0) {
                    const Tensor<T>& inj = g.features[b - 1];
                    for (size_t i = 0; i < cur.data.size(); ++i) cur.data[i] += inj.data[i];
                }
            }
            if (pooled_grad.size() != 0) {
                for (size_t i = 0; i < cur.data.size(); ++i) cur.data[i] += pooled_grad.data[i];
            }
            if (s > 0) pooled_grad = pools_[static_cast<size_t>(s - 1)].backward(cur);
            else return cur;
        }
        return Tensor<T>();
    }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> out;
        for (auto& blocks : scales_)
            for (auto& b : blocks)
                for (auto* p : b->params()) out.push_back(p);
        return out;
    }
    void zero_grads() {
        for (auto* p : params()) p->zero_grad();
    }
    size_t param_count() {
        size_t n = 0;
        for (auto* p : params()) n += p->count();
        return n;
    }

    // Score-map length per scale for a clip of the given length.
    std::vector<int64_t> score_lengths(int64_t clip_len) const {
        std::vector<int64_t> out;
        int64_t len = clip_len;
        for (int s = 0; s < cfg_.n_scales; ++s) {
            if (s > 0) len = pools_[static_cast<size_t>(s - 1)].out_length(len);
            int64_t cur = len;
            for (const auto& b : scales_[static_cast<size_t>(s)]) cur = b->out_length(cur);
            out.push_back(cur);
        }
        return out;
    }

private:
    std::vector<std::unique_ptr<Sequential<T>>> build_scale(int scale_idx) {
        const std::string prefix = "d.scale" + std::to_string(scale_idx);
        std::vector<std::unique_ptr<Sequential<T>>> blocks;

        auto b0 = std::make_unique<Sequential<T>>();
        b0->add(std::make_unique<ReflectionPad1d<T>>((cfg_.input_kernel - 1) / 2));
        b0->add(std::make_unique<Conv1d<T>>(prefix + ".in", 1, cfg_.base_channels,
                                            cfg_.input_kernel, 1, 1, 1, 0, cfg_.weight_norm));
        b0->add(std::make_unique<LeakyReLU<T>>(static_cast<T>(cfg_.leaky_slope)));
        blocks.push_back(std::move(b0));

        int ch = cfg_.base_channels;
        for (int n = 0; n < cfg_.n_downsample; ++n) {
            const int nf = std::min(ch * cfg_.downsample_stride, cfg_.max_channels);
            const int groups = std::max(1, ch / cfg_.group_divisor);
            if (ch % groups != 0 || nf % groups != 0)
                throw DataError("discriminator: channel schedule incompatible with grouping");
            auto b = std::make_unique<Sequential<T>>();
            b->add(std::make_unique<Conv1d<T>>(prefix + ".down" + std::to_string(n), ch, nf,
                                               cfg_.downsample_kernel, cfg_.downsample_stride, 1,
                                               groups, (cfg_.downsample_kernel - 1) / 2,
                                               cfg_.weight_norm));
            b->add(std::make_unique<LeakyReLU<T>>(static_cast<T>(cfg_.leaky_slope)));
            blocks.push_back(std::move(b));
            ch = nf;
        }

        const int nf2 = std::min(ch * 2, cfg_.max_channels);
        auto bp = std::make_unique<Sequential<T>>();
        bp->add(std::make_unique<Conv1d<T>>(prefix + ".pre", ch, nf2, cfg_.penultimate_kernel, 1, 1,
                                            1, (cfg_.penultimate_kernel - 1) / 2, cfg_.weight_norm));
        bp->add(std::make_unique<LeakyReLU<T>>(static_cast<T>(cfg_.leaky_slope)));
        blocks.push_back(std::move(bp));

        auto bh = std::make_unique<Sequential<T>>();
        bh->add(std::make_unique<Conv1d<T>>(prefix + ".head", nf2, 1, cfg_.head_kernel, 1, 1, 1,
                                            (cfg_.head_kernel - 1) / 2, cfg_.weight_norm));
        blocks.push_back(std::move(bh));
        return blocks;
    }

    DiscriminatorConfig cfg_;
    std::vector<std::vector<std::unique_ptr<Sequential<T>>>> scales_;
    std::vector<AvgPool1d<T>> pools_;
};

// Runs the discriminator over an AudioClip.
template <typename T>
FeatureStack<T> discriminator_forward(Discriminator<T>& disc, const AudioClip& clip) {
    Tensor<T> x(1, static_cast<int64_t>(clip.samples.size()));
    for (size_t i = 0; i < clip.samples.size(); ++i) x.data[i] = static_cast<T>(clip.samples[i]);
    return disc.forward(x);
}

}  // namespace mfccgan
