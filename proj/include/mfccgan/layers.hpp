// 1-D neural network layers with hand-written backward passes.
//
// Every layer caches what its backward pass needs during forward, so the
// usage pattern is strictly forward-then-backward per sample. Parameter
// gradients accumulate across calls until zero_grad.
#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mfccgan/common.hpp"
#include "mfccgan/tensor.hpp"

namespace mfccgan {

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual int64_t out_length(int64_t in_len) const = 0;
};

template <typename T>
class LeakyReLU : public Layer<T> {
public:
    explicit LeakyReLU(T slope) : slope_(slope) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        input_ = x;
        Tensor<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : slope_ * v;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& g) override {
        Tensor<T> dx = g;
        for (size_t i = 0; i < dx.data.size(); ++i)
            if (!(input_.data[i] > T(0))) dx.data[i] *= slope_;
        return dx;
    }
    int64_t out_length(int64_t n) const override { return n; }

private:
    T slope_;
    Tensor<T> input_;
};

template <typename T>
class TanhLayer : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) override {
        output_ = x;
        for (auto& v : output_.data) v = std::tanh(v);
        return output_;
    }
    Tensor<T> backward(const Tensor<T>& g) override {
        Tensor<T> dx = g;
        for (size_t i = 0; i < dx.data.size(); ++i)
            dx.data[i] *= T(1) - output_.data[i] * output_.data[i];
        return dx;
    }
    int64_t out_length(int64_t n) const override { return n; }

private:
    Tensor<T> output_;
};

namespace detail {
// Reflection without edge repetition, defined for every index and length >= 1.
inline int64_t reflect(int64_t i, int64_t len) {
    if (len == 1) return 0;
    const int64_t period = 2 * (len - 1);
    int64_t m = i % period;
    if (m < 0) m += period;
    return m < len ? m : period - m;
}
}  // namespace detail

template <typename T>
class ReflectionPad1d : public Layer<T> {
public:
    explicit ReflectionPad1d(int64_t pad) : pad_(pad) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        in_len_ = x.length;
        Tensor<T> y(x.channels, x.length + 2 * pad_);
        for (int c = 0; c < x.channels; ++c) {
            const T* src = x.row(c);
            T* dst = y.row(c);
            for (int64_t t = 0; t < y.length; ++t)
                dst[t] = src[detail::reflect(t - pad_, x.length)];
        }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& g) override {
        Tensor<T> dx(g.channels, in_len_);
        for (int c = 0; c < g.channels; ++c) {
            const T* gs = g.row(c);
            T* dst = dx.row(c);
            for (int64_t t = 0; t < g.length; ++t)
                dst[detail::reflect(t - pad_, in_len_)] += gs[t];
        }
        return dx;
    }
    int64_t out_length(int64_t n) const override { return n + 2 * pad_; }

private:
    int64_t pad_;
    int64_t in_len_ = 0;
};

// Average pooling that excludes zero padding from the divisor.
template <typename T>
class AvgPool1d : public Layer<T> {
public:
    AvgPool1d(int64_t kernel, int64_t stride, int64_t pad)
        : kernel_(kernel), stride_(stride), pad_(pad) {}

    int64_t out_length(int64_t n) const override {
        const int64_t span = n + 2 * pad_ - kernel_;
        return span < 0 ? 0 : span / stride_ + 1;
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        in_len_ = x.length;
        const int64_t out_len = out_length(x.length);
        if (out_len <= 0) throw DataError("avg_pool: input too short");
        Tensor<T> y(x.channels, out_len);
        for (int c = 0; c < x.channels; ++c) {
            const T* src = x.row(c);
            T* dst = y.row(c);
            for (int64_t t = 0; t < out_len; ++t) {
                const int64_t start = t * stride_ - pad_;
                T acc = T(0);
                int64_t n = 0;
                for (int64_t k = 0; k < kernel_; ++k) {
                    const int64_t s = start + k;
                    if (s >= 0 && s < x.length) {
                        acc += src[s];
                        ++n;
                    }
                }
                dst[t] = acc / static_cast<T>(n);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& g) override {
        Tensor<T> dx(g.channels, in_len_);
        for (int c = 0; c < g.channels; ++c) {
            const T* gs = g.row(c);
            T* dst = dx.row(c);
            for (int64_t t = 0; t < g.length; ++t) {
                const int64_t start = t * stride_ - pad_;
                int64_t n = 0;
                for (int64_t k = 0; k < kernel_; ++k) {
                    const int64_t s = start + k;
                    if (s >= 0 && s < in_len_) ++n;
                }
                const T share = gs[t] / static_cast<T>(n);
                for (int64_t k = 0; k < kernel_; ++k) {
                    const int64_t s = start + k;
                    if (s >= 0 && s < in_len_) dst[s] += share;
                }
            }
        }
        return dx;
    }

private:
    int64_t kernel_, stride_, pad_;
    int64_t in_len_ = 0;
};

namespace detail {

// Weight normalization: w = g * v / ||v||, norms taken per slice of the
// leading dimension. slice = elements per output row of the kernel tensor.
template <typename T>
void wn_effective(const std::vector<T>& v, const std::vector<T>& g, size_t rows, size_t slice,
                  std::vector<T>& w, std::vector<T>& norms) {
    w.resize(v.size());
    norms.resize(rows);
    for (size_t r = 0; r < rows; ++r) {
        T sq = T(0);
        const T* vr = v.data() + r * slice;
        for (size_t i = 0; i < slice; ++i) sq += vr[i] * vr[i];
        T n = std::sqrt(sq);
        if (n < T(1e-12)) n = T(1e-12);
        norms[r] = n;
        const T scale = g[r] / n;
        T* wr = w.data() + r * slice;
        for (size_t i = 0; i < slice; ++i) wr[i] = vr[i] * scale;
    }
}

// Chains dL/dw into dL/dv and dL/dg.
template <typename T>
void wn_backward(const std::vector<T>& v, const std::vector<T>& g, const std::vector<T>& norms,
                 const std::vector<T>& dw, size_t rows, size_t slice, std::vector<T>& dv,
                 std::vector<T>& dg) {
    for (size_t r = 0; r < rows; ++r) {
        const T* vr = v.data() + r * slice;
        const T* dwr = dw.data() + r * slice;
        T dot = T(0);
        for (size_t i = 0; i < slice; ++i) dot += dwr[i] * vr[i];
        const T n = norms[r];
        dg[r] += dot / n;
        const T a = g[r] / n;
        const T b = g[r] * dot / (n * n * n);
        T* dvr = dv.data() + r * slice;
        for (size_t i = 0; i < slice; ++i) dvr[i] += a * dwr[i] - b * vr[i];
    }
}

}  // namespace detail

// Grouped, strided, dilated 1-D convolution with explicit zero padding and
// optional weight normalization. Kernel tensor shape [out, in/groups, k].
template <typename T>
class Conv1d : public Layer<T> {
public:
    Conv1d(std::string name, int in_ch, int out_ch, int64_t kernel, int64_t stride = 1,
           int64_t dilation = 1, int groups = 1, int64_t pad = 0, bool weight_norm = true)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          kernel_(kernel),
          stride_(stride),
          dilation_(dilation),
          groups_(groups),
          pad_(pad),
          weight_norm_(weight_norm) {
        if (in_ch % groups != 0 || out_ch % groups != 0)
            throw DataError("conv1d: channels not divisible by groups");
        v_.resize({out_ch, in_ch / groups, kernel}, name + (weight_norm ? ".weight_v" : ".weight"));
        if (weight_norm_) g_.resize({out_ch}, name + ".weight_g");
        bias_.resize({out_ch}, name + ".bias");
    }

    int64_t out_length(int64_t n) const override {
        const int64_t span = n + 2 * pad_ - (dilation_ * (kernel_ - 1) + 1);
        return span < 0 ? 0 : span / stride_ + 1;
    }

    std::vector<Param<T>*> params() override {
        if (weight_norm_) return {&v_, &g_, &bias_};
        return {&v_, &bias_};
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.channels != in_ch_) throw DataError("conv1d: channel mismatch");
        const int64_t out_len = out_length(x.length);
        if (out_len <= 0) throw DataError("conv1d: input too short");
        input_ = x;
        const std::vector<T>& w = effective_weight();

        Tensor<T> y(out_ch_, out_len);
        const int in_per_g = in_ch_ / groups_;
        const int out_per_g = out_ch_ / groups_;
        for (int oc = 0; oc < out_ch_; ++oc) {
            T* yr = y.row(oc);
            for (int64_t t = 0; t < out_len; ++t) yr[t] = bias_.value[static_cast<size_t>(oc)];
            const int g = oc / out_per_g;
            for (int icg = 0; icg < in_per_g; ++icg) {
                const T* xr = x.row(g * in_per_g + icg);
                const T* wr = w.data() + (static_cast<size_t>(oc) * in_per_g + icg) * kernel_;
                for (int64_t k = 0; k < kernel_; ++k) {
                    const T wk = wr[k];
                    const int64_t off = k * dilation_ - pad_;
                    // valid t: 0 <= t*stride + off < len
                    int64_t t0 = off < 0 ? ceil_div(-off, stride_) : 0;
                    int64_t t1 = floor_div(x.length - 1 - off, stride_);  // inclusive
                    if (t1 > out_len - 1) t1 = out_len - 1;
                    const T* src = xr + t0 * stride_ + off;
                    for (int64_t t = t0; t <= t1; ++t, src += stride_) yr[t] += wk * *src;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        const std::vector<T>& w = effective_weight();
        const int in_per_g = in_ch_ / groups_;
        const int out_per_g = out_ch_ / groups_;
        Tensor<T> dx(in_ch_, input_.length);
        std::vector<T> dw(w.size(), T(0));

        for (int oc = 0; oc < out_ch_; ++oc) {
            const T* gr = gout.row(oc);
            T& db = bias_.grad[static_cast<size_t>(oc)];
            for (int64_t t = 0; t < gout.length; ++t) db += gr[t];
            const int g = oc / out_per_g;
            for (int icg = 0; icg < in_per_g; ++icg) {
                const int ic = g * in_per_g + icg;
                const T* xr = input_.row(ic);
                T* dxr = dx.row(ic);
                const size_t wbase = (static_cast<size_t>(oc) * in_per_g + icg) * kernel_;
                for (int64_t k = 0; k < kernel_; ++k) {
                    const int64_t off = k * dilation_ - pad_;
                    int64_t t0 = off < 0 ? ceil_div(-off, stride_) : 0;
                    int64_t t1 = floor_div(input_.length - 1 - off, stride_);
                    if (t1 > gout.length - 1) t1 = gout.length - 1;
                    const T wk = w[wbase + static_cast<size_t>(k)];
                    T acc = T(0);
                    const T* src = xr + t0 * stride_ + off;
                    T* dst = dxr + t0 * stride_ + off;
                    for (int64_t t = t0; t <= t1; ++t, src += stride_, dst += stride_) {
                        acc += gr[t] * *src;
                        *dst += wk * gr[t];
                    }
                    dw[wbase + static_cast<size_t>(k)] += acc;
                }
            }
        }
        chain_weight_grad(dw);
        return dx;
    }

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

private:
    const std::vector<T>& effective_weight() {
        if (!weight_norm_) return v_.value;
        detail::wn_effective(v_.value, g_.value, static_cast<size_t>(out_ch_),
                             v_.count() / static_cast<size_t>(out_ch_), w_scratch_, norms_);
        return w_scratch_;
    }
    void chain_weight_grad(const std::vector<T>& dw) {
        if (!weight_norm_) {
            for (size_t i = 0; i < dw.size(); ++i) v_.grad[i] += dw[i];
            return;
        }
        detail::wn_backward(v_.value, g_.value, norms_, dw, static_cast<size_t>(out_ch_),
                            v_.count() / static_cast<size_t>(out_ch_), v_.grad, g_.grad);
    }

    int in_ch_, out_ch_;
    int64_t kernel_, stride_, dilation_;
    int groups_;
    int64_t pad_;
    bool weight_norm_;
    Param<T> v_, g_, bias_;
    Tensor<T> input_;
    std::vector<T> w_scratch_, norms_;
};

// Transposed 1-D convolution. Kernel tensor shape [in, out, k]; weight norm
// slices follow the leading (input-channel) dimension.
template <typename T>
class ConvTranspose1d : public Layer<T> {
public:
    ConvTranspose1d(std::string name, int in_ch, int out_ch, int64_t kernel, int64_t stride,
                    int64_t pad, int64_t output_pad, bool weight_norm = true)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          kernel_(kernel),
          stride_(stride),
          pad_(pad),
          output_pad_(output_pad),
          weight_norm_(weight_norm) {
        v_.resize({in_ch, out_ch, kernel}, name + (weight_norm ? ".weight_v" : ".weight"));
        if (weight_norm_) g_.resize({in_ch}, name + ".weight_g");
        bias_.resize({out_ch}, name + ".bias");
    }

    int64_t out_length(int64_t n) const override {
        return (n - 1) * stride_ - 2 * pad_ + kernel_ + output_pad_;
    }

    std::vector<Param<T>*> params() override {
        if (weight_norm_) return {&v_, &g_, &bias_};
        return {&v_, &bias_};
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.channels != in_ch_) throw DataError("conv_transpose1d: channel mismatch");
        const int64_t out_len = out_length(x.length);
        if (out_len <= 0) throw DataError("conv_transpose1d: input too short");
        input_ = x;
        const std::vector<T>& w = effective_weight();

        Tensor<T> y(out_ch_, out_len);
        for (int oc = 0; oc < out_ch_; ++oc) {
            T* yr = y.row(oc);
            const T b = bias_.value[static_cast<size_t>(oc)];
            for (int64_t t = 0; t < out_len; ++t) yr[t] = b;
        }
        for (int ic = 0; ic < in_ch_; ++ic) {
            const T* xr = x.row(ic);
            for (int oc = 0; oc < out_ch_; ++oc) {
                T* yr = y.row(oc);
                const T* wr = w.data() + (static_cast<size_t>(ic) * out_ch_ + oc) * kernel_;
                for (int64_t k = 0; k < kernel_; ++k) {
                    const T wk = wr[k];
                    const int64_t off = k - pad_;
                    // y[s*stride + off] += w * x[s] for valid outputs
                    int64_t s0 = off < 0 ? ceil_div(-off, stride_) : 0;
                    int64_t s1 = floor_div(out_len - 1 - off, stride_);
                    if (s1 > x.length - 1) s1 = x.length - 1;
                    T* dst = yr + s0 * stride_ + off;
                    for (int64_t s = s0; s <= s1; ++s, dst += stride_) *dst += wk * xr[s];
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        const std::vector<T>& w = effective_weight();
        Tensor<T> dx(in_ch_, input_.length);
        std::vector<T> dw(w.size(), T(0));

        for (int oc = 0; oc < out_ch_; ++oc) {
            const T* gr = gout.row(oc);
            T& db = bias_.grad[static_cast<size_t>(oc)];
            for (int64_t t = 0; t < gout.length; ++t) db += gr[t];
        }
        for (int ic = 0; ic < in_ch_; ++ic) {
            const T* xr = input_.row(ic);
            T* dxr = dx.row(ic);
            for (int oc = 0; oc < out_ch_; ++oc) {
                const T* gr = gout.row(oc);
                const size_t wbase = (static_cast<size_t>(ic) * out_ch_ + oc) * kernel_;
                for (int64_t k = 0; k < kernel_; ++k) {
                    const int64_t off = k - pad_;
                    int64_t s0 = off < 0 ? ceil_div(-off, stride_) : 0;
                    int64_t s1 = floor_div(gout.length - 1 - off, stride_);
                    if (s1 > input_.length - 1) s1 = input_.length - 1;
                    const T wk = w[wbase + static_cast<size_t>(k)];
                    T acc = T(0);
                    const T* src = gr + s0 * stride_ + off;
                    for (int64_t s = s0; s <= s1; ++s, src += stride_) {
                        acc += *src * xr[s];
                        dxr[s] += wk * *src;
                    }
                    dw[wbase + static_cast<size_t>(k)] += acc;
                }
            }
        }
        chain_weight_grad(dw);
        return dx;
    }

private:
    const std::vector<T>& effective_weight() {
        if (!weight_norm_) return v_.value;
        detail::wn_effective(v_.value, g_.value, static_cast<size_t>(in_ch_),
                             v_.count() / static_cast<size_t>(in_ch_), w_scratch_, norms_);
        return w_scratch_;
    }
    void chain_weight_grad(const std::vector<T>& dw) {
        if (!weight_norm_) {
            for (size_t i = 0; i < dw.size(); ++i) v_.grad[i] += dw[i];
            return;
        }
        detail::wn_backward(v_.value, g_.value, norms_, dw, static_cast<size_t>(in_ch_),
                            v_.count() / static_cast<size_t>(in_ch_), v_.grad, g_.grad);
    }

    int in_ch_, out_ch_;
    int64_t kernel_, stride_, pad_, output_pad_;
    bool weight_norm_;
    Param<T> v_, g_, bias_;
    Tensor<T> input_;
    std::vector<T> w_scratch_, norms_;
};

// Runs a list of layers in order.
template <typename T>
class Sequential : public Layer<T> {
public:
    Sequential() = default;

    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    Tensor<T> forward(const Tensor<T>& x) override {
        Tensor<T> cur = x;
        for (auto& l : layers_) cur = l->forward(cur);
        return cur;
    }
    Tensor<T> backward(const Tensor<T>& g) override {
        Tensor<T> cur = g;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }
    std::vector<Param<T>*> params() override {
        std::vector<Param<T>*> out;
        for (auto& l : layers_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }
    int64_t out_length(int64_t n) const override {
        for (const auto& l : layers_) n = l->out_length(n);
        return n;
    }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace mfccgan
