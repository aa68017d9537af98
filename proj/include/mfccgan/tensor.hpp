// Minimal dense [channels x time] tensor used by the model code.
#pragma once

#include <cstdint>
#include <vector>

#include "mfccgan/common.hpp"

namespace mfccgan {

template <typename T>
struct Tensor {
    int channels = 0;
    int64_t length = 0;
    std::vector<T> data;  // row-major [channels][length]

    Tensor() = default;
    Tensor(int c, int64_t len) : channels(c), length(len), data(static_cast<size_t>(c) * len, T(0)) {}

    static Tensor zeros(int c, int64_t len) { return Tensor(c, len); }

    T* row(int c) { return data.data() + static_cast<size_t>(c) * length; }
    const T* row(int c) const { return data.data() + static_cast<size_t>(c) * length; }
    T& at(int c, int64_t t) { return data[static_cast<size_t>(c) * length + t]; }
    T at(int c, int64_t t) const { return data[static_cast<size_t>(c) * length + t]; }
    size_t size() const { return data.size(); }
};

// One learnable array with its gradient accumulator.
template <typename T>
struct Param {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<T> value;
    std::vector<T> grad;

    void resize(std::vector<int64_t> s, std::string n) {
        shape = std::move(s);
        name = std::move(n);
        int64_t total = 1;
        for (int64_t d : shape) total *= d;
        value.assign(static_cast<size_t>(total), T(0));
        grad.assign(static_cast<size_t>(total), T(0));
    }
    size_t count() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

}  // namespace mfccgan
