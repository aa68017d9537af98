// Shared error types, RNG, and small utilities used across the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mfccgan {

// Malformed or unreadable input data (bad WAV, bad stream, config violation).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A byte stream or container that fails structural validation.
class FormatError : public DataError {
public:
    explicit FormatError(const std::string& msg) : DataError(msg) {}
};

// External subprocess failures (missing tool, unparseable output).
class ToolError : public std::runtime_error {
public:
    explicit ToolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss. Carries the last checkpoint that was
// written before the blow-up so a run can be resumed or inspected.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, std::string last_good_checkpoint, int64_t step)
        : std::runtime_error(msg),
          last_good_checkpoint(std::move(last_good_checkpoint)),
          step(step) {}
    std::string last_good_checkpoint;  // empty if none was written yet
    int64_t step = 0;
};

// Deterministic RNG. std::mt19937 output is pinned by the standard; the
// distributions are hand-rolled here because std::normal_distribution is
// implementation-defined and would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(static_cast<uint32_t>(seed)) {}

    // Uniform in [0, 1).
    double uniform() {
        return (engine_() >> 5) * (1.0 / 134217728.0) / 2.0 +
               (engine_() >> 6) * (1.0 / 67108864.0 / 134217728.0);
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        // Rejection sampling keeps the draw unbiased.
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            uint64_t v = (static_cast<uint64_t>(engine_()) << 32) | engine_();
            if (v < limit) return v % n;
        }
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::mt19937& engine() { return engine_; }

private:
    std::mt19937 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Deterministic Fisher-Yates shuffle (std::shuffle is not pinned across
// standard library implementations).
template <typename Vec>
void shuffle(Vec& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

inline int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

// Floor division for a possibly negative numerator and positive denominator.
inline int64_t floor_div(int64_t a, int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace mfccgan
