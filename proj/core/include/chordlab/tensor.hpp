#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "chordlab/errors.hpp"

namespace chordlab {

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major host buffer. float for training, double for the
// gradient-check path.
template <typename T>
struct HostTensor {
    Shape shape;
    std::vector<T> data;

    HostTensor() = default;
    HostTensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != numel(shape))
            throw ShapeMismatch("tensor data size does not match shape " + shape_str(shape));
    }

    static HostTensor zeros(Shape s) {
        std::vector<T> d(static_cast<std::size_t>(numel(s)), T(0));
        return HostTensor(std::move(s), std::move(d));
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    template <typename U>
    HostTensor<U> cast() const {
        std::vector<U> out(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<U>(data[i]);
        return HostTensor<U>(shape, std::move(out));
    }
};

struct NamedTensor {
    std::string name;
    HostTensor<float> tensor;
};

// A batch of integer token windows, row-major [batch, len, feats].
struct TokenBatch {
    int batch = 0;
    int len = 0;
    int feats = 1;
    std::vector<std::int32_t> tokens;

    std::int32_t at(int b, int t, int f = 0) const {
        return tokens[(static_cast<std::size_t>(b) * len + t) * feats + f];
    }
    std::int32_t& at(int b, int t, int f = 0) {
        return tokens[(static_cast<std::size_t>(b) * len + t) * feats + f];
    }
};

}  // namespace chordlab
