#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "alcs/common.hpp"

namespace alcs {

// CHW feature map, w fastest.
template <typename T>
struct BasicFeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> values;

    BasicFeatureMap() = default;
    BasicFeatureMap(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t index(int c, int h, int w) const {
        return (static_cast<std::size_t>(c) * height + h) * width + w;
    }
    T at(int c, int h, int w) const { return values[index(c, h, w)]; }
    T& at(int c, int h, int w) { return values[index(c, h, w)]; }
    std::size_t size() const { return values.size(); }

    void validate() const {
        if (channels < 1 || height < 1 || width < 1)
            throw ShapeError("feature map dimensions must all be >= 1");
        if (values.size() != static_cast<std::size_t>(channels) * height * width)
            throw ShapeError("feature map value count does not match dimensions");
    }
};

using FeatureMap = BasicFeatureMap<float>;

// Convolution kernel, (n, c, r, s) with s fastest. Fully-connected weights
// reuse this shape as (out_features, in_features, 1, 1).
template <typename T>
struct BasicDenseKernel {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    std::vector<T> values;

    BasicDenseKernel() = default;
    BasicDenseKernel(int oc, int ic, int kh, int kw, T fill = T(0))
        : out_channels(oc),
          in_channels(ic),
          kernel_h(kh),
          kernel_w(kw),
          values(static_cast<std::size_t>(oc) * ic * kh * kw, fill) {}

    // Number of flattened (c, r, s) positions; the column axis of the
    // matrix-product view of convolution.
    int column_space() const { return in_channels * kernel_h * kernel_w; }

    std::size_t index(int n, int c, int r, int s) const {
        return ((static_cast<std::size_t>(n) * in_channels + c) * kernel_h + r) * kernel_w + s;
    }
    T at(int n, int c, int r, int s) const { return values[index(n, c, r, s)]; }
    T& at(int n, int c, int r, int s) { return values[index(n, c, r, s)]; }
    std::size_t size() const { return values.size(); }

    void validate() const {
        if (out_channels < 1 || in_channels < 1 || kernel_h < 1 || kernel_w < 1)
            throw ShapeError("kernel dimensions must all be >= 1");
        if (values.size() !=
            static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w)
            throw ShapeError("kernel value count does not match dimensions");
    }

    bool operator==(const BasicDenseKernel&) const = default;
};

using DenseKernel = BasicDenseKernel<float>;

}  // namespace alcs
