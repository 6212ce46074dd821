#include "alcs/sparse_conv.hpp"

#include <algorithm>
#include <string>
#include <thread>

namespace alcs {

namespace {

// Output tile width of the vectorized kernel: group_size x kTileW partial
// sums live in vector accumulators.
constexpr int kTileW = 8;

void check_conv_args(const FeatureMap& input, int kernel_ic, const ConvGeometry& geom) {
    input.validate();
    if (kernel_ic != input.channels)
        throw ShapeError("kernel expects " + std::to_string(kernel_ic) +
                         " input channels, feature map has " + std::to_string(input.channels));
    if (geom.stride < 1) throw ShapeError("stride must be >= 1");
    if (geom.pad < 0) throw ShapeError("pad must be >= 0");
}

struct ColumnCoords {
    std::vector<int> c, r, s;

    void decode(const GroupBlock& block, const GroupedCsrKernel& kernel) {
        const std::size_t n = block.offsets.size();
        c.resize(n);
        r.resize(n);
        s.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            auto [cc, rr, ss] =
                offset_to_coords(block.offsets[j], kernel.in_channels, kernel.kernel_h,
                                 kernel.kernel_w);
            c[j] = cc;
            r[j] = rr;
            s[j] = ss;
        }
    }
};

}  // namespace

int conv_out_extent(int in, int k, int stride, int pad) {
    const int span = in + 2 * pad - k;
    if (span < 0 || stride < 1)
        throw ShapeError("kernel does not fit: input " + std::to_string(in) + ", kernel " +
                         std::to_string(k) + ", pad " + std::to_string(pad));
    return span / stride + 1;
}

FeatureMap conv_dense_reference(const FeatureMap& input, const DenseKernel& kernel,
                                const ConvGeometry& geom, const std::vector<float>* bias) {
    kernel.validate();
    check_conv_args(input, kernel.in_channels, geom);
    if (bias && !bias->empty() && bias->size() != static_cast<std::size_t>(kernel.out_channels))
        throw ShapeError("bias length must equal out_channels");

    const int o_h = conv_out_extent(input.height, kernel.kernel_h, geom.stride, geom.pad);
    const int o_w = conv_out_extent(input.width, kernel.kernel_w, geom.stride, geom.pad);
    FeatureMap out(kernel.out_channels, o_h, o_w);

    for (int n = 0; n < kernel.out_channels; ++n) {
        const float b = (bias && !bias->empty()) ? (*bias)[n] : 0.0f;
        for (int oh = 0; oh < o_h; ++oh) {
            for (int ow = 0; ow < o_w; ++ow) {
                float acc = 0.0f;
                for (int c = 0; c < kernel.in_channels; ++c) {
                    for (int r = 0; r < kernel.kernel_h; ++r) {
                        const int ih = oh * geom.stride - geom.pad + r;
                        if (ih < 0 || ih >= input.height) continue;
                        for (int s = 0; s < kernel.kernel_w; ++s) {
                            const int iw = ow * geom.stride - geom.pad + s;
                            if (iw < 0 || iw >= input.width) continue;
                            acc += kernel.at(n, c, r, s) * input.at(c, ih, iw);
                        }
                    }
                }
                out.at(n, oh, ow) = b + acc;
            }
        }
    }
    return out;
}

FeatureMap conv_sparse(const FeatureMap& input, const GroupedCsrKernel& kernel,
                       const ConvGeometry& geom, const std::vector<float>* bias,
                       ConvStats* stats) {
    kernel.validate();
    check_conv_args(input, kernel.in_channels, geom);
    if (bias && !bias->empty() && bias->size() != static_cast<std::size_t>(kernel.out_channels))
        throw ShapeError("bias length must equal out_channels");

    const int o_h = conv_out_extent(input.height, kernel.kernel_h, geom.stride, geom.pad);
    const int o_w = conv_out_extent(input.width, kernel.kernel_w, geom.stride, geom.pad);
    FeatureMap out(kernel.out_channels, o_h, o_w);

    ColumnCoords coords;
    std::vector<float> acc(static_cast<std::size_t>(std::max(kernel.group_size, 1)));

    for (std::size_t gi = 0; gi < kernel.groups.size(); ++gi) {
        const GroupBlock& block = kernel.groups[gi];
        const int rows = kernel.group_rows(gi);
        const int n0 = static_cast<int>(gi) * kernel.group_size;
        coords.decode(block, kernel);
        const std::size_t ncols = block.offsets.size();

        for (int oh = 0; oh < o_h; ++oh) {
            for (int ow = 0; ow < o_w; ++ow) {
                std::fill(acc.begin(), acc.begin() + rows, 0.0f);
                for (std::size_t j = 0; j < ncols; ++j) {
                    const int ih = oh * geom.stride - geom.pad + coords.r[j];
                    const int iw = ow * geom.stride - geom.pad + coords.s[j];
                    const bool in_range =
                        ih >= 0 && ih < input.height && iw >= 0 && iw < input.width;
                    const float x = in_range ? input.at(coords.c[j], ih, iw) : 0.0f;
                    const float* w = block.values.data() + j * rows;
                    for (int lane = 0; lane < rows; ++lane) acc[lane] += w[lane] * x;
                    if (stats) stats->macs += rows;
                }
                for (int lane = 0; lane < rows; ++lane) {
                    const float b = (bias && !bias->empty()) ? (*bias)[n0 + lane] : 0.0f;
                    out.at(n0 + lane, oh, ow) = b + acc[lane];
                }
            }
        }
    }
    return out;
}

namespace {

#if defined(__GNUC__) || defined(__clang__)
#define ALCS_VEC_EXT 1
typedef float f32x4 __attribute__((vector_size(16)));
#else
struct f32x4 {
    float lane[4];
    float operator[](int i) const { return lane[i]; }
};
#endif

// One group, one chunk of <= 4 adjacent output channels, all output rows in
// [oh_begin, oh_end). Column values enter a 4-lane register; a tile of output
// positions is accumulated per column before moving on.
void sparse_group_chunk(const FeatureMap& input, const GroupedCsrKernel& kernel,
                        const ConvGeometry& geom, const std::vector<float>* bias,
                        const GroupBlock& block, const ColumnCoords& coords, int rows, int n0,
                        int chunk_lo, int oh_begin, int oh_end, int o_w, FeatureMap& out) {
    const int lanes = std::min(4, rows - chunk_lo);
    const std::size_t ncols = block.offsets.size();
    const int stride = geom.stride;
    const int pad = geom.pad;

    for (int oh = oh_begin; oh < oh_end; ++oh) {
        for (int ow0 = 0; ow0 < o_w; ow0 += kTileW) {
            const int tile = std::min(kTileW, o_w - ow0);
#ifdef ALCS_VEC_EXT
            f32x4 acc[kTileW] = {};
            for (std::size_t j = 0; j < ncols; ++j) {
                const int ih = oh * stride - pad + coords.r[j];
                if (ih < 0 || ih >= input.height) continue;
                f32x4 w = {};
                const float* col = block.values.data() + j * rows + chunk_lo;
                for (int lane = 0; lane < lanes; ++lane) w[lane] = col[lane];
                const float* in_row = input.values.data() + input.index(coords.c[j], ih, 0);
                const int iw0 = ow0 * stride - pad + coords.s[j];
                if (iw0 >= 0 && iw0 + (tile - 1) * stride < input.width) {
                    for (int t = 0; t < tile; ++t) acc[t] += w * in_row[iw0 + t * stride];
                } else {
                    for (int t = 0; t < tile; ++t) {
                        const int iw = iw0 + t * stride;
                        const float x = (iw >= 0 && iw < input.width) ? in_row[iw] : 0.0f;
                        acc[t] += w * x;
                    }
                }
            }
            for (int t = 0; t < tile; ++t) {
                for (int lane = 0; lane < lanes; ++lane) {
                    const int n = n0 + chunk_lo + lane;
                    const float b = (bias && !bias->empty()) ? (*bias)[n] : 0.0f;
                    out.at(n, oh, ow0 + t) = b + acc[t][lane];
                }
            }
#else
            float acc[kTileW][4] = {};
            for (std::size_t j = 0; j < ncols; ++j) {
                const int ih = oh * stride - pad + coords.r[j];
                if (ih < 0 || ih >= input.height) continue;
                const float* col = block.values.data() + j * rows + chunk_lo;
                const float* in_row = input.values.data() + input.index(coords.c[j], ih, 0);
                const int iw0 = ow0 * stride - pad + coords.s[j];
                for (int t = 0; t < tile; ++t) {
                    const int iw = iw0 + t * stride;
                    const float x = (iw >= 0 && iw < input.width) ? in_row[iw] : 0.0f;
                    for (int lane = 0; lane < lanes; ++lane) acc[t][lane] += col[lane] * x;
                }
            }
            for (int t = 0; t < tile; ++t) {
                for (int lane = 0; lane < lanes; ++lane) {
                    const int n = n0 + chunk_lo + lane;
                    const float b = (bias && !bias->empty()) ? (*bias)[n] : 0.0f;
                    out.at(n, oh, ow0 + t) = b + acc[t][lane];
                }
            }
#endif
        }
    }
}

void run_rows(const FeatureMap& input, const GroupedCsrKernel& kernel, const ConvGeometry& geom,
              const std::vector<float>* bias, int oh_begin, int oh_end, int o_w,
              FeatureMap& out) {
    ColumnCoords coords;
    for (std::size_t gi = 0; gi < kernel.groups.size(); ++gi) {
        const GroupBlock& block = kernel.groups[gi];
        const int rows = kernel.group_rows(gi);
        const int n0 = static_cast<int>(gi) * kernel.group_size;
        coords.decode(block, kernel);
        for (int chunk_lo = 0; chunk_lo < rows; chunk_lo += 4)
            sparse_group_chunk(input, kernel, geom, bias, block, coords, rows, n0, chunk_lo,
                               oh_begin, oh_end, o_w, out);
    }
}

}  // namespace

FeatureMap conv_sparse_vectorized(const FeatureMap& input, const GroupedCsrKernel& kernel,
                                  const ConvGeometry& geom, const std::vector<float>* bias,
                                  int threads) {
    kernel.validate();
    check_conv_args(input, kernel.in_channels, geom);
    if (bias && !bias->empty() && bias->size() != static_cast<std::size_t>(kernel.out_channels))
        throw ShapeError("bias length must equal out_channels");

    const int o_h = conv_out_extent(input.height, kernel.kernel_h, geom.stride, geom.pad);
    const int o_w = conv_out_extent(input.width, kernel.kernel_w, geom.stride, geom.pad);
    FeatureMap out(kernel.out_channels, o_h, o_w);

    if (threads <= 1 || o_h < 2) {
        run_rows(input, kernel, geom, bias, 0, o_h, o_w, out);
        return out;
    }

    const int workers = std::min(threads, o_h);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int begin = o_h * w / workers;
        const int end = o_h * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            run_rows(input, kernel, geom, bias, begin, end, o_w, out);
        });
    }
    for (std::thread& t : pool) t.join();
    return out;
}

}  // namespace alcs
