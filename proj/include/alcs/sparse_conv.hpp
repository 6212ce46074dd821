#pragma once

#include <cstdint>
#include <vector>

#include "alcs/sparse_format.hpp"
#include "alcs/tensor.hpp"

namespace alcs {

struct ConvGeometry {
    int stride = 1;
    int pad = 0;
};

// floor((in + 2*pad - k) / stride) + 1; throws ShapeError when < 1.
int conv_out_extent(int in, int k, int stride, int pad);

struct ConvStats {
    std::int64_t macs = 0;  // multiply-accumulates executed
};

// Dense direct convolution, the test oracle. Out-of-range input reads under
// padding contribute zero. Accumulation order is fixed: c, then r, then s.
FeatureMap conv_dense_reference(const FeatureMap& input, const DenseKernel& kernel,
                                const ConvGeometry& geom,
                                const std::vector<float>* bias = nullptr);

// Scalar grouped-CSR convolution: iterates only over stored columns. Per
// output position, columns are accumulated in stored order, so results are
// deterministic and match the vectorized path's per-element order.
FeatureMap conv_sparse(const FeatureMap& input, const GroupedCsrKernel& kernel,
                       const ConvGeometry& geom, const std::vector<float>* bias = nullptr,
                       ConvStats* stats = nullptr);

// Same contract as conv_sparse. Processes one kernel column (group_size
// values) against a tile of output positions per inner iteration with wide
// multiply-accumulate; tail groups and tail tiles use partial lanes.
// threads > 1 splits output rows across workers with disjoint writes.
FeatureMap conv_sparse_vectorized(const FeatureMap& input, const GroupedCsrKernel& kernel,
                                  const ConvGeometry& geom,
                                  const std::vector<float>* bias = nullptr, int threads = 1);

}  // namespace alcs
