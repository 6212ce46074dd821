#pragma once

#include <random>

#include "alcs/sparse_format.hpp"
#include "alcs/tensor.hpp"

namespace alcs::testing {

inline FeatureMap random_map(int c, int h, int w, std::mt19937_64& rng) {
    FeatureMap m(c, h, w);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (float& v : m.values) v = dist(rng);
    return m;
}

// Random kernel with group-structured sparsity: each (group, column) unit is
// kept with probability `density`; kept units get random values, with an
// occasional interior zero so stored columns are not fully dense.
inline DenseKernel random_group_sparse_kernel(int oc, int ic, int kh, int kw, int g,
                                              double density, std::mt19937_64& rng) {
    DenseKernel k(oc, ic, kh, kw);
    std::uniform_real_distribution<float> value(-1.0f, 1.0f);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int cols = k.column_space();
    for (const IndexRange& range : group_partition(oc, g)) {
        for (int col = 0; col < cols; ++col) {
            if (unit(rng) >= density) continue;
            auto [c, r, s] = offset_to_coords(static_cast<std::uint32_t>(col), ic, kh, kw);
            bool any = false;
            for (int n = range.begin; n < range.end; ++n) {
                float v = unit(rng) < 0.15 ? 0.0f : value(rng);
                if (v != 0.0f) any = true;
                k.at(n, c, r, s) = v;
            }
            if (!any) k.at(range.begin, c, r, s) = 1.0f;  // kept unit must not vanish
        }
    }
    return k;
}

}  // namespace alcs::testing
