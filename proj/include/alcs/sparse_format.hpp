#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "alcs/tensor.hpp"

namespace alcs {

struct IndexRange {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

// Contiguous ranges of output channels, each of length group_size except a
// possible shorter tail when out_channels is not a multiple.
std::vector<IndexRange> group_partition(int out_channels, int group_size);

// One group of adjacent output channels. A column is stored iff at least one
// of its entries is nonzero; stored columns keep all entries verbatim,
// contiguously in output-channel order.
struct GroupBlock {
    std::vector<std::uint32_t> offsets;  // flattened (c, r, s) indices, strictly increasing
    std::vector<float> values;           // nnz_cols() * rows, column-major within the group

    std::uint32_t nnz_cols() const { return static_cast<std::uint32_t>(offsets.size()); }

    bool operator==(const GroupBlock&) const = default;
};

struct GroupedCsrKernel {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int group_size = 0;
    std::vector<GroupBlock> groups;

    int column_space() const { return in_channels * kernel_h * kernel_w; }

    // Effective row count of a group: group_size, or the tail size for the
    // final group.
    int group_rows(std::size_t gi) const;

    std::int64_t stored_values() const;

    // Throws ShapeError on malformed structure (offsets not strictly
    // increasing, offsets out of range, payload length mismatches).
    void validate() const;

    bool operator==(const GroupedCsrKernel&) const = default;
};

GroupedCsrKernel compress(const DenseKernel& dense, int group_size);
DenseKernel decompress(const GroupedCsrKernel& sparse);

// offset = (c * kernel_h + r) * kernel_w + s
std::uint32_t coords_to_offset(int c, int r, int s, int kernel_h, int kernel_w);

// Inverse of the flattening; throws ShapeError on out-of-range offsets.
std::array<int, 3> offset_to_coords(std::uint32_t offset, int in_channels, int kernel_h,
                                    int kernel_w);

}  // namespace alcs
