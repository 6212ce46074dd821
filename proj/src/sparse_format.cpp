#include "alcs/sparse_format.hpp"

#include <string>

namespace alcs {

std::vector<IndexRange> group_partition(int out_channels, int group_size) {
    if (out_channels < 1) throw ShapeError("group_partition: out_channels must be >= 1");
    if (group_size < 1) throw ShapeError("group_partition: group_size must be >= 1");
    std::vector<IndexRange> ranges;
    ranges.reserve((out_channels + group_size - 1) / group_size);
    for (int begin = 0; begin < out_channels; begin += group_size) {
        ranges.push_back({begin, std::min(begin + group_size, out_channels)});
    }
    return ranges;
}

int GroupedCsrKernel::group_rows(std::size_t gi) const {
    int begin = static_cast<int>(gi) * group_size;
    return std::min(group_size, out_channels - begin);
}

std::int64_t GroupedCsrKernel::stored_values() const {
    std::int64_t total = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        total += static_cast<std::int64_t>(groups[gi].nnz_cols()) * group_rows(gi);
    return total;
}

void GroupedCsrKernel::validate() const {
    if (out_channels < 1 || in_channels < 1 || kernel_h < 1 || kernel_w < 1)
        throw ShapeError("grouped kernel dimensions must all be >= 1");
    if (group_size < 1) throw ShapeError("grouped kernel group_size must be >= 1");
    std::size_t expected_groups =
        static_cast<std::size_t>((out_channels + group_size - 1) / group_size);
    if (groups.size() != expected_groups)
        throw ShapeError("grouped kernel has " + std::to_string(groups.size()) +
                         " groups, expected " + std::to_string(expected_groups));
    const std::uint32_t cols = static_cast<std::uint32_t>(column_space());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const GroupBlock& block = groups[gi];
        std::int64_t prev = -1;
        for (std::uint32_t off : block.offsets) {
            if (off >= cols)
                throw ShapeError("column offset " + std::to_string(off) +
                                 " out of range [0, " + std::to_string(cols) + ")");
            if (static_cast<std::int64_t>(off) <= prev)
                throw ShapeError("column offsets must be strictly increasing");
            prev = off;
        }
        if (block.values.size() !=
            static_cast<std::size_t>(block.nnz_cols()) * group_rows(gi))
            throw ShapeError("group value payload length does not match nnz_cols * rows");
    }
}

GroupedCsrKernel compress(const DenseKernel& dense, int group_size) {
    dense.validate();
    GroupedCsrKernel sparse;
    sparse.out_channels = dense.out_channels;
    sparse.in_channels = dense.in_channels;
    sparse.kernel_h = dense.kernel_h;
    sparse.kernel_w = dense.kernel_w;
    sparse.group_size = group_size;

    const int cols = dense.column_space();
    for (const IndexRange& range : group_partition(dense.out_channels, group_size)) {
        GroupBlock block;
        for (int col = 0; col < cols; ++col) {
            const int c = col / (dense.kernel_h * dense.kernel_w);
            const int r = (col / dense.kernel_w) % dense.kernel_h;
            const int s = col % dense.kernel_w;
            bool any_nonzero = false;
            for (int n = range.begin; n < range.end; ++n) {
                if (dense.at(n, c, r, s) != 0.0f) {
                    any_nonzero = true;
                    break;
                }
            }
            if (!any_nonzero) continue;
            block.offsets.push_back(static_cast<std::uint32_t>(col));
            for (int n = range.begin; n < range.end; ++n)
                block.values.push_back(dense.at(n, c, r, s));
        }
        sparse.groups.push_back(std::move(block));
    }
    return sparse;
}

DenseKernel decompress(const GroupedCsrKernel& sparse) {
    sparse.validate();
    DenseKernel dense(sparse.out_channels, sparse.in_channels, sparse.kernel_h, sparse.kernel_w);
    for (std::size_t gi = 0; gi < sparse.groups.size(); ++gi) {
        const GroupBlock& block = sparse.groups[gi];
        const int rows = sparse.group_rows(gi);
        const int base = static_cast<int>(gi) * sparse.group_size;
        for (std::size_t j = 0; j < block.offsets.size(); ++j) {
            auto [c, r, s] = offset_to_coords(block.offsets[j], sparse.in_channels,
                                              sparse.kernel_h, sparse.kernel_w);
            for (int lane = 0; lane < rows; ++lane)
                dense.at(base + lane, c, r, s) = block.values[j * rows + lane];
        }
    }
    return dense;
}

std::uint32_t coords_to_offset(int c, int r, int s, int kernel_h, int kernel_w) {
    return static_cast<std::uint32_t>((c * kernel_h + r) * kernel_w + s);
}

std::array<int, 3> offset_to_coords(std::uint32_t offset, int in_channels, int kernel_h,
                                    int kernel_w) {
    const std::uint32_t cols = static_cast<std::uint32_t>(in_channels) * kernel_h * kernel_w;
    if (offset >= cols)
        throw ShapeError("column offset " + std::to_string(offset) + " out of range [0, " +
                         std::to_string(cols) + ")");
    const int s = static_cast<int>(offset % kernel_w);
    const int r = static_cast<int>((offset / kernel_w) % kernel_h);
    const int c = static_cast<int>(offset / (static_cast<std::uint32_t>(kernel_w) * kernel_h));
    return {c, r, s};
}

}  // namespace alcs
