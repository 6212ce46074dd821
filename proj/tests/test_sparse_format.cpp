#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>

#include "alcs/model_io.hpp"
#include "alcs/sparse_format.hpp"
#include "test_helpers.hpp"

using namespace alcs;

TEST_CASE("group_partition covers the channel range") {
    auto ranges = group_partition(8, 4);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0] == IndexRange{0, 4});
    CHECK(ranges[1] == IndexRange{4, 8});

    ranges = group_partition(4, 4);
    REQUIRE(ranges.size() == 1);
    CHECK(ranges[0] == IndexRange{0, 4});

    ranges = group_partition(7, 4);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0] == IndexRange{0, 4});
    CHECK(ranges[1] == IndexRange{4, 7});

    CHECK_THROWS_AS(group_partition(0, 4), ShapeError);
    CHECK_THROWS_AS(group_partition(4, 0), ShapeError);
}

TEST_CASE("compress stores nonzero columns with their offsets") {
    // Two rows over six columns, group size 2:
    //   r0 = [0, 1, 0, 2, 0, 4]
    //   r1 = [0, 3, 0, 1, 0, 5]
    DenseKernel dense(2, 6, 1, 1);
    const float r0[6] = {0, 1, 0, 2, 0, 4};
    const float r1[6] = {0, 3, 0, 1, 0, 5};
    for (int c = 0; c < 6; ++c) {
        dense.at(0, c, 0, 0) = r0[c];
        dense.at(1, c, 0, 0) = r1[c];
    }

    const GroupedCsrKernel sparse = compress(dense, 2);
    REQUIRE(sparse.groups.size() == 1);
    const GroupBlock& block = sparse.groups[0];
    CHECK(block.nnz_cols() == 3);
    CHECK(block.offsets == std::vector<std::uint32_t>{1, 3, 5});
    CHECK(block.values == std::vector<float>{1, 3, 2, 1, 4, 5});

    CHECK(decompress(sparse) == dense);
}

TEST_CASE("all-zero group compresses to an empty block") {
    DenseKernel dense(4, 2, 1, 1);
    const GroupedCsrKernel sparse = compress(dense, 4);
    REQUIRE(sparse.groups.size() == 1);
    CHECK(sparse.groups[0].nnz_cols() == 0);
    CHECK(sparse.groups[0].offsets.empty());
    CHECK(sparse.groups[0].values.empty());
    CHECK(decompress(sparse) == dense);
}

TEST_CASE("compress/decompress roundtrip is bit-exact") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> value(-2.0f, 2.0f);

    SUBCASE("fully dense kernel") {
        DenseKernel dense(8, 3, 3, 3);
        for (float& v : dense.values) v = value(rng);
        CHECK(decompress(compress(dense, 4)) == dense);
    }
    SUBCASE("group-sparse kernels including tails and all-zero groups") {
        for (int trial = 0; trial < 200; ++trial) {
            std::uniform_int_distribution<int> oc(1, 12), ic(1, 5), k(1, 3), g(1, 5);
            std::uniform_real_distribution<double> density(0.0, 1.0);
            const DenseKernel dense = testing::random_group_sparse_kernel(
                oc(rng), ic(rng), k(rng), k(rng), g(rng), density(rng), rng);
            const int group = g(rng);
            CHECK(decompress(compress(dense, group)) == dense);
        }
    }
}

TEST_CASE("compress(decompress(x)) is the identity on valid grouped kernels") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> oc(1, 9), ic(1, 4), k(1, 3);
        const int g = 4;
        const DenseKernel dense =
            testing::random_group_sparse_kernel(oc(rng), ic(rng), k(rng), k(rng), g, 0.6, rng);
        const GroupedCsrKernel sparse = compress(dense, g);
        CHECK(compress(decompress(sparse), g) == sparse);
    }
}

TEST_CASE("stored value accounting") {
    std::mt19937_64 rng(21);
    const DenseKernel dense = testing::random_group_sparse_kernel(7, 3, 3, 3, 4, 0.5, rng);
    const GroupedCsrKernel sparse = compress(dense, 4);
    std::int64_t expected = 0;
    for (std::size_t gi = 0; gi < sparse.groups.size(); ++gi)
        expected += static_cast<std::int64_t>(sparse.groups[gi].nnz_cols()) *
                    sparse.group_rows(gi);
    CHECK(sparse.stored_values() == expected);

    // Every stored column carries at least one nonzero entry.
    for (std::size_t gi = 0; gi < sparse.groups.size(); ++gi) {
        const GroupBlock& block = sparse.groups[gi];
        const int rows = sparse.group_rows(gi);
        for (std::size_t j = 0; j < block.offsets.size(); ++j) {
            bool any = false;
            for (int lane = 0; lane < rows; ++lane)
                any = any || block.values[j * rows + lane] != 0.0f;
            CHECK(any);
        }
    }
}

TEST_CASE("decompress rejects malformed structure") {
    DenseKernel dense(4, 2, 1, 1, 1.0f);
    GroupedCsrKernel sparse = compress(dense, 4);

    SUBCASE("non-increasing offsets") {
        sparse.groups[0].offsets = {1, 1};
        CHECK_THROWS_AS(decompress(sparse), ShapeError);
    }
    SUBCASE("offset out of range") {
        sparse.groups[0].offsets = {0, 7};
        CHECK_THROWS_AS(decompress(sparse), ShapeError);
    }
    SUBCASE("payload length mismatch") {
        sparse.groups[0].values.pop_back();
        CHECK_THROWS_AS(decompress(sparse), ShapeError);
    }
    SUBCASE("wrong group count") {
        sparse.groups.emplace_back();
        CHECK_THROWS_AS(decompress(sparse), ShapeError);
    }
}

TEST_CASE("offset/coords mapping") {
    CHECK(offset_to_coords(0, 3, 3, 3) == std::array<int, 3>{0, 0, 0});
    CHECK(offset_to_coords(9, 3, 3, 3) == std::array<int, 3>{1, 0, 0});
    CHECK_THROWS_AS(offset_to_coords(27, 3, 3, 3), ShapeError);

    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 2; ++s) {
                const std::uint32_t off = coords_to_offset(c, r, s, 3, 2);
                CHECK(offset_to_coords(off, 4, 3, 2) == std::array<int, 3>{c, r, s});
            }
}

namespace {

SparseModel sample_model(std::mt19937_64& rng) {
    SparseModel model;
    SparseLayer conv;
    conv.kind = LayerKind::Conv;
    conv.kernel = compress(testing::random_group_sparse_kernel(7, 3, 3, 3, 4, 0.5, rng), 4);
    conv.bias.assign(7, 0.25f);
    conv.stride = 2;
    conv.pad = 1;
    model.layers.push_back(conv);

    SparseLayer fc;
    fc.kind = LayerKind::Fc;
    fc.kernel = compress(testing::random_group_sparse_kernel(4, 10, 1, 1, 4, 0.7, rng), 4);
    fc.stride = 1;
    fc.pad = 0;
    model.layers.push_back(fc);
    return model;
}

}  // namespace

TEST_CASE("empty model serializes to the 12-byte header plus checksum") {
    const std::vector<std::uint8_t> bytes = serialize_model(SparseModel{});
    REQUIRE(bytes.size() == 16);
    CHECK(std::memcmp(bytes.data(), "ALCS", 4) == 0);
    std::uint32_t version, count;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&count, bytes.data() + 8, 4);
    CHECK(version == 1);
    CHECK(count == 0);
    CHECK(deserialize_model(bytes).layers.empty());
}

TEST_CASE("model serialization roundtrips bit-exactly") {
    std::mt19937_64 rng(99);
    const SparseModel model = sample_model(rng);
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    const SparseModel back = deserialize_model(bytes);
    CHECK(back == model);
    CHECK(serialize_model(back) == bytes);
}

TEST_CASE("any single-byte corruption is detected") {
    std::mt19937_64 rng(5);
    SparseModel model;
    SparseLayer layer;
    layer.kind = LayerKind::Conv;
    layer.kernel = compress(testing::random_group_sparse_kernel(4, 2, 2, 2, 4, 0.8, rng), 4);
    layer.bias.assign(4, 1.0f);
    model.layers.push_back(layer);
    const std::vector<std::uint8_t> bytes = serialize_model(model);

    for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
        std::vector<std::uint8_t> mutated = bytes;
        mutated[pos] ^= 0x40;
        CHECK_THROWS_AS((void)deserialize_model(mutated), DecodeError);
    }
}

TEST_CASE("truncated payloads are rejected") {
    std::mt19937_64 rng(6);
    const std::vector<std::uint8_t> bytes = serialize_model(sample_model(rng));
    for (std::size_t len = 0; len < bytes.size(); len += 3) {
        std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + len);
        CHECK_THROWS_AS((void)deserialize_model(cut), DecodeError);
    }
}

TEST_CASE("decode error kinds are distinct") {
    const std::vector<std::uint8_t> bytes = serialize_model(SparseModel{});

    std::vector<std::uint8_t> bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        (void)deserialize_model(bad_magic);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.kind == DecodeError::Kind::BadMagic);
    }

    std::vector<std::uint8_t> bad_version = bytes;
    bad_version[4] = 9;
    // Fix the checksum so only the version field is wrong.
    const std::uint32_t crc = crc32_bytes(bad_version.data(), bad_version.size() - 4);
    std::memcpy(bad_version.data() + bad_version.size() - 4, &crc, 4);
    try {
        (void)deserialize_model(bad_version);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.kind == DecodeError::Kind::BadVersion);
    }

    try {
        (void)deserialize_model(bytes.data(), 7);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.kind == DecodeError::Kind::Truncated);
    }
}
