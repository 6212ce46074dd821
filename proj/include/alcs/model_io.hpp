#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "alcs/sparse_format.hpp"

namespace alcs {

enum class LayerKind : std::uint8_t { Conv = 0, Fc = 1 };

struct SparseLayer {
    LayerKind kind = LayerKind::Conv;
    GroupedCsrKernel kernel;
    std::vector<float> bias;  // empty when the layer has no bias
    std::uint32_t stride = 1;
    std::uint32_t pad = 0;

    bool operator==(const SparseLayer&) const = default;
};

struct SparseModel {
    std::vector<SparseLayer> layers;

    bool operator==(const SparseModel&) const = default;
};

// Binary model format, little-endian:
//   magic "ALCS" | version u32 = 1 | layer_count u32
//   per layer: kind u8 | o_c u32 | i_c u32 | k_h u32 | k_w u32 | stride u32
//            | pad u32 | group_size u32 | group_count u32
//            | per group: nnz_cols u32, offsets nnz_cols x u32,
//                         values nnz_cols * effective_group_size x f32
//            | bias_flag u8 | bias o_c x f32 if flag
//   crc32 u32 of all preceding bytes
std::vector<std::uint8_t> serialize_model(const SparseModel& model);
SparseModel deserialize_model(const std::uint8_t* data, std::size_t size);
SparseModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const SparseModel& model);
SparseModel load_model(const std::filesystem::path& path);

std::uint32_t crc32_bytes(const void* data, std::size_t size);

}  // namespace alcs
