#include "alcs/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

namespace alcs {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

constexpr std::uint32_t kVersion = 1;
constexpr char kMagic[4] = {'A', 'L', 'C', 'S'};

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    out.insert(out.end(), raw, raw + 4);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    out.insert(out.end(), raw, raw + 4);
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) {
        if (pos + n > size)
            throw DecodeError(DecodeError::Kind::Truncated,
                              std::string("model payload truncated while reading ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return data[pos++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v;
        std::memcpy(&v, data + pos, 4);
        pos += 4;
        return v;
    }
    float f32(const char* what) {
        need(4, what);
        float v;
        std::memcpy(&v, data + pos, 4);
        pos += 4;
        return v;
    }
};

}  // namespace

std::uint32_t crc32_bytes(const void* data, std::size_t size) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

std::vector<std::uint8_t> serialize_model(const SparseModel& model) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.layers.size()));

    for (const SparseLayer& layer : model.layers) {
        const GroupedCsrKernel& k = layer.kernel;
        k.validate();
        if (!layer.bias.empty() && layer.bias.size() != static_cast<std::size_t>(k.out_channels))
            throw ShapeError("layer bias length must equal out_channels");
        put_u8(out, static_cast<std::uint8_t>(layer.kind));
        put_u32(out, static_cast<std::uint32_t>(k.out_channels));
        put_u32(out, static_cast<std::uint32_t>(k.in_channels));
        put_u32(out, static_cast<std::uint32_t>(k.kernel_h));
        put_u32(out, static_cast<std::uint32_t>(k.kernel_w));
        put_u32(out, layer.stride);
        put_u32(out, layer.pad);
        put_u32(out, static_cast<std::uint32_t>(k.group_size));
        put_u32(out, static_cast<std::uint32_t>(k.groups.size()));
        for (std::size_t gi = 0; gi < k.groups.size(); ++gi) {
            const GroupBlock& block = k.groups[gi];
            put_u32(out, block.nnz_cols());
            for (std::uint32_t off : block.offsets) put_u32(out, off);
            for (float v : block.values) put_f32(out, v);
        }
        put_u8(out, layer.bias.empty() ? 0 : 1);
        for (float b : layer.bias) put_f32(out, b);
    }

    put_u32(out, crc32_bytes(out.data(), out.size()));
    return out;
}

SparseModel deserialize_model(const std::uint8_t* data, std::size_t size) {
    Reader in{data, size};
    in.need(4, "magic");
    if (std::memcmp(data, kMagic, 4) != 0)
        throw DecodeError(DecodeError::Kind::BadMagic, "not a sparse model file (bad magic)");
    in.pos = 4;
    const std::uint32_t version = in.u32("version");
    if (version != kVersion)
        throw DecodeError(DecodeError::Kind::BadVersion,
                          "unsupported model format version " + std::to_string(version));

    // Checksum covers everything before the trailing u32.
    if (size < in.pos + 4)
        throw DecodeError(DecodeError::Kind::Truncated, "model payload truncated (no checksum)");
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, data + size - 4, 4);
    if (crc32_bytes(data, size - 4) != stored_crc)
        throw DecodeError(DecodeError::Kind::Corrupt, "model checksum mismatch");
    in.size = size - 4;

    SparseModel model;
    const std::uint32_t layer_count = in.u32("layer count");
    model.layers.reserve(layer_count);
    for (std::uint32_t li = 0; li < layer_count; ++li) {
        SparseLayer layer;
        const std::uint8_t kind = in.u8("layer kind");
        if (kind > 1)
            throw DecodeError(DecodeError::Kind::Corrupt,
                              "unknown layer kind " + std::to_string(kind));
        layer.kind = static_cast<LayerKind>(kind);
        GroupedCsrKernel& k = layer.kernel;
        k.out_channels = static_cast<int>(in.u32("out_channels"));
        k.in_channels = static_cast<int>(in.u32("in_channels"));
        k.kernel_h = static_cast<int>(in.u32("kernel_h"));
        k.kernel_w = static_cast<int>(in.u32("kernel_w"));
        layer.stride = in.u32("stride");
        layer.pad = in.u32("pad");
        k.group_size = static_cast<int>(in.u32("group_size"));
        const std::uint32_t group_count = in.u32("group count");
        if (k.out_channels < 1 || k.in_channels < 1 || k.kernel_h < 1 || k.kernel_w < 1 ||
            k.group_size < 1)
            throw DecodeError(DecodeError::Kind::Corrupt, "layer dimensions must all be >= 1");
        const std::uint32_t expected_groups = static_cast<std::uint32_t>(
            (k.out_channels + k.group_size - 1) / k.group_size);
        if (group_count != expected_groups)
            throw DecodeError(DecodeError::Kind::Corrupt,
                              "group count " + std::to_string(group_count) + " does not match " +
                                  std::to_string(expected_groups));
        k.groups.resize(group_count);
        for (std::uint32_t gi = 0; gi < group_count; ++gi) {
            GroupBlock& block = k.groups[gi];
            const std::uint32_t nnz = in.u32("nnz_cols");
            block.offsets.resize(nnz);
            for (std::uint32_t j = 0; j < nnz; ++j) block.offsets[j] = in.u32("column offset");
            const std::size_t rows = static_cast<std::size_t>(k.group_rows(gi));
            block.values.resize(static_cast<std::size_t>(nnz) * rows);
            for (float& v : block.values) v = in.f32("column values");
        }
        try {
            k.validate();
        } catch (const ShapeError& e) {
            throw DecodeError(DecodeError::Kind::Corrupt, e.what());
        }
        if (in.u8("bias flag") != 0) {
            layer.bias.resize(static_cast<std::size_t>(k.out_channels));
            for (float& b : layer.bias) b = in.f32("bias");
        }
        model.layers.push_back(std::move(layer));
    }
    if (in.pos != in.size)
        throw DecodeError(DecodeError::Kind::Corrupt, "trailing bytes after last layer");
    return model;
}

SparseModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    return deserialize_model(bytes.data(), bytes.size());
}

void save_model(const std::filesystem::path& path, const SparseModel& model) {
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

SparseModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw std::runtime_error("failed reading " + path.string());
    return deserialize_model(bytes);
}

}  // namespace alcs
