#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alcs/common.hpp"

namespace alcs {

struct LayerShape {
    std::string name;
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int in_h = 0;
    int in_w = 0;
    int stride = 1;
    int pad = 0;

    std::int64_t param_count() const {
        return static_cast<std::int64_t>(out_channels) * in_channels * kernel_h * kernel_w;
    }

    bool operator==(const LayerShape&) const = default;
};

struct LatencyKnot {
    std::int64_t nnz = 0;
    double ms = 0.0;

    bool operator==(const LatencyKnot&) const = default;
};

// Per-layer piecewise-linear latency profile over nonzero-parameter counts.
// Knots are strictly increasing in nnz, from 0 up to the full parameter
// count; times are nondecreasing after isotonic correction.
struct LayerLatencyProfile {
    LayerShape shape;
    std::vector<LatencyKnot> knots;
    std::vector<std::string> warnings;

    std::int64_t total_params() const { return shape.param_count(); }

    // alpha_i: ms per parameter on segment i (0-based, i < knots.size() - 1).
    double slope(std::size_t i) const;

    void validate() const;

    bool operator==(const LayerLatencyProfile& o) const {
        return shape == o.shape && knots == o.knots;
    }
};

// t_1 + sum_i delta_i * alpha_i * min(k_{i+1} - k_i, s - k_i); exact at every
// knot, linear between. Throws DomainError when s is outside [0, N].
double estimate_layer(const LayerLatencyProfile& profile, std::int64_t nonzeros);

struct MeasureMeta {
    int runs = 50;
    int warmup = 5;
    std::uint64_t seed = 0;
    std::string host;

    bool operator==(const MeasureMeta&) const = default;
};

struct NetworkLatencyModel {
    double tau_ms = 0.0;  // constant overhead of layers not modeled per-sparsity
    std::vector<LayerLatencyProfile> layers;
    MeasureMeta meta;

    double floor_ms() const;  // tau + sum of each layer's empty-network time
    double full_ms() const;   // tau + sum of each layer's full-density time

    bool operator==(const NetworkLatencyModel& o) const {
        return tau_ms == o.tau_ms && layers == o.layers && meta == o.meta;
    }
};

// tau + sum over layers; nonzeros must carry one in-range count per profile.
double estimate_network(const NetworkLatencyModel& model,
                        const std::vector<std::int64_t>& nonzeros);

struct MeasureOptions {
    std::vector<double> densities;  // defaults to {0, 0.1, ..., 1.0} when empty
    int runs = 50;
    int warmup = 5;
    std::uint64_t seed = 0;
    int group_size = 4;
    bool use_mean = false;  // median otherwise
    int threads = 1;        // measurement itself always runs single-worker
};

std::vector<double> default_densities();

// Kept-unit index lists per density knot; deterministic in the seed, shared
// by measure_layer_profile so patterns can be checked without timing.
std::vector<std::vector<std::int64_t>> knot_unit_patterns(const LayerShape& shape,
                                                          const MeasureOptions& opts);

LayerLatencyProfile measure_layer_profile(const LayerShape& shape, const MeasureOptions& opts);

std::string host_descriptor();

// JSON schema:
// { "tau_ms": float,
//   "layers": [ { "name": str, "shape": [o_c,i_c,k_h,k_w,i_h,i_w,stride,pad],
//                 "knots": [[nnz, ms], ...] } ],
//   "meta": { "runs": int, "warmup": int, "seed": int, "host": str } }
std::string latency_model_to_json(const NetworkLatencyModel& model);
NetworkLatencyModel latency_model_from_json(const std::string& text);

void save_latency_model(const std::filesystem::path& path, const NetworkLatencyModel& model);
NetworkLatencyModel load_latency_model(const std::filesystem::path& path);

}  // namespace alcs
