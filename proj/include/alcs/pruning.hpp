#pragma once

#include <cstdint>
#include <vector>

#include "alcs/latency_model.hpp"
#include "alcs/tensor.hpp"

namespace alcs {

// Atomic pruning granule: the values at one flattened (c, r, s) position
// across one group of adjacent output channels.
struct PruneUnit {
    int layer = 0;
    int group = 0;
    int column = 0;
    int size = 0;     // group_size, or the tail-group size
    double norm = 0;  // L2 over exactly the unit's entries
};

// One unit per (layer, group, column), in that order.
std::vector<PruneUnit> enumerate_units(const std::vector<DenseKernel>& kernels, int group_size);

// Descending norm; ties broken by (layer, group, column) so masks are
// reproducible. Returns indices into the unit list.
std::vector<std::size_t> sorted_unit_order(const std::vector<PruneUnit>& units);

// Per-layer stored-value counts for a kept-unit mask (mask aligned with
// enumerate_units order).
std::vector<std::int64_t> unit_nnz_per_layer(const std::vector<PruneUnit>& units,
                                             const std::vector<std::uint8_t>& mask,
                                             std::size_t layer_count);

// Zeroes every dropped unit, leaves kept units untouched.
std::vector<DenseKernel> apply_unit_mask(const std::vector<DenseKernel>& kernels,
                                         const std::vector<PruneUnit>& units,
                                         const std::vector<std::uint8_t>& mask, int group_size);

struct ProjectionResult {
    std::vector<std::uint8_t> mask;  // per unit, enumerate_units order
    std::int64_t kept_units = 0;
    double estimated_latency_ms = 0.0;
    int iterations = 0;  // candidate-mask latency evaluations inside the bisection loop
};

struct ProjectionOutput {
    ProjectionResult result;
    std::vector<DenseKernel> kernels;
};

// Euclidean projection onto the latency budget: keep the largest feasible
// count of top-norm units, found by bisection on the kept count. Layers
// flagged in frozen_layers are excluded from pruning and contribute their
// full parameter count to every latency evaluation.
// Throws InfeasibleBudgetError when even the empty network exceeds budget.
ProjectionOutput project_latency(const std::vector<DenseKernel>& kernels,
                                 const NetworkLatencyModel& model, double budget_ms,
                                 double eps_ms, int group_size,
                                 const std::vector<bool>* frozen_layers = nullptr);

// Reference selection for tests: walk units in descending-norm order, adding
// each while the estimate stays within budget, then stop.
std::vector<std::uint8_t> greedy_reference_mask(const std::vector<DenseKernel>& kernels,
                                                const NetworkLatencyModel& model,
                                                double budget_ms, int group_size,
                                                const std::vector<bool>* frozen_layers = nullptr);

}  // namespace alcs
