#include "alcs/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "alcs/sparse_format.hpp"

namespace alcs {

std::vector<PruneUnit> enumerate_units(const std::vector<DenseKernel>& kernels, int group_size) {
    std::vector<PruneUnit> units;
    for (std::size_t l = 0; l < kernels.size(); ++l) {
        const DenseKernel& k = kernels[l];
        k.validate();
        const int cols = k.column_space();
        const auto ranges = group_partition(k.out_channels, group_size);
        for (std::size_t gi = 0; gi < ranges.size(); ++gi) {
            for (int col = 0; col < cols; ++col) {
                auto [c, r, s] = offset_to_coords(static_cast<std::uint32_t>(col), k.in_channels,
                                                  k.kernel_h, k.kernel_w);
                double sq = 0.0;
                for (int n = ranges[gi].begin; n < ranges[gi].end; ++n) {
                    const double v = k.at(n, c, r, s);
                    sq += v * v;
                }
                units.push_back({static_cast<int>(l), static_cast<int>(gi), col,
                                 ranges[gi].size(), std::sqrt(sq)});
            }
        }
    }
    return units;
}

std::vector<std::size_t> sorted_unit_order(const std::vector<PruneUnit>& units) {
    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Enumeration order is (layer, group, column) ascending, so index order
    // is exactly the deterministic tie order.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (units[a].norm != units[b].norm) return units[a].norm > units[b].norm;
        return a < b;
    });
    return order;
}

std::vector<std::int64_t> unit_nnz_per_layer(const std::vector<PruneUnit>& units,
                                             const std::vector<std::uint8_t>& mask,
                                             std::size_t layer_count) {
    std::vector<std::int64_t> nnz(layer_count, 0);
    for (std::size_t i = 0; i < units.size(); ++i)
        if (mask[i]) nnz[static_cast<std::size_t>(units[i].layer)] += units[i].size;
    return nnz;
}

std::vector<DenseKernel> apply_unit_mask(const std::vector<DenseKernel>& kernels,
                                         const std::vector<PruneUnit>& units,
                                         const std::vector<std::uint8_t>& mask, int group_size) {
    std::vector<DenseKernel> out = kernels;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (mask[i]) continue;
        const PruneUnit& u = units[i];
        DenseKernel& k = out[static_cast<std::size_t>(u.layer)];
        auto [c, r, s] = offset_to_coords(static_cast<std::uint32_t>(u.column), k.in_channels,
                                          k.kernel_h, k.kernel_w);
        const int begin = u.group * group_size;
        for (int n = begin; n < begin + u.size; ++n) k.at(n, c, r, s) = 0.0f;
    }
    return out;
}

namespace {

struct ProjectionSetup {
    std::vector<PruneUnit> units;
    std::vector<std::size_t> candidates;    // sorted positions of prunable units
    std::vector<std::int64_t> fixed_nnz;    // frozen layers at full density
    double floor_ms = 0.0;                  // latency with zero candidates kept
    double full_ms = 0.0;                   // latency with every unit kept
};

ProjectionSetup make_setup(const std::vector<DenseKernel>& kernels,
                           const NetworkLatencyModel& model, int group_size,
                           const std::vector<bool>* frozen_layers) {
    if (kernels.size() != model.layers.size())
        throw DomainError("projection needs one latency profile per layer: got " +
                          std::to_string(model.layers.size()) + " profiles for " +
                          std::to_string(kernels.size()) + " layers");
    if (frozen_layers && frozen_layers->size() != kernels.size())
        throw DomainError("frozen-layer flags must match the layer count");
    for (std::size_t l = 0; l < kernels.size(); ++l) {
        if (model.layers[l].total_params() !=
            static_cast<std::int64_t>(kernels[l].size()))
            throw DomainError("latency profile for layer " + std::to_string(l) +
                              " covers a different parameter count than the kernel");
    }

    ProjectionSetup setup;
    setup.units = enumerate_units(kernels, group_size);
    setup.fixed_nnz.assign(kernels.size(), 0);

    auto frozen = [&](int layer) {
        return frozen_layers && (*frozen_layers)[static_cast<std::size_t>(layer)];
    };

    const std::vector<std::size_t> order = sorted_unit_order(setup.units);
    for (std::size_t pos : order)
        if (!frozen(setup.units[pos].layer)) setup.candidates.push_back(pos);

    setup.floor_ms = model.tau_ms;
    setup.full_ms = model.tau_ms;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const LayerLatencyProfile& p = model.layers[l];
        setup.full_ms += p.knots.back().ms;
        if (frozen(static_cast<int>(l))) {
            setup.fixed_nnz[l] = p.total_params();
            setup.floor_ms += p.knots.back().ms;
        } else {
            setup.floor_ms += p.knots.front().ms;
        }
    }
    return setup;
}

// Latency of the kept set formed by the first `count` candidates.
double eval_prefix(const ProjectionSetup& setup, const NetworkLatencyModel& model,
                   std::size_t count) {
    std::vector<std::int64_t> nnz = setup.fixed_nnz;
    for (std::size_t i = 0; i < count; ++i) {
        const PruneUnit& u = setup.units[setup.candidates[i]];
        nnz[static_cast<std::size_t>(u.layer)] += u.size;
    }
    return estimate_network(model, nnz);
}

std::vector<std::uint8_t> prefix_mask(const ProjectionSetup& setup, std::size_t count) {
    std::vector<std::uint8_t> mask(setup.units.size(), 0);
    for (std::size_t i = 0; i < setup.units.size(); ++i)
        if (setup.fixed_nnz[static_cast<std::size_t>(setup.units[i].layer)] > 0) mask[i] = 1;
    for (std::size_t i = 0; i < count; ++i) mask[setup.candidates[i]] = 1;
    return mask;
}

}  // namespace

ProjectionOutput project_latency(const std::vector<DenseKernel>& kernels,
                                 const NetworkLatencyModel& model, double budget_ms,
                                 double eps_ms, int group_size,
                                 const std::vector<bool>* frozen_layers) {
    if (eps_ms <= 0.0) throw DomainError("projection tolerance must be positive");
    ProjectionSetup setup = make_setup(kernels, model, group_size, frozen_layers);

    if (budget_ms < setup.floor_ms)
        throw InfeasibleBudgetError(setup.floor_ms, budget_ms);

    ProjectionResult result;
    std::size_t kept;
    if (setup.full_ms <= budget_ms) {
        kept = setup.candidates.size();
        result.estimated_latency_ms = setup.full_ms;
    } else {
        // Bisection on the kept count (the endpoints come straight from the
        // profile knots, so only midpoint candidates cost an evaluation).
        std::size_t lo = 0, hi = setup.candidates.size();
        double t_lo = setup.floor_ms;
        double t_hi = setup.full_ms;
        while (t_hi - t_lo > eps_ms && hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            const double t = eval_prefix(setup, model, mid);
            ++result.iterations;
            if (t <= budget_ms) {
                lo = mid;
                t_lo = t;
            } else {
                hi = mid;
                t_hi = t;
            }
        }
        // The lower endpoint is the largest count known feasible; picking it
        // keeps the result within budget even when the eps guard fires first.
        kept = lo;
        result.estimated_latency_ms = t_lo;
    }

    result.mask = prefix_mask(setup, kept);
    result.kept_units = static_cast<std::int64_t>(
        std::count(result.mask.begin(), result.mask.end(), std::uint8_t{1}));

    ProjectionOutput out;
    out.kernels = apply_unit_mask(kernels, setup.units, result.mask, group_size);
    out.result = std::move(result);
    return out;
}

std::vector<std::uint8_t> greedy_reference_mask(const std::vector<DenseKernel>& kernels,
                                                const NetworkLatencyModel& model,
                                                double budget_ms, int group_size,
                                                const std::vector<bool>* frozen_layers) {
    ProjectionSetup setup = make_setup(kernels, model, group_size, frozen_layers);
    if (budget_ms < setup.floor_ms)
        throw InfeasibleBudgetError(setup.floor_ms, budget_ms);

    std::vector<std::int64_t> nnz = setup.fixed_nnz;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < setup.candidates.size(); ++i) {
        const PruneUnit& u = setup.units[setup.candidates[i]];
        nnz[static_cast<std::size_t>(u.layer)] += u.size;
        if (estimate_network(model, nnz) > budget_ms) break;
        kept = i + 1;
    }
    return prefix_mask(setup, kept);
}

}  // namespace alcs
