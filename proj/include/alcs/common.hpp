#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace alcs {

// Shape or structural violation on an in-memory input.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar argument outside its valid range (e.g. a nonzero count above N).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed on-disk payload. The kind distinguishes the failure classes
// callers may want to react to separately.
struct DecodeError : std::runtime_error {
    enum class Kind { BadMagic, BadVersion, Truncated, Corrupt, BadSchema };

    DecodeError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}

    Kind kind;
};

// Latency budget below the floor reachable even with every unit pruned.
struct InfeasibleBudgetError : std::runtime_error {
    InfeasibleBudgetError(double floor, double budget)
        : std::runtime_error("infeasible latency budget " + std::to_string(budget) +
                             " ms: minimum achievable latency (tau + sum of empty-layer times) is " +
                             std::to_string(floor) + " ms"),
          floor_ms(floor),
          budget_ms(budget) {}

    double floor_ms;
    double budget_ms;
};

// Element-wise comparison used by the convolution oracles:
// |a - b| / max(|b|, 1), with b the reference value.
inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1.0);
}

}  // namespace alcs
