#pragma once

#include "skex/data.hpp"
#include "skex/theory.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace skex {

struct IterConfig {
    std::size_t n_initial = 3;
    /// Thickness of a temporary cube, as a fraction of the domain width along
    /// the expanded dimension.
    double update_width = 0.05;
    /// Largest admissible |mean(candidate) - mean(cube)|, in output units.
    double threshold = 0.1;
    std::size_t max_iterations = 600;
    /// Oracle queries per temporary cube.
    std::size_t points_per_cube = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct IterCandidate {
    std::size_t cube = 0;
    std::size_t dim = 0;
    Side side = Side::lower;
    Hypercube box;
};

/// Temporary cubes around `existing[target]`: one per side per dimension,
/// stopped by the other cubes and the domain. Zero-thickness ones are omitted.
std::vector<IterCandidate> candidate_cubes(std::span<const Hypercube> existing, std::size_t target,
                                           const IterConfig& config, const DomainBounds& domain);

/// State after one ITER iteration, for tracing and invariant checks.
struct IterStep {
    std::size_t iteration = 0;
    const std::vector<Hypercube>& cubes;
    const std::vector<std::size_t>& candidates_per_cube;
    std::optional<IterCandidate> committed;
};

using IterObserver = std::function<void(const IterStep&)>;

struct IterResult {
    Theory theory;
    std::vector<Hypercube> cubes;
    std::size_t iterations = 0;
    /// False when max_iterations ran out while admissible candidates remained.
    bool converged = false;
};

IterResult run_iter(const Dataset& dataset, const Predictor& oracle, const IterConfig& config,
                    const IterObserver& observer = {});

inline Theory extract_iter(const Dataset& dataset, const Predictor& oracle, const IterConfig& config,
                           const IterObserver& observer = {}) {
    return run_iter(dataset, oracle, config, observer).theory;
}

} // namespace skex
