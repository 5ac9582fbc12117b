#pragma once

#include "skex/data.hpp"
#include "skex/theory.hpp"

#include <vector>

namespace skex {

struct GridConfig {
    std::size_t max_depth = 2;
    /// Slice counts per dimension, one entry per level. A single entry is
    /// reused for every level.
    std::vector<std::vector<std::size_t>> slices_per_level = {{2, 2}};
    /// Largest admissible deviation of a final cell, in output units.
    double threshold = 0.1;
    std::size_t min_samples = 3;
    OutputKind output_kind = OutputKind::constant;

    /// Slice counts used at `level` for a `d`-dimensional domain.
    std::vector<std::size_t> slices_at(std::size_t level, std::size_t d) const;
    void validate(std::size_t d) const;
};

/// Spread of oracle predictions inside a cell: population standard deviation
/// (constant) or RMS residual of the affine least-squares fit (linear).
double deviation(std::span<const Point> xs, std::span<const double> predictions, OutputKind kind);

/// A cell with the training samples it contains under the half-open convention.
struct CellStats {
    Hypercube cube;
    std::vector<std::size_t> members;
    double deviation = 0.0;
    bool final = false;
    /// Creation counter; rules are emitted in this order.
    std::size_t serial = 0;
    /// Serial of the cell this one was split from (itself for the root).
    std::size_t parent = 0;
    std::size_t level = 0;
    bool merged = false;
};

/// Training inputs and their oracle predictions, shared by grid routines.
struct OracleView {
    const Dataset& dataset;
    std::vector<Point> inputs;
    std::vector<double> predictions;

    OracleView(const Dataset& data, const Predictor& oracle);
};

CellStats make_cell(const OracleView& view, const Hypercube& cube, OutputKind kind);

/// Greedy pairwise merging: repeatedly fuses the full-face-adjacent pair with
/// the smallest pooled deviation while that deviation stays within threshold.
/// Merged cells are final. Returns the number of merges performed.
std::size_t merge_pass(std::vector<CellStats>& cells, const OracleView& view, double threshold, OutputKind kind,
                       std::size_t& next_serial);

struct GridLevelLog {
    std::size_t level = 0;
    /// Cells produced by splitting, grouped by parent serial.
    std::vector<std::vector<Hypercube>> sibling_groups;
    std::size_t empty_cells_dropped = 0;
    std::size_t cells_before_merge = 0;
    std::size_t cells_after_merge = 0;
};

struct GridResult {
    Theory theory;
    std::vector<CellStats> leaves;
    std::vector<GridLevelLog> levels;
};

GridResult run_grid(const Dataset& dataset, const Predictor& oracle, const GridConfig& config);

inline Theory extract_grid(const Dataset& dataset, const Predictor& oracle, const GridConfig& config) {
    return run_grid(dataset, oracle, config).theory;
}

} // namespace skex
