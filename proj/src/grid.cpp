#include "skex/grid.hpp"

#include "skex/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace skex {

std::vector<std::size_t> GridConfig::slices_at(std::size_t level, std::size_t d) const {
    const auto& entry = slices_per_level.at(std::min(level, slices_per_level.size() - 1));
    if (entry.size() == 1) {
        return std::vector<std::size_t>(d, entry.front());
    }
    return entry;
}

void GridConfig::validate(std::size_t d) const {
    if (max_depth < 1) {
        throw ConfigError("grid.depth must be at least 1");
    }
    if (slices_per_level.empty()) {
        throw ConfigError("grid.slices must list at least one level");
    }
    if (slices_per_level.size() != 1 && slices_per_level.size() != max_depth) {
        throw ConfigError("grid.slices must list one level or exactly grid.depth levels");
    }
    for (const auto& level : slices_per_level) {
        if (level.size() != 1 && level.size() != d) {
            throw ConfigError("grid.slices: each level needs one count or one count per feature");
        }
        if (std::any_of(level.begin(), level.end(), [](std::size_t s) { return s == 0; })) {
            throw ConfigError("grid.slices: slice counts must be positive");
        }
    }
    if (!(threshold >= 0.0)) {
        throw ConfigError("grid.threshold must be non-negative");
    }
    if (min_samples < 1) {
        throw ConfigError("grid.min_samples must be at least 1");
    }
}

double deviation(std::span<const Point> xs, std::span<const double> predictions, OutputKind kind) {
    if (predictions.empty()) {
        throw ContractError("deviation: no predictions");
    }
    const double n = static_cast<double>(predictions.size());
    double sum_sq = 0.0;
    if (kind == OutputKind::constant) {
        const double mean = mean_of(predictions);
        for (double p : predictions) {
            sum_sq += (p - mean) * (p - mean);
        }
    } else {
        if (xs.size() != predictions.size()) {
            throw ContractError("deviation: one input per prediction required");
        }
        const RuleOutput fit = fit_linear(xs, predictions);
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const double r = predictions[i] - evaluate_output(fit, xs[i]);
            sum_sq += r * r;
        }
    }
    return std::sqrt(sum_sq / n);
}

OracleView::OracleView(const Dataset& data, const Predictor& oracle)
    : dataset(data), inputs(data.inputs()), predictions(oracle.predict(inputs)) {}

namespace {

struct Gathered {
    std::vector<Point> xs;
    std::vector<double> ys;
};

Gathered gather(const OracleView& view, std::span<const std::size_t> members) {
    Gathered g;
    g.xs.reserve(members.size());
    g.ys.reserve(members.size());
    for (std::size_t m : members) {
        g.xs.push_back(view.inputs[m]);
        g.ys.push_back(view.predictions[m]);
    }
    return g;
}

double members_deviation(const OracleView& view, std::span<const std::size_t> members, OutputKind kind) {
    const auto g = gather(view, members);
    return deviation(g.xs, g.ys, kind);
}

RuleOutput cell_output(const OracleView& view, const CellStats& cell, OutputKind kind) {
    const auto g = gather(view, cell.members);
    if (kind == OutputKind::linear) {
        return fit_linear(g.xs, g.ys);
    }
    return ConstantOutput{mean_of(g.ys)};
}

} // namespace

CellStats make_cell(const OracleView& view, const Hypercube& cube, OutputKind kind) {
    CellStats cell;
    cell.cube = cube;
    const auto& domain = view.dataset.domain();
    for (std::size_t s = 0; s < view.inputs.size(); ++s) {
        if (contains(cube, view.inputs[s], domain)) {
            cell.members.push_back(s);
        }
    }
    if (!cell.members.empty()) {
        cell.deviation = members_deviation(view, cell.members, kind);
    }
    return cell;
}

std::size_t merge_pass(std::vector<CellStats>& cells, const OracleView& view, double threshold, OutputKind kind,
                       std::size_t& next_serial) {
    std::map<std::pair<std::size_t, std::size_t>, double> pooled_cache;
    const auto pooled = [&](const CellStats& a, const CellStats& b) {
        const auto key = std::minmax(a.serial, b.serial);
        if (auto it = pooled_cache.find(key); it != pooled_cache.end()) {
            return it->second;
        }
        std::vector<std::size_t> members = a.members;
        members.insert(members.end(), b.members.begin(), b.members.end());
        std::sort(members.begin(), members.end());
        const double dev = members_deviation(view, members, kind);
        pooled_cache.emplace(key, dev);
        return dev;
    };

    std::size_t merges = 0;
    while (true) {
        std::size_t best_i = 0;
        std::size_t best_j = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                if (!full_face_adjacent(cells[i].cube, cells[j].cube)) {
                    continue;
                }
                const double dev = pooled(cells[i], cells[j]);
                if (dev < best) {
                    best = dev;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (!(best <= threshold)) {
            return merges;
        }

        CellStats merged;
        merged.cube = merge_adjacent(cells[best_i].cube, cells[best_j].cube);
        merged.members = cells[best_i].members;
        merged.members.insert(merged.members.end(), cells[best_j].members.begin(), cells[best_j].members.end());
        std::sort(merged.members.begin(), merged.members.end());
        merged.deviation = best;
        merged.final = true;
        merged.merged = true;
        merged.serial = next_serial++;
        merged.parent = merged.serial;
        merged.level = std::max(cells[best_i].level, cells[best_j].level);

        cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(best_j));
        cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(best_i));
        cells.push_back(std::move(merged));
        ++merges;
    }
}

GridResult run_grid(const Dataset& dataset, const Predictor& oracle, const GridConfig& config) {
    if (dataset.empty()) {
        throw ContractError("extract_grid: empty dataset");
    }
    config.validate(dataset.dim());
    const OracleView view(dataset, oracle);
    const OutputKind kind = config.output_kind;
    const double theta = config.threshold;

    std::size_t next_serial = 0;
    CellStats root = make_cell(view, dataset.domain().bounds, kind);
    root.serial = next_serial++;
    root.parent = root.serial;
    root.final = root.deviation <= theta;

    GridResult result;
    std::vector<CellStats> cells{std::move(root)};
    for (std::size_t level = 0; level < config.max_depth; ++level) {
        const bool pending = std::any_of(cells.begin(), cells.end(), [&](const CellStats& c) {
            return !c.final && c.members.size() >= config.min_samples;
        });
        if (!pending) {
            break;
        }
        GridLevelLog log;
        log.level = level;
        const auto slices = config.slices_at(level, dataset.dim());
        std::vector<CellStats> next;
        for (auto& cell : cells) {
            if (cell.final || cell.members.size() < config.min_samples) {
                next.push_back(std::move(cell));
                continue;
            }
            std::vector<Hypercube> siblings;
            for (auto& piece : split_grid(cell.cube, slices)) {
                siblings.push_back(piece);
                CellStats child = make_cell(view, piece, kind);
                if (child.members.empty()) {
                    ++log.empty_cells_dropped;
                    continue;
                }
                child.serial = next_serial++;
                child.parent = cell.serial;
                child.level = level + 1;
                child.final = child.deviation <= theta;
                next.push_back(std::move(child));
            }
            log.sibling_groups.push_back(std::move(siblings));
        }
        log.cells_before_merge = next.size();
        merge_pass(next, view, theta, kind, next_serial);
        log.cells_after_merge = next.size();
        result.levels.push_back(std::move(log));
        cells = std::move(next);
    }

    std::sort(cells.begin(), cells.end(), [](const CellStats& a, const CellStats& b) { return a.serial < b.serial; });
    Theory& theory = result.theory;
    theory.domain = dataset.domain();
    theory.feature_names = dataset.feature_names();
    theory.target_name = dataset.target_name();
    for (const auto& cell : cells) {
        theory.rules.push_back({Region{cell.cube, {}}, cell_output(view, cell, kind)});
    }
    theory.default_output = ConstantOutput{mean_of(view.predictions)};
    result.leaves = std::move(cells);
    return result;
}

} // namespace skex
