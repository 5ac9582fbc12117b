#include "skex/iter.hpp"

#include "skex/error.hpp"
#include "skex/random.hpp"

#include <algorithm>
#include <cmath>

namespace skex {

void IterConfig::validate() const {
    if (n_initial < 1) {
        throw ConfigError("iter.n_initial must be at least 1");
    }
    if (!(update_width > 0.0) || !std::isfinite(update_width)) {
        throw ConfigError("iter.update must be positive");
    }
    if (!(threshold >= 0.0)) {
        throw ConfigError("iter.threshold must be non-negative");
    }
    if (points_per_cube < 1) {
        throw ConfigError("iter.m must be at least 1");
    }
}

std::vector<IterCandidate> candidate_cubes(std::span<const Hypercube> existing, std::size_t target,
                                           const IterConfig& config, const DomainBounds& domain) {
    if (target >= existing.size()) {
        throw ContractError("candidate_cubes: target index out of range");
    }
    std::vector<Hypercube> blockers;
    blockers.reserve(existing.size());
    for (std::size_t c = 0; c < existing.size(); ++c) {
        if (c != target) {
            blockers.push_back(existing[c]);
        }
    }
    const Hypercube& cube = existing[target];
    std::vector<IterCandidate> out;
    for (std::size_t dim = 0; dim < cube.dim(); ++dim) {
        const double width = config.update_width * domain.bounds[dim].width();
        for (Side side : {Side::lower, Side::upper}) {
            if (auto box = expand(cube, dim, side, width, domain, blockers)) {
                out.push_back({target, dim, side, std::move(*box)});
            }
        }
    }
    return out;
}

namespace {

enum StreamTag : std::uint64_t { kSeeding = 1, kCandidate = 2, kCubeMean = 3 };

Point uniform_point(const Hypercube& cube, Rng& rng) {
    Point p(cube.dim());
    for (std::size_t i = 0; i < cube.dim(); ++i) {
        p[i] = rng.uniform(cube[i].lo, cube[i].hi);
    }
    return p;
}

double mean_prediction(const Predictor& oracle, const Hypercube& cube, std::size_t count, Rng rng) {
    std::vector<Point> batch;
    batch.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        batch.push_back(uniform_point(cube, rng));
    }
    return mean_of(oracle.predict(batch));
}

class IterRun {
public:
    IterRun(const Dataset& dataset, const Predictor& oracle, const IterConfig& config)
        : dataset_(dataset), oracle_(oracle), config_(config), domain_(dataset.domain()),
          domain_volume_(volume(domain_.bounds)), training_predictions_(oracle.predict(dataset.inputs())) {}

    void seed_cubes() {
        Rng rng = Rng::derived(config_.seed, kSeeding);
        const std::size_t attempts = 100 * config_.n_initial + dataset_.size();
        for (std::size_t a = 0; a < attempts && cubes_.size() < config_.n_initial; ++a) {
            const auto& x = dataset_[rng.index(dataset_.size())].x;
            const bool taken =
                std::any_of(cubes_.begin(), cubes_.end(), [&](const Hypercube& c) { return c.contains_closed(x); });
            if (!taken) {
                cubes_.push_back(Hypercube::at_point(x));
                versions_.push_back(0);
                means_.push_back(cube_mean(cubes_.size() - 1));
            }
        }
    }

    // Mean oracle output over a volume-proportional number of generated points
    // plus the training samples the cube contains.
    double cube_mean(std::size_t c) const {
        const Hypercube& cube = cubes_[c];
        const double fraction = domain_volume_ > 0.0 ? volume(cube) / domain_volume_ : 0.0;
        const std::size_t scale = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(fraction * 100.0)), 1, 10);
        const std::size_t generated = config_.points_per_cube * scale;

        Rng rng = Rng::derived(config_.seed, kCubeMean, c, versions_[c]);
        std::vector<Point> batch;
        for (std::size_t i = 0; i < generated; ++i) {
            batch.push_back(uniform_point(cube, rng));
        }
        double sum = 0.0;
        for (double v : oracle_.predict(batch)) {
            sum += v;
        }
        std::size_t count = generated;
        for (std::size_t s = 0; s < dataset_.size(); ++s) {
            if (contains(cube, dataset_[s].x, domain_)) {
                sum += training_predictions_[s];
                ++count;
            }
        }
        return sum / static_cast<double>(count);
    }

    IterResult run(const IterObserver& observer) {
        seed_cubes();
        IterResult result;
        result.converged = false;
        std::size_t iteration = 0;
        const std::size_t per_cube_sides = 2 * domain_.dim();
        while (true) {
            std::vector<IterCandidate> candidates;
            std::vector<std::size_t> per_cube(cubes_.size(), 0);
            for (std::size_t c = 0; c < cubes_.size(); ++c) {
                auto mine = candidate_cubes(cubes_, c, config_, domain_);
                per_cube[c] = mine.size();
                std::move(mine.begin(), mine.end(), std::back_inserter(candidates));
            }
            if (iteration >= config_.max_iterations) {
                // Converged only if nothing admissible was left.
                result.converged = best_candidate(candidates, iteration, per_cube_sides) == nullptr;
                break;
            }
            const IterCandidate* best = best_candidate(candidates, iteration, per_cube_sides);
            if (best == nullptr) {
                result.converged = true;
                break;
            }
            const IterCandidate committed = *best;
            cubes_[committed.cube] = hull(cubes_[committed.cube], committed.box);
            ++versions_[committed.cube];
            means_[committed.cube] = cube_mean(committed.cube);
            ++iteration;
            if (observer) {
                observer(IterStep{iteration, cubes_, per_cube, committed});
            }
        }
        result.iterations = iteration;
        result.cubes = cubes_;
        result.theory = to_theory();
        return result;
    }

private:
    // Lowest score wins; equal scores keep the earlier candidate, which is
    // already ordered by (cube, dim, side).
    const IterCandidate* best_candidate(const std::vector<IterCandidate>& candidates, std::size_t iteration,
                                        std::size_t per_cube_sides) const {
        const IterCandidate* best = nullptr;
        double best_score = 0.0;
        for (const auto& cand : candidates) {
            const std::size_t ordinal =
                cand.cube * per_cube_sides + 2 * cand.dim + (cand.side == Side::upper ? 1 : 0);
            Rng rng = Rng::derived(config_.seed, kCandidate, iteration, ordinal);
            const double mean = mean_prediction(oracle_, cand.box, config_.points_per_cube, rng);
            const double score = std::abs(mean - means_[cand.cube]);
            if (score <= config_.threshold && (best == nullptr || score < best_score)) {
                best = &cand;
                best_score = score;
            }
        }
        return best;
    }

    Theory to_theory() const {
        Theory theory;
        theory.domain = domain_;
        theory.feature_names = dataset_.feature_names();
        theory.target_name = dataset_.target_name();
        for (std::size_t c = 0; c < cubes_.size(); ++c) {
            theory.rules.push_back({Region{cubes_[c], {}}, ConstantOutput{means_[c]}});
        }
        theory.default_output = ConstantOutput{mean_of(training_predictions_)};
        return theory;
    }

    const Dataset& dataset_;
    const Predictor& oracle_;
    const IterConfig& config_;
    DomainBounds domain_;
    double domain_volume_;
    std::vector<double> training_predictions_;
    std::vector<Hypercube> cubes_;
    std::vector<std::size_t> versions_;
    std::vector<double> means_;
};

} // namespace

IterResult run_iter(const Dataset& dataset, const Predictor& oracle, const IterConfig& config,
                    const IterObserver& observer) {
    config.validate();
    if (dataset.empty()) {
        throw ContractError("extract_iter: empty dataset");
    }
    IterRun run(dataset, oracle, config);
    return run.run(observer);
}

} // namespace skex
