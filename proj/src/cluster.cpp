#include "skex/cluster.hpp"

#include "skex/error.hpp"
#include "skex/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace skex {

void ClusterConfig::validate() const {
    if (k && *k < 1) {
        throw ConfigError("cluster.k must be at least 1");
    }
    if (k_max < 1) {
        throw ConfigError("cluster.k_max must be at least 1");
    }
    if (!(output_weight >= 0.0) || !std::isfinite(output_weight)) {
        throw ConfigError("cluster.weight must be finite and non-negative");
    }
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw ConfigError("cluster.trim must lie in [0, 0.5)");
    }
}

namespace {

enum StreamTag : std::uint64_t { kKMeansStart = 11, kValidationSplit = 12 };

constexpr std::uint64_t kKMeansRestarts = 10;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Renumbers clusters by their smallest member so labels do not depend on
// the internal order in which an algorithm discovered them.
ClusterAssignment canonical(const std::vector<std::size_t>& raw, std::size_t k) {
    constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> relabel(k, unset);
    std::size_t next = 0;
    ClusterAssignment out;
    out.labels.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (relabel[raw[i]] == unset) {
            relabel[raw[i]] = next++;
        }
        out.labels[i] = relabel[raw[i]];
    }
    out.members.resize(next);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out.members[out.labels[i]].push_back(i);
    }
    return out;
}

void require_k(std::size_t n, std::size_t k) {
    if (k < 1 || k > n) {
        throw ConfigError("cluster count k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
    }
}

std::size_t nearest_center(std::span<const double> v, const std::vector<Point>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(v, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

namespace {

struct LloydRun {
    std::vector<std::size_t> labels;
    double inertia = 0.0;
};

LloydRun lloyd(std::span<const Point> vectors, std::size_t k, Rng rng) {
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors.front().size();

    // Farthest-point seeding.
    std::vector<Point> centers{vectors[rng.index(n)]};
    std::vector<double> min_d(n);
    for (std::size_t i = 0; i < n; ++i) {
        min_d[i] = squared_distance(vectors[i], centers.front());
    }
    while (centers.size() < k) {
        const auto far = static_cast<std::size_t>(std::max_element(min_d.begin(), min_d.end()) - min_d.begin());
        if (!(min_d[far] > 0.0)) {
            throw ConfigError("kmeans: fewer than k=" + std::to_string(k) + " distinct points");
        }
        centers.push_back(vectors[far]);
        for (std::size_t i = 0; i < n; ++i) {
            min_d[i] = std::min(min_d[i], squared_distance(vectors[i], centers.back()));
        }
    }

    std::vector<std::size_t> labels(n, 0);
    constexpr std::size_t max_iterations = 300;
    constexpr double tolerance = 1e-9;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = nearest_center(vectors[i], centers);
        }
        std::vector<Point> sums(k, Point(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[labels[i]];
            for (std::size_t j = 0; j < dim; ++j) {
                sums[labels[i]][j] += vectors[i][j];
            }
        }
        double max_move = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            Point next(dim);
            if (counts[c] == 0) {
                // Re-seat an empty cluster on the point worst served by its center.
                std::size_t worst = 0;
                double worst_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = squared_distance(vectors[i], centers[labels[i]]);
                    if (d > worst_d && counts[labels[i]] > 1) {
                        worst_d = d;
                        worst = i;
                    }
                }
                next = vectors[worst];
            } else {
                for (std::size_t j = 0; j < dim; ++j) {
                    next[j] = sums[c][j] / static_cast<double>(counts[c]);
                }
            }
            max_move = std::max(max_move, std::sqrt(squared_distance(next, centers[c])));
            centers[c] = std::move(next);
        }
        if (max_move <= tolerance) {
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = nearest_center(vectors[i], centers);
    }

    // Lloyd can in principle end with an empty cluster; hand it the point
    // farthest from its own center among clusters that can spare one.
    while (true) {
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t l : labels) {
            ++counts[l];
        }
        const auto empty = std::find(counts.begin(), counts.end(), 0);
        if (empty == counts.end()) {
            break;
        }
        std::size_t worst = n;
        double worst_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = squared_distance(vectors[i], centers[labels[i]]);
            if (counts[labels[i]] > 1 && d > worst_d) {
                worst_d = d;
                worst = i;
            }
        }
        labels[worst] = static_cast<std::size_t>(empty - counts.begin());
    }
    LloydRun run{std::move(labels), 0.0};
    std::vector<Point> means(k, Point(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[run.labels[i]];
        for (std::size_t j = 0; j < dim; ++j) {
            means[run.labels[i]][j] += vectors[i][j];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (double& m : means[c]) {
            m /= static_cast<double>(counts[c]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        run.inertia += squared_distance(vectors[i], means[run.labels[i]]);
    }
    return run;
}

} // namespace

ClusterAssignment kmeans(std::span<const Point> vectors, std::size_t k, std::uint64_t seed) {
    require_k(vectors.size(), k);
    // Several seeded farthest-point starts; the lowest inertia wins, earlier
    // restarts on ties.
    LloydRun best;
    for (std::uint64_t r = 0; r < kKMeansRestarts; ++r) {
        LloydRun run = lloyd(vectors, k, Rng::derived(seed, kKMeansStart, r));
        if (r == 0 || run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return canonical(best.labels, k);
}

ClusterAssignment agglomerative_ward(std::span<const Point> vectors, std::size_t k) {
    const std::size_t n = vectors.size();
    require_k(n, k);

    // Lance-Williams updates on squared Euclidean distances, merged with the
    // nearest-neighbour chain; the merge list is then replayed by height.
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i * n + j] = dist[j * n + i] = squared_distance(vectors[i], vectors[j]);
        }
    }
    std::vector<std::size_t> size(n, 1);
    std::vector<char> active(n, 1);
    struct Merge {
        std::size_t a;
        std::size_t b;
        double height;
    };
    std::vector<Merge> merges;
    merges.reserve(n - 1);
    std::vector<std::size_t> chain;
    std::size_t remaining = n;

    while (remaining > 1) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < n; ++i) {
                if (active[i]) {
                    chain.push_back(i);
                    break;
                }
            }
        }
        const std::size_t a = chain.back();
        const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
        std::size_t b = prev;
        double best = prev < n ? dist[a * n + prev] : std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c) {
            if (c == a || !active[c]) {
                continue;
            }
            if (dist[a * n + c] < best) {
                best = dist[a * n + c];
                b = c;
            }
        }
        if (b != prev) {
            chain.push_back(b);
            continue;
        }
        chain.pop_back();
        chain.pop_back();
        const std::size_t keep = std::min(a, b);
        const std::size_t drop = std::max(a, b);
        merges.push_back({keep, drop, best});
        const double na = static_cast<double>(size[keep]);
        const double nb = static_cast<double>(size[drop]);
        for (std::size_t c = 0; c < n; ++c) {
            if (!active[c] || c == keep || c == drop) {
                continue;
            }
            const double nc = static_cast<double>(size[c]);
            const double updated =
                ((na + nc) * dist[keep * n + c] + (nb + nc) * dist[drop * n + c] - nc * best) / (na + nb + nc);
            dist[keep * n + c] = dist[c * n + keep] = updated;
        }
        size[keep] += size[drop];
        active[drop] = 0;
        --remaining;
    }

    std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t m = 0; m + k < n; ++m) {
        const std::size_t ra = find(merges[m].a);
        const std::size_t rb = find(merges[m].b);
        parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = find(i);
    }
    return canonical(labels, n);
}

std::vector<Point> joint_vectors(const Dataset& dataset, std::span<const double> predictions, double output_weight) {
    if (predictions.size() != dataset.size()) {
        throw ContractError("joint_vectors: one prediction per sample required");
    }
    const MinMax scaling = normalize_params(dataset);
    const auto [lo, hi] = std::minmax_element(predictions.begin(), predictions.end());
    const double p_min = *lo;
    const double p_width = *hi - *lo;
    std::vector<Point> out;
    out.reserve(dataset.size());
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        Point v = scaling.scale(dataset[s].x);
        if (output_weight > 0.0) {
            v.push_back(output_weight * (p_width > 0.0 ? (predictions[s] - p_min) / p_width : 0.0));
        }
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

ClusterAssignment assign_with(const Dataset& dataset, std::span<const double> predictions, const ClusterConfig& config,
                              std::size_t k) {
    require_k(dataset.size(), k);
    const auto vectors = joint_vectors(dataset, predictions, config.output_weight);
    if (config.algorithm == ClusterAlgorithm::agglomerative_ward) {
        return agglomerative_ward(vectors, k);
    }
    return kmeans(vectors, k, config.seed);
}

// Upper bounds equal to the largest retained coordinate are moved up by one
// ulp so the half-open rule still admits that sample.
Hypercube rule_box(const Hypercube& cube, const DomainBounds& domain) {
    std::vector<Interval> bounds = cube.bounds();
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (bounds[i].hi < domain.upper(i)) {
            bounds[i].hi = std::nextafter(bounds[i].hi, std::numeric_limits<double>::infinity());
        }
    }
    return Hypercube(std::move(bounds));
}

ClusterResult build(const Dataset& dataset, std::span<const double> predictions, const ClusterConfig& config,
                    std::size_t k) {
    ClusterResult result;
    result.k = k;
    result.assignment = assign_with(dataset, predictions, config, k);
    const auto& members = result.assignment.members;
    const DomainBounds& domain = dataset.domain();

    std::vector<Hypercube> boxes;
    std::vector<ClusterPriority> priority;
    for (std::size_t c = 0; c < members.size(); ++c) {
        std::vector<Point> points;
        for (std::size_t s : members[c]) {
            points.push_back(dataset[s].x);
        }
        result.cubes.push_back(enclosing_cube(points, config.trim_fraction));
        boxes.push_back(rule_box(result.cubes.back(), domain));

        std::vector<std::size_t> kept;
        for (std::size_t s : members[c]) {
            if (contains(boxes.back(), dataset[s].x, domain)) {
                kept.push_back(s);
            }
        }
        result.retained.push_back(std::move(kept));
        priority.push_back(cluster_priority(c, members[c], result.cubes.back()));
    }

    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return priority[a].before(priority[b]); });

    Theory& theory = result.theory;
    theory.domain = domain;
    theory.feature_names = dataset.feature_names();
    theory.target_name = dataset.target_name();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t c = order[rank];
        Rule rule;
        rule.region.outer = boxes[c];
        for (std::size_t higher = 0; higher < rank; ++higher) {
            if (overlaps(boxes[order[higher]], boxes[c])) {
                rule.region.holes.push_back(boxes[order[higher]]);
            }
        }
        const auto& fit_on = result.retained[c].empty() ? members[c] : result.retained[c];
        std::vector<Point> xs;
        std::vector<double> ys;
        for (std::size_t s : fit_on) {
            xs.push_back(dataset[s].x);
            ys.push_back(predictions[s]);
        }
        if (config.output_kind == OutputKind::linear) {
            rule.output = fit_linear(xs, ys);
        } else {
            rule.output = ConstantOutput{mean_of(ys)};
        }
        theory.rules.push_back(std::move(rule));
        result.rule_cluster.push_back(c);
    }
    theory.default_output = ConstantOutput{mean_of(predictions)};
    return result;
}

} // namespace

ClusterAssignment cluster_assign(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config) {
    config.validate();
    if (!config.k) {
        throw ContractError("cluster_assign: k must be fixed");
    }
    const auto predictions = oracle.predict(dataset.inputs());
    return assign_with(dataset, predictions, config, *config.k);
}

ClusterPriority cluster_priority(std::size_t index, std::span<const std::size_t> members, const Hypercube& cube) {
    return {members.size(), volume(cube), index};
}

std::size_t select_k(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config) {
    config.validate();
    const std::size_t n = dataset.size();
    if (config.k_max == 1 || n < 2) {
        return 1;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derived(config.seed, kValidationSplit);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.index(i + 1)]);
    }
    const std::size_t n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n))), 1, n - 1);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    const Dataset train = dataset.subset(train_idx);
    const Dataset validation = dataset.subset(val_idx);

    const auto train_predictions = oracle.predict(train.inputs());
    const auto val_inputs = validation.inputs();
    const auto val_predictions = oracle.predict(val_inputs);

    constexpr double tie_tolerance = 1e-9;
    std::size_t best_k = 1;
    double best_mae = std::numeric_limits<double>::infinity();
    const std::size_t k_hi = std::min(config.k_max, train.size());
    for (std::size_t k = 1; k <= k_hi; ++k) {
        ClusterResult candidate;
        try {
            candidate = build(train, train_predictions, config, k);
        } catch (const ConfigError&) {
            // Not enough distinct points for this many clusters.
            break;
        }
        double mae = 0.0;
        for (std::size_t v = 0; v < val_inputs.size(); ++v) {
            mae += std::abs(predict_theory(candidate.theory, val_inputs[v]) - val_predictions[v]);
        }
        mae /= static_cast<double>(val_inputs.size());
        if (mae < best_mae - tie_tolerance) {
            best_mae = mae;
            best_k = k;
        }
    }
    return best_k;
}

ClusterResult run_clustered(const Dataset& dataset, const Predictor& oracle, const ClusterConfig& config) {
    config.validate();
    if (dataset.empty()) {
        throw ContractError("extract_clustered: empty dataset");
    }
    const std::size_t k = config.k ? *config.k : select_k(dataset, oracle, config);
    const auto predictions = oracle.predict(dataset.inputs());
    return build(dataset, predictions, config, k);
}

} // namespace skex
