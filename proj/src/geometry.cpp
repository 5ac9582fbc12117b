#include "skex/geometry.hpp"

#include "skex/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skex {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                            std::to_string(b) + ")");
    }
}

bool in_half_open(const Interval& iv, double x, double domain_hi) {
    if (x < iv.lo) {
        return false;
    }
    return x < iv.hi || (iv.hi == domain_hi && x == iv.hi);
}

// Whether two intervals on a dimension orthogonal to the expansion direction
// share interior. A zero-width interval interferes when it sits strictly
// inside the other one, or on the same coordinate as another zero-width one.
bool interferes(const Interval& t, const Interval& b) {
    const bool t_flat = t.degenerate();
    const bool b_flat = b.degenerate();
    if (!t_flat && !b_flat) {
        return std::max(t.lo, b.lo) < std::min(t.hi, b.hi);
    }
    if (t_flat && b_flat) {
        return t.lo == b.lo;
    }
    if (t_flat) {
        return b.lo < t.lo && t.lo < b.hi;
    }
    return t.lo < b.lo && b.lo < t.hi;
}

} // namespace

Hypercube::Hypercube(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
    if (bounds_.empty()) {
        throw ContractError("Hypercube: at least one dimension required");
    }
    for (const auto& iv : bounds_) {
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
            throw ContractError("Hypercube: each interval needs finite lo <= hi");
        }
    }
}

Hypercube Hypercube::at_point(std::span<const double> point) {
    std::vector<Interval> bounds;
    bounds.reserve(point.size());
    for (double x : point) {
        bounds.push_back({x, x});
    }
    return Hypercube(std::move(bounds));
}

bool Hypercube::contains_closed(std::span<const double> point) const {
    require_same_dim(dim(), point.size(), "contains_closed");
    for (std::size_t i = 0; i < dim(); ++i) {
        if (point[i] < bounds_[i].lo || point[i] > bounds_[i].hi) {
            return false;
        }
    }
    return true;
}

bool contains(const Hypercube& cube, std::span<const double> point, const DomainBounds& domain) {
    require_same_dim(cube.dim(), point.size(), "contains");
    require_same_dim(cube.dim(), domain.dim(), "contains");
    for (std::size_t i = 0; i < cube.dim(); ++i) {
        if (!in_half_open(cube[i], point[i], domain.upper(i))) {
            return false;
        }
    }
    return true;
}

bool region_contains(const Region& region, std::span<const double> point, const DomainBounds& domain) {
    if (!contains(region.outer, point, domain)) {
        return false;
    }
    return std::none_of(region.holes.begin(), region.holes.end(),
                        [&](const Hypercube& hole) { return contains(hole, point, domain); });
}

Hypercube enclosing_cube(std::span<const Point> points, double trim_fraction) {
    if (points.empty()) {
        throw ContractError("enclosing_cube: empty point list");
    }
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw ContractError("enclosing_cube: trim_fraction must lie in [0, 0.5)");
    }
    const std::size_t d = points.front().size();
    const std::size_t n = points.size();
    // Nearest rank (1-based): ceil(p * n). The epsilon absorbs products such
    // as 0.98 * 100 landing a hair above an integer.
    const auto rank = [n](double p) {
        const double r = std::ceil(p * static_cast<double>(n) - 1e-9);
        return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(r, 1.0)), 1, n);
    };
    const std::size_t lo_rank = rank(trim_fraction);
    const std::size_t hi_rank = rank(1.0 - trim_fraction);

    std::vector<Interval> bounds(d);
    std::vector<double> coords(n);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t p = 0; p < n; ++p) {
            require_same_dim(points[p].size(), d, "enclosing_cube");
            coords[p] = points[p][i];
        }
        std::sort(coords.begin(), coords.end());
        bounds[i] = {coords[lo_rank - 1], coords[hi_rank - 1]};
    }
    return Hypercube(std::move(bounds));
}

std::vector<Hypercube> split_grid(const Hypercube& cube, std::span<const std::size_t> slices) {
    require_same_dim(cube.dim(), slices.size(), "split_grid");
    const std::size_t d = cube.dim();
    std::vector<std::vector<Interval>> pieces(d);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t s = slices[i];
        if (s == 0) {
            throw ContractError("split_grid: slice counts must be positive");
        }
        const Interval& iv = cube[i];
        const auto edge = [&](std::size_t j) {
            return j == s ? iv.hi : iv.lo + iv.width() * static_cast<double>(j) / static_cast<double>(s);
        };
        for (std::size_t j = 0; j < s; ++j) {
            pieces[i].push_back({edge(j), edge(j + 1)});
        }
        total *= s;
    }

    std::vector<Hypercube> cells;
    cells.reserve(total);
    std::vector<std::size_t> index(d, 0);
    for (std::size_t c = 0; c < total; ++c) {
        std::vector<Interval> bounds(d);
        for (std::size_t i = 0; i < d; ++i) {
            bounds[i] = pieces[i][index[i]];
        }
        cells.emplace_back(std::move(bounds));
        // Odometer increment, last dimension fastest.
        for (std::size_t i = d; i-- > 0;) {
            if (++index[i] < slices[i]) {
                break;
            }
            index[i] = 0;
        }
    }
    return cells;
}

std::optional<Hypercube> expand(const Hypercube& cube, std::size_t dim, Side side, double width,
                                const DomainBounds& domain, std::span<const Hypercube> blockers) {
    require_same_dim(cube.dim(), domain.dim(), "expand");
    if (dim >= cube.dim()) {
        throw ContractError("expand: dimension index out of range");
    }
    if (!(width >= 0.0) || !std::isfinite(width)) {
        throw ContractError("expand: width must be finite and non-negative");
    }

    const Interval face = cube[dim];
    const Interval limit = domain.bounds[dim];
    Interval slab;
    if (side == Side::lower) {
        slab = {std::max(face.lo - width, limit.lo), face.lo};
    } else {
        slab = {face.hi, std::min(face.hi + width, limit.hi)};
    }
    if (!(slab.lo < slab.hi)) {
        return std::nullopt;
    }

    for (const auto& blocker : blockers) {
        require_same_dim(blocker.dim(), cube.dim(), "expand");
        bool in_the_way = true;
        for (std::size_t j = 0; j < cube.dim() && in_the_way; ++j) {
            in_the_way = j == dim || interferes(cube[j], blocker[j]);
        }
        if (!in_the_way) {
            continue;
        }
        const Interval& b = blocker[dim];
        if (side == Side::lower) {
            if (b.lo < face.lo && b.hi > slab.lo) {
                slab.lo = std::max(slab.lo, std::min(face.lo, b.hi));
            }
        } else {
            if (b.hi > face.hi && b.lo < slab.hi) {
                slab.hi = std::min(slab.hi, std::max(face.hi, b.lo));
            }
        }
    }
    if (!(slab.lo < slab.hi)) {
        return std::nullopt;
    }

    std::vector<Interval> bounds = cube.bounds();
    bounds[dim] = slab;
    return Hypercube(std::move(bounds));
}

bool overlaps(const Hypercube& a, const Hypercube& b) {
    require_same_dim(a.dim(), b.dim(), "overlaps");
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (!(std::max(a[i].lo, b[i].lo) < std::min(a[i].hi, b[i].hi))) {
            return false;
        }
    }
    return true;
}

bool full_face_adjacent(const Hypercube& a, const Hypercube& b) {
    if (a.dim() != b.dim()) {
        return false;
    }
    std::size_t contiguous = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (a[i] == b[i]) {
            continue;
        }
        if (a[i].hi == b[i].lo || b[i].hi == a[i].lo) {
            ++contiguous;
        } else {
            return false;
        }
    }
    return contiguous == 1;
}

Hypercube merge_adjacent(const Hypercube& a, const Hypercube& b) {
    require_same_dim(a.dim(), b.dim(), "merge_adjacent");
    if (!full_face_adjacent(a, b)) {
        throw ContractError("merge_adjacent: boxes do not share a full face");
    }
    return hull(a, b);
}

double volume(const Hypercube& cube) {
    double v = 1.0;
    for (const auto& iv : cube.bounds()) {
        v *= iv.width();
    }
    return v;
}

Hypercube hull(const Hypercube& a, const Hypercube& b) {
    require_same_dim(a.dim(), b.dim(), "hull");
    std::vector<Interval> bounds(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        bounds[i] = {std::min(a[i].lo, b[i].lo), std::max(a[i].hi, b[i].hi)};
    }
    return Hypercube(std::move(bounds));
}

} // namespace skex
