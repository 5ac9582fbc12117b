#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace skex {

using Point = std::vector<double>;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool degenerate() const noexcept { return hi <= lo; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned box, one interval per input dimension.
///
/// Zero-width intervals are allowed: ITER seeds start as single points and
/// grow one face at a time.
class Hypercube {
public:
    Hypercube() = default;
    explicit Hypercube(std::vector<Interval> bounds);

    /// Degenerate cube sitting on a single point.
    static Hypercube at_point(std::span<const double> point);

    std::size_t dim() const noexcept { return bounds_.size(); }
    const Interval& operator[](std::size_t i) const { return bounds_[i]; }
    Interval& operator[](std::size_t i) { return bounds_[i]; }
    const std::vector<Interval>& bounds() const noexcept { return bounds_; }

    /// Closed-box membership, ignoring the half-open cell convention.
    bool contains_closed(std::span<const double> point) const;

    friend bool operator==(const Hypercube&, const Hypercube&) = default;

private:
    std::vector<Interval> bounds_;
};

/// The whole input feature space of one extraction run.
struct DomainBounds {
    Hypercube bounds;

    std::size_t dim() const noexcept { return bounds.dim(); }
    double upper(std::size_t i) const { return bounds[i].hi; }
};

/// Outer box minus a list of excluded boxes ("difference cube").
struct Region {
    Hypercube outer;
    std::vector<Hypercube> holes;

    friend bool operator==(const Region&, const Region&) = default;
};

enum class Side { lower, upper };

/// Membership under the half-open convention: lo <= x < hi per dimension,
/// with hi inclusive where it coincides with the domain upper bound.
bool contains(const Hypercube& cube, std::span<const double> point, const DomainBounds& domain);

bool region_contains(const Region& region, std::span<const double> point, const DomainBounds& domain);

/// Per-dimension nearest-rank [q, 1-q] quantile box of `points`.
/// trim_fraction = 0 gives the exact min/max box.
Hypercube enclosing_cube(std::span<const Point> points, double trim_fraction = 0.0);

/// Cells of an equal-width grid over `cube`, dimension 0 varying slowest.
std::vector<Hypercube> split_grid(const Hypercube& cube, std::span<const std::size_t> slices);

/// Temporary side-cube adjacent to one face of `cube`, at most `width` thick
/// along `dim`, clipped to the domain and stopped at the nearest blocker.
/// Empty when no room is left on that side.
std::optional<Hypercube> expand(const Hypercube& cube, std::size_t dim, Side side, double width,
                                const DomainBounds& domain, std::span<const Hypercube> blockers);

/// True iff the intersection has positive extent in every dimension.
bool overlaps(const Hypercube& a, const Hypercube& b);

/// Union of two boxes that share a full face. Throws ContractError otherwise.
Hypercube merge_adjacent(const Hypercube& a, const Hypercube& b);

/// True when merge_adjacent(a, b) would succeed.
bool full_face_adjacent(const Hypercube& a, const Hypercube& b);

double volume(const Hypercube& cube);

/// Bounding box of the union of `a` and `b`.
Hypercube hull(const Hypercube& a, const Hypercube& b);

} // namespace skex
