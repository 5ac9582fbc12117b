#pragma once

#include "skex/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace skex {

struct Sample {
    Point x;
    double y = 0.0;
};

/// Immutable collection of samples sharing one input dimension.
class Dataset {
public:
    /// Builds the dataset and its domain (per-dimension min/max of the samples).
    Dataset(std::vector<Sample> samples, std::vector<std::string> feature_names,
            std::string target_name = "y");

    /// Same, but with an explicit domain that must contain every sample.
    Dataset(std::vector<Sample> samples, std::vector<std::string> feature_names, std::string target_name,
            DomainBounds domain);

    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t dim() const noexcept { return feature_names_.size(); }

    const std::vector<Sample>& samples() const noexcept { return samples_; }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::string& target_name() const noexcept { return target_name_; }
    const DomainBounds& domain() const noexcept { return domain_; }

    std::vector<Point> inputs() const;
    std::vector<double> targets() const;

    /// Samples at `indices`, keeping this dataset's domain.
    Dataset subset(std::span<const std::size_t> indices) const;

private:
    void validate() const;

    std::vector<Sample> samples_;
    std::vector<std::string> feature_names_;
    std::string target_name_;
    DomainBounds domain_;
};

/// Default feature names x1..xd.
std::vector<std::string> default_feature_names(std::size_t d);

/// The black box: only input/output behaviour is visible to extractors.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual std::vector<double> predict(std::span<const Point> batch) const = 0;

    double predict_one(std::span<const double> x) const;
};

/// Per-dimension scaling to [0, 1]. Zero-width dimensions scale to 0.
struct MinMax {
    std::vector<double> min;
    std::vector<double> max;

    double scale(std::size_t i, double v) const {
        const double w = max[i] - min[i];
        return w > 0.0 ? (v - min[i]) / w : 0.0;
    }
    Point scale(std::span<const double> x) const;
};

MinMax normalize_params(const Dataset& dataset);
MinMax normalize_params(std::span<const Point> points);

/// Output formula attached to a benchmark region: intercept + sum coef_i * x_i.
/// A constant formula has all-zero coefficients.
struct AffineFormula {
    double intercept = 0.0;
    std::vector<double> coefficients;

    double operator()(std::span<const double> x) const;
};

struct PiecewisePiece {
    Hypercube cube;
    AffineFormula formula;
};

/// Closed-form piecewise function used as a ground-truth black box.
struct PiecewiseSpec {
    std::string name;
    std::vector<PiecewisePiece> pieces;

    std::size_t dim() const { return pieces.front().cube.dim(); }
    void validate() const;
};

/// Three pairwise non-overlapping regions inside the unit square.
struct TriRegionSpec : PiecewiseSpec {
    void validate() const;
};

TriRegionSpec tri_linear_spec();
TriRegionSpec tri_constant_spec();
/// One affine plane over the whole unit square.
PiecewiseSpec single_plane_spec();
/// Dense square cluster nested inside the bounding box of an L-shaped cluster.
PiecewiseSpec nested_square_spec();

/// Looks up one of the built-in specs by name
/// ("tri-linear", "tri-constant", "single-plane", "nested-square").
PiecewiseSpec benchmark_spec(const std::string& name);
std::vector<std::string> benchmark_names();

/// Uniform samples inside every piece, y = formula(x) + N(0, noise_sd).
Dataset generate(const PiecewiseSpec& spec, std::size_t n_per_region, double noise_sd, std::uint64_t seed);

inline Dataset generate_tri(const TriRegionSpec& spec, std::size_t n_per_region, double noise_sd,
                            std::uint64_t seed) {
    spec.validate();
    return generate(spec, n_per_region, noise_sd, seed);
}

/// Evaluates the piece containing x (closed boxes, first match); outside all
/// pieces, the formula of the nearest piece (ties to the lower index).
class ExactPiecewise final : public Predictor {
public:
    explicit ExactPiecewise(PiecewiseSpec spec);

    std::vector<double> predict(std::span<const Point> batch) const override;
    double value(std::span<const double> x) const;

    /// Index of the piece whose closed box holds x, or the nearest one.
    std::size_t piece_of(std::span<const double> x) const;
    const PiecewiseSpec& spec() const noexcept { return spec_; }

private:
    PiecewiseSpec spec_;
};

/// k-nearest-neighbour regressor over min-max-normalized features.
class KNNRegressor final : public Predictor {
public:
    KNNRegressor(const Dataset& training, std::size_t k);

    std::vector<double> predict(std::span<const Point> batch) const override;
    double predict_point(std::span<const double> x) const;

    std::size_t k() const noexcept { return k_; }

private:
    std::vector<Point> scaled_;
    std::vector<double> targets_;
    MinMax scaling_;
    std::size_t k_;
};

inline double knn_predict(const KNNRegressor& model, std::span<const double> x) {
    return model.predict_point(x);
}

/// CSV with header "<features...>,<target>"; values written with 17 significant digits.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
std::string to_csv(const Dataset& dataset);
Dataset read_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text);

/// Writes and reads back `dataset`.
Dataset csv_roundtrip(const Dataset& dataset, const std::filesystem::path& path);

} // namespace skex
