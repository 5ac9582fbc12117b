#include "skex/data.hpp"

#include "skex/error.hpp"
#include "skex/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace skex {

namespace {

DomainBounds bounds_of(const std::vector<Sample>& samples, std::size_t d) {
    if (samples.empty()) {
        throw ContractError("Dataset: at least one sample required");
    }
    std::vector<Interval> bounds(d, {std::numeric_limits<double>::infinity(),
                                     -std::numeric_limits<double>::infinity()});
    for (const auto& s : samples) {
        if (s.x.size() != d) {
            throw ContractError("Dataset: inconsistent sample dimension");
        }
        for (std::size_t i = 0; i < d; ++i) {
            bounds[i].lo = std::min(bounds[i].lo, s.x[i]);
            bounds[i].hi = std::max(bounds[i].hi, s.x[i]);
        }
    }
    return DomainBounds{Hypercube(std::move(bounds))};
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    for (auto& f : fields) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
            f.remove_prefix(1);
        }
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
            f.remove_suffix(1);
        }
    }
    return fields;
}

} // namespace

Dataset::Dataset(std::vector<Sample> samples, std::vector<std::string> feature_names, std::string target_name)
    : samples_(std::move(samples)), feature_names_(std::move(feature_names)), target_name_(std::move(target_name)),
      domain_(bounds_of(samples_, feature_names_.size())) {
    validate();
}

Dataset::Dataset(std::vector<Sample> samples, std::vector<std::string> feature_names, std::string target_name,
                 DomainBounds domain)
    : samples_(std::move(samples)), feature_names_(std::move(feature_names)), target_name_(std::move(target_name)),
      domain_(std::move(domain)) {
    if (domain_.dim() != feature_names_.size()) {
        throw ContractError("Dataset: domain dimension differs from feature count");
    }
    validate();
}

void Dataset::validate() const {
    if (samples_.empty()) {
        throw ContractError("Dataset: at least one sample required");
    }
    if (feature_names_.empty()) {
        throw ContractError("Dataset: at least one feature required");
    }
    for (const auto& s : samples_) {
        if (s.x.size() != dim()) {
            throw ContractError("Dataset: inconsistent sample dimension");
        }
        if (!std::isfinite(s.y) || !std::all_of(s.x.begin(), s.x.end(), [](double v) { return std::isfinite(v); })) {
            throw ContractError("Dataset: non-finite sample value");
        }
        if (!domain_.bounds.contains_closed(s.x)) {
            throw ContractError("Dataset: sample outside domain");
        }
    }
}

std::vector<Point> Dataset::inputs() const {
    std::vector<Point> xs;
    xs.reserve(samples_.size());
    for (const auto& s : samples_) {
        xs.push_back(s.x);
    }
    return xs;
}

std::vector<double> Dataset::targets() const {
    std::vector<double> ys;
    ys.reserve(samples_.size());
    for (const auto& s : samples_) {
        ys.push_back(s.y);
    }
    return ys;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    std::vector<Sample> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) {
        picked.push_back(samples_.at(i));
    }
    return Dataset(std::move(picked), feature_names_, target_name_, domain_);
}

std::vector<std::string> default_feature_names(std::size_t d) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < d; ++i) {
        names.push_back("x" + std::to_string(i + 1));
    }
    return names;
}

double Predictor::predict_one(std::span<const double> x) const {
    const std::vector<Point> batch{Point(x.begin(), x.end())};
    return predict(batch).front();
}

Point MinMax::scale(std::span<const double> x) const {
    Point out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = scale(i, x[i]);
    }
    return out;
}

MinMax normalize_params(std::span<const Point> points) {
    if (points.empty()) {
        throw ContractError("normalize_params: empty dataset");
    }
    const std::size_t d = points.front().size();
    MinMax mm{std::vector<double>(d, std::numeric_limits<double>::infinity()),
              std::vector<double>(d, -std::numeric_limits<double>::infinity())};
    for (const auto& p : points) {
        for (std::size_t i = 0; i < d; ++i) {
            mm.min[i] = std::min(mm.min[i], p[i]);
            mm.max[i] = std::max(mm.max[i], p[i]);
        }
    }
    return mm;
}

MinMax normalize_params(const Dataset& dataset) {
    const auto xs = dataset.inputs();
    return normalize_params(xs);
}

double AffineFormula::operator()(std::span<const double> x) const {
    double v = intercept;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        v += coefficients[i] * x[i];
    }
    return v;
}

void PiecewiseSpec::validate() const {
    if (pieces.empty()) {
        throw ContractError("PiecewiseSpec: no pieces");
    }
    const std::size_t d = pieces.front().cube.dim();
    for (const auto& p : pieces) {
        if (p.cube.dim() != d || p.formula.coefficients.size() != d) {
            throw ContractError("PiecewiseSpec: inconsistent dimensions");
        }
        if (volume(p.cube) <= 0.0) {
            throw ContractError("PiecewiseSpec: pieces need positive volume");
        }
    }
}

void TriRegionSpec::validate() const {
    PiecewiseSpec::validate();
    if (pieces.size() != 3 || dim() != 2) {
        throw ContractError("TriRegionSpec: exactly three two-dimensional regions required");
    }
    const Hypercube unit({{0.0, 1.0}, {0.0, 1.0}});
    for (std::size_t i = 0; i < 3; ++i) {
        for (const auto& iv : pieces[i].cube.bounds()) {
            if (iv.lo < 0.0 || iv.hi > 1.0) {
                throw ContractError("TriRegionSpec: regions must lie inside the unit square");
            }
        }
        for (std::size_t j = i + 1; j < 3; ++j) {
            if (overlaps(pieces[i].cube, pieces[j].cube)) {
                throw ContractError("TriRegionSpec: regions overlap");
            }
        }
    }
}

namespace {

Hypercube box(double x0, double x1, double y0, double y1) { return Hypercube({{x0, x1}, {y0, y1}}); }

TriRegionSpec tri_with(std::string name, AffineFormula f1, AffineFormula f2, AffineFormula f3) {
    TriRegionSpec spec;
    spec.name = std::move(name);
    spec.pieces = {
        {box(0.0, 0.4, 0.0, 0.4), std::move(f1)},
        {box(0.6, 1.0, 0.0, 0.4), std::move(f2)},
        {box(0.0, 1.0, 0.6, 1.0), std::move(f3)},
    };
    return spec;
}

} // namespace

TriRegionSpec tri_linear_spec() {
    return tri_with("tri-linear", {1.0, {1.0, 1.0}}, {0.0, {2.0, -1.0}}, {0.5, {-1.0, 2.0}});
}

TriRegionSpec tri_constant_spec() {
    return tri_with("tri-constant", {1.0, {0.0, 0.0}}, {2.0, {0.0, 0.0}}, {3.0, {0.0, 0.0}});
}

PiecewiseSpec single_plane_spec() {
    PiecewiseSpec spec;
    spec.name = "single-plane";
    spec.pieces = {{box(0.0, 1.0, 0.0, 1.0), {0.5, {1.0, -0.5}}}};
    return spec;
}

PiecewiseSpec nested_square_spec() {
    // The square is listed three times so it holds more samples than the L.
    PiecewiseSpec spec;
    spec.name = "nested-square";
    const AffineFormula square{5.0, {0.0, 0.0}};
    const AffineFormula ell{0.0, {0.0, 0.0}};
    spec.pieces = {
        {box(0.1, 0.3, 0.1, 0.3), square},
        {box(0.1, 0.3, 0.1, 0.3), square},
        {box(0.1, 0.3, 0.1, 0.3), square},
        {box(0.4, 0.6, 0.0, 0.6), ell},
        {box(0.0, 0.4, 0.4, 0.6), ell},
    };
    return spec;
}

std::vector<std::string> benchmark_names() { return {"tri-linear", "tri-constant", "single-plane", "nested-square"}; }

PiecewiseSpec benchmark_spec(const std::string& name) {
    if (name == "tri-linear") {
        return tri_linear_spec();
    }
    if (name == "tri-constant") {
        return tri_constant_spec();
    }
    if (name == "single-plane") {
        return single_plane_spec();
    }
    if (name == "nested-square") {
        return nested_square_spec();
    }
    throw ConfigError("unknown benchmark spec '" + name + "'");
}

Dataset generate(const PiecewiseSpec& spec, std::size_t n_per_region, double noise_sd, std::uint64_t seed) {
    spec.validate();
    if (n_per_region < 1) {
        throw ContractError("generate: n_per_region must be at least 1");
    }
    if (!(noise_sd >= 0.0)) {
        throw ContractError("generate: noise_sd must be non-negative");
    }
    Rng rng(seed);
    std::vector<Sample> samples;
    samples.reserve(spec.pieces.size() * n_per_region);
    for (const auto& piece : spec.pieces) {
        for (std::size_t n = 0; n < n_per_region; ++n) {
            Sample s;
            s.x.resize(spec.dim());
            for (std::size_t i = 0; i < spec.dim(); ++i) {
                s.x[i] = rng.uniform(piece.cube[i].lo, piece.cube[i].hi);
            }
            s.y = piece.formula(s.x);
            if (noise_sd > 0.0) {
                s.y += noise_sd * rng.normal();
            }
            samples.push_back(std::move(s));
        }
    }
    return Dataset(std::move(samples), default_feature_names(spec.dim()));
}

ExactPiecewise::ExactPiecewise(PiecewiseSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::size_t ExactPiecewise::piece_of(std::span<const double> x) const {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < spec_.pieces.size(); ++p) {
        const Hypercube& cube = spec_.pieces[p].cube;
        double dist = 0.0;
        for (std::size_t i = 0; i < cube.dim(); ++i) {
            const double gap = std::max({cube[i].lo - x[i], 0.0, x[i] - cube[i].hi});
            dist += gap * gap;
        }
        if (dist == 0.0) {
            return p;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = p;
        }
    }
    return best;
}

double ExactPiecewise::value(std::span<const double> x) const {
    if (x.size() != spec_.dim()) {
        throw ContractError("ExactPiecewise: dimension mismatch");
    }
    return spec_.pieces[piece_of(x)].formula(x);
}

std::vector<double> ExactPiecewise::predict(std::span<const Point> batch) const {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& x : batch) {
        out.push_back(value(x));
    }
    return out;
}

KNNRegressor::KNNRegressor(const Dataset& training, std::size_t k)
    : targets_(training.targets()), scaling_(normalize_params(training)), k_(k) {
    if (k == 0 || k > training.size()) {
        throw ConfigError("KNNRegressor: k must lie in [1, " + std::to_string(training.size()) + "], got " +
                          std::to_string(k));
    }
    scaled_.reserve(training.size());
    for (const auto& s : training.samples()) {
        scaled_.push_back(scaling_.scale(s.x));
    }
}

double KNNRegressor::predict_point(std::span<const double> x) const {
    if (x.size() != scaling_.min.size()) {
        throw ContractError("KNNRegressor: dimension mismatch");
    }
    const Point q = scaling_.scale(x);
    std::vector<std::pair<double, std::size_t>> dist(scaled_.size());
    for (std::size_t n = 0; n < scaled_.size(); ++n) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double diff = scaled_[n][i] - q[i];
            d2 += diff * diff;
        }
        dist[n] = {d2, n};
    }
    // Pair ordering breaks distance ties by lower sample index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
        sum += targets_[dist[j].second];
    }
    return sum / static_cast<double>(k_);
}

std::vector<double> KNNRegressor::predict(std::span<const Point> batch) const {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& x : batch) {
        out.push_back(predict_point(x));
    }
    return out;
}

std::string to_csv(const Dataset& dataset) {
    std::string text;
    for (const auto& name : dataset.feature_names()) {
        text += name;
        text += ',';
    }
    text += dataset.target_name();
    text += '\n';
    for (const auto& s : dataset.samples()) {
        for (double v : s.x) {
            text += format_double(v);
            text += ',';
        }
        text += format_double(s.y);
        text += '\n';
    }
    return text;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    out << to_csv(dataset);
    if (!out) {
        throw DataError("failed writing '" + path.string() + "'");
    }
}

Dataset parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        for (auto f : split_fields(line)) {
            header.emplace_back(f);
        }
        break;
    }
    if (header.size() < 2) {
        throw DataError("CSV: header needs at least one feature and a target column");
    }
    const std::size_t cols = header.size();

    std::vector<Sample> samples;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != cols) {
            throw DataError("CSV row " + std::to_string(row) + ": expected " + std::to_string(cols) +
                            " columns, found " + std::to_string(fields.size()));
        }
        std::vector<double> values(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto f = fields[c];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[c]);
            if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(values[c])) {
                throw DataError("CSV row " + std::to_string(row) + ": non-numeric value '" + std::string(f) + "'");
            }
        }
        Sample s;
        s.y = values.back();
        values.pop_back();
        s.x = std::move(values);
        samples.push_back(std::move(s));
    }
    if (samples.empty()) {
        throw DataError("CSV: no data rows");
    }
    std::string target = header.back();
    header.pop_back();
    return Dataset(std::move(samples), std::move(header), std::move(target));
}

Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

Dataset csv_roundtrip(const Dataset& dataset, const std::filesystem::path& path) {
    write_csv(dataset, path);
    return read_csv(path);
}

} // namespace skex
