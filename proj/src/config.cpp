#include "skex/config.hpp"

#include "skex/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace skex {

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"seed", "42", "global seed for data generation and every extractor"},
        {"data.spec", "", "built-in benchmark: tri-linear, tri-constant, single-plane, nested-square"},
        {"data.n", "100", "samples per benchmark region"},
        {"data.noise", "0", "standard deviation of Gaussian target noise"},
        {"oracle", "auto", "black box: exact (needs data.spec), knn, or auto"},
        {"oracle.k", "5", "neighbours for the knn oracle"},
        {"eval.holdout", "0", "fraction of samples held out for evaluation (0 = evaluate on training data)"},
        {"render.precision", "3", "decimal digits in rendered theories"},
        {"plot.g", "50", "lattice points per axis for plotgrid"},
        {"iter.n_initial", "3", "number of seed cubes"},
        {"iter.update", "0.05", "expansion step as a fraction of each domain width"},
        {"iter.threshold", "0.1", "largest admissible mean difference (output units)"},
        {"iter.max_iterations", "600", "iteration budget"},
        {"iter.m", "20", "oracle queries per temporary cube"},
        {"grid.depth", "2", "number of refinement levels"},
        {"grid.slices", "2", "slices per feature, ';' between levels, ',' between features"},
        {"grid.threshold", "0.1", "largest admissible cell deviation (output units)"},
        {"grid.min_samples", "3", "cells with fewer samples are not split"},
        {"grid.output", "constant", "rule output: constant (GridEx) or linear (GridREx)"},
        {"cluster.k", "auto", "number of clusters or 'auto'"},
        {"cluster.k_max", "6", "largest k tried in auto mode"},
        {"cluster.algorithm", "agglomerative-ward", "kmeans or agglomerative-ward"},
        {"cluster.weight", "0.25", "weight of the normalized output in the clustering metric"},
        {"cluster.trim", "0.05", "per-dimension quantile trimmed from each side of a cluster box"},
        {"cluster.output", "linear", "rule output: constant or linear"},
    };
    return keys;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
    const auto& keys = config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
    return it == keys.end() ? nullptr : &*it;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    }
    return value;
}

} // namespace

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        try {
            config.set_assignment(line);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(row) + ": " + e.what());
        }
    }
    return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (find_key(key) == nullptr) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

void RunConfig::set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string RunConfig::get(const std::string& key) const {
    if (const auto it = values_.find(key); it != values_.end()) {
        return it->second;
    }
    const ConfigKey* spec = find_key(key);
    if (spec == nullptr) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    return spec->default_value;
}

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }

std::size_t RunConfig::get_size(const std::string& key) const {
    return parse_number<std::size_t>(key, get(key));
}

double RunConfig::get_double(const std::string& key) const {
    const double v = parse_number<double>(key, get(key));
    if (!std::isfinite(v)) {
        throw ConfigError("config key '" + key + "' must be finite");
    }
    return v;
}

std::uint64_t RunConfig::seed() const { return parse_number<std::uint64_t>("seed", get("seed")); }

OutputKind parse_output_kind(const std::string& text) {
    if (text == "constant") {
        return OutputKind::constant;
    }
    if (text == "linear") {
        return OutputKind::linear;
    }
    throw ConfigError("output kind must be 'constant' or 'linear', got '" + text + "'");
}

std::vector<std::vector<std::size_t>> parse_slices(const std::string& text) {
    std::vector<std::vector<std::size_t>> levels;
    std::istringstream in(text);
    std::string level;
    while (std::getline(in, level, ';')) {
        std::vector<std::size_t> counts;
        std::istringstream fields(level);
        std::string field;
        while (std::getline(fields, field, ',')) {
            counts.push_back(parse_number<std::size_t>("grid.slices", trim(field)));
        }
        if (counts.empty()) {
            throw ConfigError("grid.slices: empty level in '" + text + "'");
        }
        levels.push_back(std::move(counts));
    }
    if (levels.empty()) {
        throw ConfigError("grid.slices: no levels given");
    }
    return levels;
}

IterConfig RunConfig::iter() const {
    IterConfig c;
    c.n_initial = get_size("iter.n_initial");
    c.update_width = get_double("iter.update");
    c.threshold = get_double("iter.threshold");
    c.max_iterations = get_size("iter.max_iterations");
    c.points_per_cube = get_size("iter.m");
    c.seed = seed();
    c.validate();
    return c;
}

GridConfig RunConfig::grid() const {
    GridConfig c;
    c.max_depth = get_size("grid.depth");
    c.slices_per_level = parse_slices(get("grid.slices"));
    c.threshold = get_double("grid.threshold");
    c.min_samples = get_size("grid.min_samples");
    c.output_kind = parse_output_kind(get("grid.output"));
    if (c.max_depth < 1) {
        throw ConfigError("grid.depth must be at least 1");
    }
    if (c.slices_per_level.size() != 1 && c.slices_per_level.size() != c.max_depth) {
        throw ConfigError("grid.slices must list one level or exactly grid.depth levels");
    }
    return c;
}

ClusterConfig RunConfig::cluster() const {
    ClusterConfig c;
    const std::string k = get("cluster.k");
    if (k != "auto") {
        c.k = parse_number<std::size_t>("cluster.k", k);
    }
    c.k_max = get_size("cluster.k_max");
    const std::string algorithm = get("cluster.algorithm");
    if (algorithm == "kmeans") {
        c.algorithm = ClusterAlgorithm::kmeans;
    } else if (algorithm == "agglomerative-ward") {
        c.algorithm = ClusterAlgorithm::agglomerative_ward;
    } else {
        throw ConfigError("cluster.algorithm must be 'kmeans' or 'agglomerative-ward'");
    }
    c.output_weight = get_double("cluster.weight");
    c.trim_fraction = get_double("cluster.trim");
    c.output_kind = parse_output_kind(get("cluster.output"));
    c.seed = seed();
    c.validate();
    return c;
}

MethodConfigs RunConfig::methods() const {
    MethodConfigs m;
    m.iter = iter();
    m.gridex = grid();
    m.gridex->output_kind = OutputKind::constant;
    m.gridrex = grid();
    m.gridrex->output_kind = OutputKind::linear;
    m.cluster = cluster();
    return m;
}

} // namespace skex
