#include "doctest.h"

#include "skex/config.hpp"
#include "skex/error.hpp"

#include <set>

using namespace skex;

TEST_CASE("defaults match the library defaults") {
    const RunConfig config;
    const IterConfig iter = config.iter();
    CHECK(iter.n_initial == IterConfig{}.n_initial);
    CHECK(iter.update_width == IterConfig{}.update_width);
    CHECK(iter.threshold == IterConfig{}.threshold);
    CHECK(iter.max_iterations == IterConfig{}.max_iterations);
    CHECK(iter.points_per_cube == IterConfig{}.points_per_cube);

    const GridConfig grid = config.grid();
    CHECK(grid.max_depth == GridConfig{}.max_depth);
    CHECK(grid.slices_at(0, 2) == GridConfig{}.slices_at(0, 2));
    CHECK(grid.slices_at(1, 2) == GridConfig{}.slices_at(1, 2));
    CHECK(grid.threshold == GridConfig{}.threshold);
    CHECK(grid.min_samples == GridConfig{}.min_samples);
    CHECK(grid.output_kind == OutputKind::constant);

    const ClusterConfig cluster = config.cluster();
    CHECK_FALSE(cluster.k);
    CHECK(cluster.k_max == ClusterConfig{}.k_max);
    CHECK(cluster.algorithm == ClusterConfig{}.algorithm);
    CHECK(cluster.output_weight == ClusterConfig{}.output_weight);
    CHECK(cluster.trim_fraction == ClusterConfig{}.trim_fraction);
    CHECK(cluster.output_kind == OutputKind::linear);
    CHECK(config.seed() == 42);
}

TEST_CASE("parse handles comments, blanks and spacing") {
    const auto config = RunConfig::parse("# headline\n\nseed = 7\n grid.slices=2,2 ; 3,3  # two levels\n"
                                         "cluster.k = 3\ncluster.algorithm = kmeans\ngrid.depth = 2\n");
    CHECK(config.seed() == 7);
    CHECK(config.grid().slices_per_level == std::vector<std::vector<std::size_t>>{{2, 2}, {3, 3}});
    CHECK(config.cluster().k == std::optional<std::size_t>{3});
    CHECK(config.cluster().algorithm == ClusterAlgorithm::kmeans);
    CHECK(config.cluster().seed == 7);
}

TEST_CASE("unknown keys and bad values are rejected with line numbers") {
    try {
        RunConfig::parse("seed = 1\ncluster.kk = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(RunConfig::parse("seed 1\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("iter.threshold = abc\n").iter(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("grid.output = cubic\n").grid(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("cluster.algorithm = dbscan\n").cluster(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("cluster.k = 0\n").cluster(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("grid.slices = 2,,2\n").grid(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("grid.depth = 0\n").grid(), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("iter.update = -0.1\n").iter(), ConfigError);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/skex.cfg"), ConfigError);
    RunConfig config;
    CHECK_THROWS_AS(config.set("nope", "1"), ConfigError);
    CHECK_THROWS_AS(config.get("nope"), ConfigError);
}

TEST_CASE("every documented key has a default and parses") {
    std::set<std::string> names;
    for (const auto& key : config_keys()) {
        CHECK(names.insert(key.name).second);
        CHECK_FALSE(key.description.empty());
    }
    CHECK(names.count("iter.update") == 1);
    CHECK(names.count("grid.slices") == 1);
    CHECK(names.count("cluster.weight") == 1);
    const RunConfig config;
    CHECK_NOTHROW(config.methods());
}

TEST_CASE("slices and output kinds") {
    CHECK(parse_slices("3") == std::vector<std::vector<std::size_t>>{{3}});
    CHECK(parse_slices("2,4;1,1") == std::vector<std::vector<std::size_t>>{{2, 4}, {1, 1}});
    CHECK_THROWS_AS(parse_slices(""), ConfigError);
    CHECK(parse_output_kind("linear") == OutputKind::linear);
    CHECK_THROWS_AS(parse_output_kind("Linear"), ConfigError);
}
