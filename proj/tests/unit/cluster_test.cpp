#include "doctest.h"

#include "oracles.hpp"
#include "skex/cluster.hpp"
#include "skex/error.hpp"
#include "skex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace skex;
using skex::testing::box;
using skex::testing::Gen;

namespace {

ClusterConfig fixed_k(std::size_t k, ClusterAlgorithm algorithm = ClusterAlgorithm::agglomerative_ward) {
    ClusterConfig config;
    config.k = k;
    config.algorithm = algorithm;
    config.trim_fraction = 0.0;
    return config;
}

// Number of samples whose cluster disagrees with the majority cluster of
// their generating region.
std::size_t mislabeled(const PiecewiseSpec& spec, const Dataset& data, const ClusterAssignment& a) {
    std::map<int, std::map<std::size_t, std::size_t>> votes;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ++votes[skex::testing::region_of(spec, data[i].x)][a.labels[i]];
    }
    std::size_t wrong = 0;
    std::set<std::size_t> used;
    for (const auto& [region, counts] : votes) {
        std::size_t total = 0;
        std::size_t best = 0;
        std::size_t best_label = 0;
        for (auto [label, count] : counts) {
            total += count;
            if (count > best) {
                best = count;
                best_label = label;
            }
        }
        wrong += total - best;
        if (!used.insert(best_label).second) {
            wrong += best;
        }
    }
    return wrong;
}

} // namespace

TEST_CASE("k=1 puts every sample in one cluster") {
    const auto data = generate_tri(tri_linear_spec(), 30, 0.0, 1);
    ExactPiecewise oracle(tri_linear_spec());
    for (auto alg : {ClusterAlgorithm::kmeans, ClusterAlgorithm::agglomerative_ward}) {
        const auto a = cluster_assign(data, oracle, fixed_k(1, alg));
        CHECK(a.k() == 1);
        CHECK(a.members[0].size() == data.size());
    }
}

TEST_CASE("tri-constant with k=3 and w=1 recovers the regions exactly") {
    const auto spec = tri_constant_spec();
    ExactPiecewise oracle(spec);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto data = generate_tri(spec, 100, 0.0, seed);
        for (auto alg : {ClusterAlgorithm::kmeans, ClusterAlgorithm::agglomerative_ward}) {
            auto config = fixed_k(3, alg);
            config.output_weight = 1.0;
            config.seed = seed;
            const auto a = cluster_assign(data, oracle, config);
            REQUIRE(a.k() == 3);
            CHECK(mislabeled(spec, data, a) == 0);
        }
    }
}

TEST_CASE("duplicate points") {
    const std::vector<Point> twins{{0.5, 0.5}, {0.5, 0.5}};
    CHECK_THROWS_AS(kmeans(twins, 2, 0), ConfigError);
    const auto split = agglomerative_ward(twins, 2);
    CHECK(split.labels == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(agglomerative_ward(twins, 3), ConfigError);
    CHECK_THROWS_AS(kmeans(twins, 0, 0), ConfigError);
}

TEST_CASE("cluster labels are canonical and every cluster is non-empty") {
    Gen gen(14);
    for (int trial = 0; trial < 40; ++trial) {
        const auto pts = gen.points(gen.size(5, 60), gen.size(1, 3), 0.0, 1.0);
        const std::size_t k = gen.size(1, std::min<std::size_t>(6, pts.size()));
        for (const auto& a : {kmeans(pts, k, trial), agglomerative_ward(pts, k)}) {
            REQUIRE(a.k() == k);
            REQUIRE(a.labels.size() == pts.size());
            std::size_t smallest_prev = 0;
            for (std::size_t c = 0; c < k; ++c) {
                REQUIRE_FALSE(a.members[c].empty());
                CHECK(std::is_sorted(a.members[c].begin(), a.members[c].end()));
                if (c > 0) {
                    CHECK(a.members[c].front() > smallest_prev);
                }
                smallest_prev = a.members[c].front();
                for (std::size_t s : a.members[c]) {
                    CHECK(a.labels[s] == c);
                }
            }
        }
    }
}

TEST_CASE("kmeans is deterministic per seed") {
    Gen gen(5);
    const auto pts = gen.points(80, 3, 0.0, 1.0);
    CHECK(kmeans(pts, 4, 9).labels == kmeans(pts, 4, 9).labels);
}

TEST_CASE("ward matches a brute-force merge on a small set") {
    // Points on a line: {0, 1} and {10, 11, 12} are the Ward 2-cut.
    const std::vector<Point> pts{{10}, {0}, {11}, {1}, {12}};
    const auto a = agglomerative_ward(pts, 2);
    CHECK(a.labels == std::vector<std::size_t>{0, 1, 0, 1, 0});
    const auto b = agglomerative_ward(pts, 3);
    CHECK(b.labels[1] == b.labels[3]);
    CHECK(b.labels[0] != b.labels[1]);
}

TEST_CASE("joint vectors append the weighted normalized output") {
    const Dataset data({{{0.0, 10.0}, 0.0}, {{2.0, 20.0}, 0.0}}, default_feature_names(2));
    const std::vector<double> preds{5.0, 7.0};
    const auto v = joint_vectors(data, preds, 0.5);
    CHECK(v[0] == Point{0.0, 0.0, 0.0});
    CHECK(v[1] == Point{1.0, 1.0, 0.5});
    CHECK(joint_vectors(data, preds, 0.0)[1].size() == 2);
}

TEST_CASE("cluster_priority examples") {
    std::vector<std::size_t> many(200);
    std::vector<std::size_t> few(100);
    const auto unit = box({{0, 1}, {0, 1}});
    CHECK(cluster_priority(1, many, unit).before(cluster_priority(0, few, unit)));
    const auto big = box({{0, 0.5}, {0, 0.4}});
    const auto small = box({{0, 0.5}, {0, 0.2}});
    CHECK(cluster_priority(1, few, big).before(cluster_priority(0, few, small)));
    CHECK(cluster_priority(0, few, big).before(cluster_priority(1, few, big)));
    CHECK_FALSE(cluster_priority(1, few, big).before(cluster_priority(0, few, big)));
}

TEST_CASE("select_k examples") {
    ClusterConfig config;
    config.trim_fraction = 0.0;
    config.seed = 42;
    const auto tri = generate_tri(tri_linear_spec(), 100, 0.0, 42);
    ExactPiecewise tri_oracle(tri_linear_spec());
    CHECK(select_k(tri, tri_oracle, config) == 3);

    const auto plane = generate(single_plane_spec(), 200, 0.0, 42);
    ExactPiecewise plane_oracle(single_plane_spec());
    CHECK(select_k(plane, plane_oracle, config) == 1);

    config.k_max = 1;
    CHECK(select_k(tri, tri_oracle, config) == 1);
}

TEST_CASE("tri-linear k=3 recovers each generating plane") {
    const auto spec = tri_linear_spec();
    const auto data = generate_tri(spec, 100, 0.0, 42);
    ExactPiecewise oracle(spec);
    const auto result = run_clustered(data, oracle, fixed_k(3));
    REQUIRE(result.theory.rules.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        const auto& lin = std::get<LinearOutput>(result.theory.rules[r].output);
        const auto& members = result.assignment.members[result.rule_cluster[r]];
        const int region = skex::testing::region_of(spec, data[members.front()].x);
        const auto& truth = spec.pieces[static_cast<std::size_t>(region)].formula;
        CHECK(std::fabs(lin.intercept - truth.intercept) <= 1e-6);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(std::fabs(lin.coefficients[i] - truth.coefficients[i]) <= 1e-6);
        }
    }
    CHECK(evaluate(result.theory, data, oracle).fidelity_mae <= 1e-6);
}

TEST_CASE("k=1 is one rule over the global box fitted on every sample") {
    const auto data = generate_tri(tri_linear_spec(), 50, 0.0, 3);
    ExactPiecewise oracle(tri_linear_spec());
    const auto result = run_clustered(data, oracle, fixed_k(1));
    REQUIRE(result.theory.rules.size() == 1);
    CHECK(result.cubes[0] == enclosing_cube(data.inputs()));
    const auto preds = oracle.predict(data.inputs());
    const auto xs = data.inputs();
    CHECK(result.theory.rules[0].output == fit_linear(xs, preds));
}

TEST_CASE("nested square gets priority and the L carries it as a hole") {
    const auto spec = nested_square_spec();
    const auto data = generate(spec, 100, 0.0, 42);
    ExactPiecewise oracle(spec);
    auto config = fixed_k(2);
    config.output_weight = 1.0;
    config.output_kind = OutputKind::constant;
    const auto result = run_clustered(data, oracle, config);
    REQUIRE(result.theory.rules.size() == 2);
    const auto& first = result.theory.rules[0];
    const auto& second = result.theory.rules[1];
    CHECK(std::get<ConstantOutput>(first.output).value == doctest::Approx(5.0));
    CHECK(std::get<ConstantOutput>(second.output).value == doctest::Approx(0.0));
    REQUIRE(second.region.holes.size() == 1);
    CHECK(second.region.holes[0] == first.region.outer);
    CHECK(overlaps(first.region.outer, second.region.outer));

    const auto& dom = data.domain();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool in_square = skex::testing::region_of(spec, data[i].x) < 3;
        CHECK(region_contains(first.region, data[i].x, dom) == in_square);
        CHECK(region_contains(second.region, data[i].x, dom) == !in_square);
        CHECK(predict_theory(result.theory, data[i].x) == doctest::Approx(in_square ? 5.0 : 0.0));
    }
}

TEST_CASE("retained samples route to their own cluster's rule") {
    for (const auto& name : {std::string("tri-linear"), std::string("tri-constant")}) {
        const auto spec = benchmark_spec(name);
        const auto data = generate(spec, 80, 0.0, 7);
        ExactPiecewise oracle(spec);
        ClusterConfig config;
        config.k = 3;
        const auto result = run_clustered(data, oracle, config);
        for (std::size_t r = 0; r < result.rule_cluster.size(); ++r) {
            for (std::size_t s : result.retained[result.rule_cluster[r]]) {
                CHECK(result.theory.match(data[s].x) == std::optional<std::size_t>{r});
            }
        }
    }
}

TEST_CASE("trimming drops outlying samples from the box") {
    const auto data = generate_tri(tri_constant_spec(), 100, 0.0, 2);
    ExactPiecewise oracle(tri_constant_spec());
    ClusterConfig config;
    config.k = 3;
    config.trim_fraction = 0.05;
    const auto result = run_clustered(data, oracle, config);
    std::size_t retained = 0;
    for (const auto& r : result.retained) {
        retained += r.size();
    }
    CHECK(retained < data.size());
    CHECK(retained >= static_cast<std::size_t>(0.8 * data.size()));
    CHECK(evaluate(result.theory, data, oracle).coverage < 1.0);
}

TEST_CASE("disjoint cluster rules can be shuffled freely") {
    const auto data = generate_tri(tri_linear_spec(), 100, 0.0, 11);
    ExactPiecewise oracle(tri_linear_spec());
    const auto theory = run_clustered(data, oracle, fixed_k(3)).theory;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a + 1; b < 3; ++b) {
            REQUIRE_FALSE(overlaps(theory.rules[a].region.outer, theory.rules[b].region.outer));
        }
    }
    Gen gen(3);
    auto shuffled = theory;
    for (int round = 0; round < 6; ++round) {
        std::shuffle(shuffled.rules.begin(), shuffled.rules.end(), gen.engine());
        for (int probe = 0; probe < 500; ++probe) {
            const auto x = gen.point(2);
            CHECK(predict_theory(theory, x) == predict_theory(shuffled, x));
        }
    }
}

TEST_CASE("cluster config validation") {
    const auto data = generate_tri(tri_linear_spec(), 5, 0.0, 1);
    ExactPiecewise oracle(tri_linear_spec());
    ClusterConfig config;
    config.k = 16;
    CHECK_THROWS_AS(run_clustered(data, oracle, config), ConfigError);
    config.k = 0;
    CHECK_THROWS_AS(run_clustered(data, oracle, config), ConfigError);
    config = ClusterConfig{};
    config.trim_fraction = 0.5;
    CHECK_THROWS_AS(run_clustered(data, oracle, config), ConfigError);
    config = ClusterConfig{};
    config.output_weight = -1;
    CHECK_THROWS_AS(run_clustered(data, oracle, config), ConfigError);
    config = ClusterConfig{};
    CHECK_THROWS_AS(cluster_assign(data, oracle, config), ContractError);
}
