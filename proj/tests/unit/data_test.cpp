#include "doctest.h"

#include "oracles.hpp"
#include "skex/error.hpp"
#include "skex/data.hpp"

#include <cmath>
#include <filesystem>
#include <string>

using namespace skex;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "skex-data-test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Dataset tiny(std::vector<Sample> samples) {
    const std::size_t d = samples.front().x.size();
    return Dataset(std::move(samples), default_feature_names(d));
}

} // namespace

TEST_CASE("generate_tri sizes and formula values") {
    const auto spec = tri_linear_spec();
    const auto data = generate_tri(spec, 100, 0.0, 42);
    CHECK(data.size() == 300);
    CHECK(data.dim() == 2);
    CHECK(data.feature_names() == std::vector<std::string>{"x1", "x2"});
    CHECK(spec.pieces[0].formula(Point{0.2, 0.2}) == doctest::Approx(1.4));
    CHECK(ExactPiecewise(spec).value(Point{0.2, 0.2}) == doctest::Approx(1.4));
}

TEST_CASE("generate is deterministic per seed") {
    const auto spec = tri_linear_spec();
    const auto a = generate_tri(spec, 50, 0.1, 3);
    const auto b = generate_tri(spec, 50, 0.1, 3);
    const auto c = generate_tri(spec, 50, 0.1, 4);
    CHECK(to_csv(a) == to_csv(b));
    CHECK(a[0].x != c[0].x);
}

TEST_CASE("noiseless samples sit on their region formula, each in exactly one region") {
    for (const auto& spec : {tri_linear_spec(), tri_constant_spec()}) {
        const auto data = generate_tri(spec, 200, 0.0, 17);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& s = data[i];
            int inside = 0;
            for (const auto& piece : spec.pieces) {
                inside += piece.cube.contains_closed(s.x) ? 1 : 0;
            }
            CHECK(inside == 1);
            const int r = skex::testing::region_of(spec, s.x);
            CHECK(r == static_cast<int>(i / 200));
            CHECK(s.y == spec.pieces[static_cast<std::size_t>(r)].formula(s.x));
        }
    }
}

TEST_CASE("benchmark regions are separated by at least 0.2 in some coordinate") {
    const auto spec = tri_constant_spec();
    const auto data = generate_tri(spec, 100, 0.0, 1);
    for (std::size_t a = 0; a < data.size(); ++a) {
        for (std::size_t b = a + 1; b < data.size(); ++b) {
            if (a / 100 == b / 100) {
                continue;
            }
            double gap = 0.0;
            for (std::size_t i = 0; i < 2; ++i) {
                gap = std::max(gap, std::fabs(data[a].x[i] - data[b].x[i]));
            }
            CHECK(gap >= 0.2);
        }
    }
}

TEST_CASE("generate rejects bad arguments") {
    CHECK_THROWS_AS(generate_tri(tri_linear_spec(), 0, 0.0, 1), ContractError);
    CHECK_THROWS_AS(generate_tri(tri_linear_spec(), 10, -1.0, 1), ContractError);
    TriRegionSpec bad = tri_linear_spec();
    bad.pieces[1].cube = Hypercube({{0.2, 0.5}, {0.2, 0.5}});
    CHECK_THROWS_AS(generate_tri(bad, 10, 0.0, 1), ContractError);
    CHECK_THROWS_AS(benchmark_spec("nope"), ConfigError);
    for (const auto& name : benchmark_names()) {
        CHECK_NOTHROW(benchmark_spec(name).validate());
    }
}

TEST_CASE("noise is Gaussian with the requested spread") {
    const auto spec = single_plane_spec();
    const auto data = generate(spec, 20000, 0.5, 8);
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& s : data.samples()) {
        const double e = s.y - spec.pieces[0].formula(s.x);
        sum += e;
        sq += e * e;
    }
    const double n = static_cast<double>(data.size());
    CHECK(std::fabs(sum / n) < 0.02);
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("knn_predict examples") {
    const auto train = tiny({{{0.0, 0.0}, 1.0}, {{1.0, 0.0}, 0.0}, {{0.0, 1.0}, 5.0}});
    KNNRegressor one(train, 1);
    CHECK(knn_predict(one, Point{1.0, 0.0}) == 0.0);
    CHECK(knn_predict(one, Point{0.0, 1.0}) == 5.0);

    const auto pair = tiny({{{0.0}, 0.0}, {{1.0}, 1.0}});
    KNNRegressor two(pair, 2);
    CHECK(knn_predict(two, Point{0.5}) == 0.5);

    CHECK_THROWS_AS(KNNRegressor(train, 4), ConfigError);
    CHECK_THROWS_AS(KNNRegressor(train, 0), ConfigError);
}

TEST_CASE("knn ties go to the lower sample index") {
    const auto train = tiny({{{0.0}, 10.0}, {{1.0}, 20.0}, {{2.0}, 30.0}});
    KNNRegressor one(train, 1);
    CHECK(knn_predict(one, Point{0.5}) == 10.0);
    CHECK(knn_predict(one, Point{1.5}) == 20.0);
}

TEST_CASE("knn distances use min-max scaled features") {
    // x2 spans 1000x the range of x1; unscaled it would dominate.
    const auto train = tiny({{{0.0, 0.0}, 1.0}, {{1.0, 1000.0}, 2.0}, {{0.0, 1000.0}, 3.0}, {{1.0, 0.0}, 4.0}});
    KNNRegressor one(train, 1);
    CHECK(knn_predict(one, Point{0.9, 100.0}) == 4.0);
}

TEST_CASE("knn oracle is deterministic across calls") {
    const auto train = generate_tri(tri_linear_spec(), 50, 0.1, 2);
    KNNRegressor model(train, 5);
    skex::testing::Gen gen(1);
    std::vector<Point> batch;
    for (int i = 0; i < 100; ++i) {
        batch.push_back(gen.point(2));
    }
    CHECK(model.predict(batch) == model.predict(batch));
}

TEST_CASE("normalize_params examples") {
    const auto data = tiny({{{0.0, 5.0}, 0.0}, {{2.0, 5.0}, 0.0}});
    const auto mm = normalize_params(data);
    CHECK(mm.min[0] == 0.0);
    CHECK(mm.max[0] == 2.0);
    CHECK(mm.scale(0, 2.0) == 1.0);
    CHECK(mm.min[1] == 5.0);
    CHECK(mm.max[1] == 5.0);
    CHECK(mm.scale(1, 5.0) == 0.0);
    CHECK_THROWS_AS(normalize_params(std::vector<Point>{}), ContractError);

    const auto tri = normalize_params(generate_tri(tri_linear_spec(), 100, 0.0, 42));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(tri.min[i] >= 0.0);
        CHECK(tri.max[i] <= 1.0);
    }
}

TEST_CASE("csv roundtrip is bit exact") {
    const auto data = generate_tri(tri_linear_spec(), 100, 0.3, 5);
    const auto back = csv_roundtrip(data, scratch("roundtrip.csv"));
    REQUIRE(back.size() == 300);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].x == data[i].x);
        CHECK(back[i].y == data[i].y);
    }
    CHECK(back.feature_names() == data.feature_names());
}

TEST_CASE("csv header names features and target") {
    const auto data = parse_csv("width,height,area\n1,2,2\n3,4,12\n");
    CHECK(data.feature_names() == std::vector<std::string>{"width", "height"});
    CHECK(data.target_name() == "area");
    CHECK(data.size() == 2);
    CHECK(data[1].y == 12.0);
}

TEST_CASE("malformed csv rows report their row number") {
    try {
        parse_csv("x1,x2,y\n0.1,0.2,3\n0.1,abc,3\n");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    try {
        parse_csv("x1,x2,y\n0.1,0.2\n");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("x1,x2,y\n"), DataError);
    CHECK_THROWS_AS(read_csv(scratch("does-not-exist.csv")), DataError);
}

TEST_CASE("dataset invariants") {
    CHECK_THROWS_AS(tiny({{{0.0, 1.0}, 1.0}, {{0.0}, 1.0}}), ContractError);
    CHECK_THROWS_AS(tiny({{{NAN}, 1.0}}), ContractError);
    const auto data = tiny({{{0.0}, 1.0}, {{4.0}, 2.0}, {{2.0}, 3.0}});
    CHECK(data.domain().bounds[0] == Interval{0.0, 4.0});
    const std::vector<std::size_t> pick{2};
    const auto sub = data.subset(pick);
    CHECK(sub.size() == 1);
    CHECK(sub.domain().bounds[0] == Interval{0.0, 4.0});
}

TEST_CASE("exact oracle outside every piece uses the nearest piece") {
    ExactPiecewise oracle(tri_constant_spec());
    CHECK(oracle.value(Point{0.2, 0.45}) == 1.0);
    CHECK(oracle.value(Point{0.8, 0.45}) == 2.0);
    CHECK(oracle.value(Point{0.5, 0.55}) == 3.0);
    CHECK_THROWS_AS(oracle.value(Point{0.5}), ContractError);
}
