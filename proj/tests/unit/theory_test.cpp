#include "doctest.h"

#include "oracles.hpp"
#include "skex/error.hpp"
#include "skex/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace skex;
using skex::testing::box;
using skex::testing::Gen;
using skex::testing::unit_domain;

namespace {

Theory make_theory(std::vector<Rule> rules, RuleOutput fallback = ConstantOutput{0.0}) {
    Theory t;
    t.rules = std::move(rules);
    t.default_output = std::move(fallback);
    t.feature_names = {"x1", "x2"};
    t.domain = unit_domain(2);
    return t;
}

Rule constant_rule(Hypercube cube, double value) { return Rule{Region{std::move(cube), {}}, ConstantOutput{value}}; }

} // namespace

TEST_CASE("predict_theory uses the first matching rule") {
    const auto t = make_theory({constant_rule(box({{0.4, 0.6}, {0.4, 0.6}}), 1.0),
                                constant_rule(box({{0, 1}, {0, 1}}), 2.0)});
    CHECK(predict_theory(t, Point{0.5, 0.5}) == 1.0);
    CHECK(predict_theory(t, Point{0.1, 0.1}) == 2.0);
    CHECK(t.match(Point{0.1, 0.1}) == std::optional<std::size_t>{1});
    CHECK_THROWS_AS(predict_theory(t, Point{0.5}), ContractError);

    const auto sparse = make_theory({constant_rule(box({{0, 0.2}, {0, 0.2}}), 1.0)}, ConstantOutput{7.0});
    CHECK(predict_theory(sparse, Point{0.9, 0.9}) == 7.0);
    CHECK_FALSE(sparse.match(Point{0.9, 0.9}));
}

TEST_CASE("linear outputs evaluate intercept plus dot product") {
    const auto t = make_theory({Rule{Region{box({{0, 1}, {0, 1}}), {}}, LinearOutput{0.5, {-1.0, 2.0}}}});
    CHECK(predict_theory(t, Point{0.25, 0.5}) == doctest::Approx(0.5 - 0.25 + 1.0));
}

TEST_CASE("fit_linear examples") {
    const std::vector<Point> xs{{0, 0}, {1, 0}, {0, 1}};
    const std::vector<double> ys{1, 2, 3};
    const auto out = fit_linear(xs, ys);
    REQUIRE(std::holds_alternative<LinearOutput>(out));
    const auto& lin = std::get<LinearOutput>(out);
    CHECK(lin.intercept == doctest::Approx(1.0));
    CHECK(lin.coefficients[0] == doctest::Approx(1.0));
    CHECK(lin.coefficients[1] == doctest::Approx(2.0));

    const std::vector<Point> same{{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
    const std::vector<double> two{1, 3, 1, 3};
    const auto flat = fit_linear(same, two);
    REQUIRE(std::holds_alternative<ConstantOutput>(flat));
    CHECK(std::get<ConstantOutput>(flat).value == 2.0);

    CHECK_THROWS_AS(fit_linear(std::vector<Point>{}, std::vector<double>{}), ContractError);
}

TEST_CASE("fit_linear with too few samples falls back to the mean") {
    const std::vector<Point> xs{{0.1, 0.2}, {0.5, 0.9}};
    const std::vector<double> ys{1, 2};
    const auto out = fit_linear(xs, ys);
    REQUIRE(std::holds_alternative<ConstantOutput>(out));
    CHECK(std::get<ConstantOutput>(out).value == 1.5);
}

TEST_CASE("fit_linear on collinear inputs falls back to the mean") {
    // All points on the line x2 = 2 x1: the design is rank deficient.
    std::vector<Point> xs;
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) {
        xs.push_back({0.1 * i, 0.2 * i});
        ys.push_back(static_cast<double>(i % 3));
    }
    const auto out = fit_linear(xs, ys);
    REQUIRE(std::holds_alternative<ConstantOutput>(out));
    CHECK(std::get<ConstantOutput>(out).value == doctest::Approx(mean_of(ys)));
}

TEST_CASE("fit_linear recovers the R1 benchmark plane") {
    Gen gen(21);
    std::vector<Point> xs;
    std::vector<double> ys;
    for (int i = 0; i < 200; ++i) {
        xs.push_back(gen.point(2, 0.0, 0.4));
        ys.push_back(1.0 + xs.back()[0] + xs.back()[1]);
    }
    const auto out = fit_linear(xs, ys);
    REQUIRE(std::holds_alternative<LinearOutput>(out));
    const auto& lin = std::get<LinearOutput>(out);
    const auto ref = skex::testing::normal_equations(xs, ys);
    CHECK(std::fabs(lin.intercept - 1.0) <= 1e-9);
    CHECK(std::fabs(lin.intercept - ref[0]) <= 1e-9);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::fabs(lin.coefficients[i] - 1.0) <= 1e-9);
        CHECK(std::fabs(lin.coefficients[i] - ref[i + 1]) <= 1e-9);
    }
}

TEST_CASE("fit_linear property: exact affine data has zero residual") {
    Gen gen(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = gen.size(1, 5);
        const std::size_t n = gen.size(d + 1, 40);
        std::vector<double> coef(d + 1);
        for (double& c : coef) {
            c = gen.real(-3.0, 3.0);
        }
        std::vector<Point> xs;
        std::vector<double> ys;
        for (std::size_t s = 0; s < n; ++s) {
            xs.push_back(gen.point(d, -1.0, 2.0));
            double y = coef[0];
            for (std::size_t i = 0; i < d; ++i) {
                y += coef[i + 1] * xs.back()[i];
            }
            ys.push_back(y);
        }
        const auto out = fit_linear(xs, ys);
        REQUIRE(std::holds_alternative<LinearOutput>(out));
        for (std::size_t s = 0; s < n; ++s) {
            CHECK(std::fabs(evaluate_output(out, xs[s]) - ys[s]) <= 1e-9);
        }
    }
}

TEST_CASE("fit_linear matches least squares on noisy data") {
    Gen gen(6);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = gen.size(1, 4);
        std::vector<Point> xs;
        std::vector<double> ys;
        for (int s = 0; s < 60; ++s) {
            xs.push_back(gen.point(d));
            ys.push_back(2.0 - xs.back()[0] + noise(gen.engine()));
        }
        const auto out = fit_linear(xs, ys);
        REQUIRE(std::holds_alternative<LinearOutput>(out));
        const auto ref = skex::testing::normal_equations(xs, ys);
        const auto& lin = std::get<LinearOutput>(out);
        CHECK(lin.intercept == doctest::Approx(ref[0]).epsilon(1e-7));
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(lin.coefficients[i] == doctest::Approx(ref[i + 1]).epsilon(1e-7));
        }
    }
}

TEST_CASE("render examples") {
    auto t = make_theory({constant_rule(box({{0, 0.4}, {0, 0.4}}), 1.0)}, ConstantOutput{2.0});
    CHECK(render(t, 3) == "if x1 in [0.000, 0.400) and x2 in [0.000, 0.400) then y = 1.000\nelse y = 2.000\n");

    t.rules = {Rule{Region{box({{0, 1}, {0.6, 1}}), {}}, LinearOutput{0.5, {-1.0, 2.0}}}};
    CHECK(render(t, 3) == "if x1 in [0.000, 1.000] and x2 in [0.600, 1.000] then y = 0.500 - 1.000*x1 + 2.000*x2\n"
                          "else y = 2.000\n");

    t.rules = {Rule{Region{box({{0, 0.8}, {0, 0.8}}), {box({{0.1, 0.3}, {0.1, 0.3}})}}, ConstantOutput{-0.0001}}};
    const auto text = render(t, 3);
    CHECK(text.find("and not (x1 in [0.100, 0.300) and x2 in [0.100, 0.300))") != std::string::npos);
    CHECK(text.find("-0.000") == std::string::npos);
    CHECK(render(t, 3) == text);
}

TEST_CASE("rendered numbers parse back at the chosen precision") {
    Gen gen(2);
    for (int trial = 0; trial < 100; ++trial) {
        const double v = gen.real(-10.0, 10.0);
        auto t = make_theory({constant_rule(gen.cube(2), v)});
        const auto text = render(t, 4);
        const auto at = text.find("then y = ");
        REQUIRE(at != std::string::npos);
        const double parsed = std::stod(text.substr(at + 9));
        CHECK(std::fabs(parsed - v) <= 0.5e-4 + 1e-12);
    }
}

TEST_CASE("theory json roundtrip") {
    auto t = make_theory({Rule{Region{box({{0, 0.8}, {0, 0.8}}), {box({{0.1, 0.3}, {0.1, 0.3}})}}, ConstantOutput{1.25}},
                          Rule{Region{box({{0, 1}, {0, 1}}), {}}, LinearOutput{0.1, {0.2, 0.30000000000000004}}}},
                         LinearOutput{1.0, {0.0, -1.0}});
    const auto back = theory_from_json(theory_to_json(t));
    CHECK(back.rules.size() == 2);
    CHECK(back.rules[0].region == t.rules[0].region);
    CHECK(back.rules[1].output == t.rules[1].output);
    CHECK(back.default_output == t.default_output);
    CHECK(back.feature_names == t.feature_names);
    CHECK(theory_to_json(back) == theory_to_json(t));
    CHECK_THROWS_AS(theory_from_json("{}"), DataError);
    CHECK_THROWS_AS(theory_from_json("not json"), DataError);
}

TEST_CASE("reordering disjoint rules does not change predictions") {
    Gen gen(31);
    const auto dom = unit_domain(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<std::size_t> slices{gen.size(1, 4), gen.size(1, 4)};
        const auto cells = split_grid(dom.bounds, slices);
        std::vector<Rule> rules;
        for (const auto& c : cells) {
            if (gen.real(0, 1) < 0.8) {
                rules.push_back(constant_rule(c, gen.real(-5, 5)));
            }
        }
        const auto a = make_theory(rules, ConstantOutput{99.0});
        auto shuffled = rules;
        std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());
        const auto b = make_theory(shuffled, ConstantOutput{99.0});
        for (int probe = 0; probe < 100; ++probe) {
            const auto x = gen.point(2);
            CHECK(predict_theory(a, x) == predict_theory(b, x));
        }
    }
}

TEST_CASE("a theory covering the domain never falls back to the default") {
    const auto dom = unit_domain(2);
    const std::vector<std::size_t> slices{3, 2};
    std::vector<Rule> rules;
    for (const auto& c : split_grid(dom.bounds, slices)) {
        rules.push_back(constant_rule(c, 1.0));
    }
    const auto t = make_theory(rules, ConstantOutput{-1.0});
    Gen gen(8);
    for (int probe = 0; probe < 2000; ++probe) {
        CHECK(t.match(gen.point(2)));
    }
    CHECK(t.match(Point{1.0, 1.0}));
}

TEST_CASE("theory validation rejects mismatched dimensions") {
    auto t = make_theory({Rule{Region{box({{0, 1}, {0, 1}}), {}}, LinearOutput{0.0, {1.0}}}});
    CHECK_THROWS_AS(t.validate(), ContractError);
}
