#include "skex/theory.hpp"

#include "skex/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace skex {

using nlohmann::json;

double evaluate_output(const RuleOutput& output, std::span<const double> x) {
    if (const auto* c = std::get_if<ConstantOutput>(&output)) {
        return c->value;
    }
    const auto& lin = std::get<LinearOutput>(output);
    if (lin.coefficients.size() != x.size()) {
        throw ContractError("linear output: dimension mismatch");
    }
    double v = lin.intercept;
    for (std::size_t i = 0; i < x.size(); ++i) {
        v += lin.coefficients[i] * x[i];
    }
    return v;
}

std::optional<std::size_t> Theory::match(std::span<const double> x) const {
    if (x.size() != dim()) {
        throw ContractError("predict_theory: dimension mismatch");
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
        if (region_contains(rules[r].region, x, domain)) {
            return r;
        }
    }
    return std::nullopt;
}

void Theory::validate() const {
    const std::size_t d = dim();
    if (d == 0) {
        throw ContractError("Theory: empty domain");
    }
    const auto check_output = [d](const RuleOutput& out) {
        if (const auto* lin = std::get_if<LinearOutput>(&out); lin && lin->coefficients.size() != d) {
            throw ContractError("Theory: linear output dimension mismatch");
        }
    };
    for (const auto& rule : rules) {
        if (rule.region.outer.dim() != d) {
            throw ContractError("Theory: rule dimension mismatch");
        }
        for (const auto& hole : rule.region.holes) {
            if (hole.dim() != d) {
                throw ContractError("Theory: hole dimension mismatch");
            }
        }
        check_output(rule.output);
    }
    check_output(default_output);
    if (!feature_names.empty() && feature_names.size() != d) {
        throw ContractError("Theory: feature name count mismatch");
    }
}

double predict_theory(const Theory& theory, std::span<const double> x) {
    const auto hit = theory.match(x);
    return evaluate_output(hit ? theory.rules[*hit].output : theory.default_output, x);
}

std::vector<double> predict_theory(const Theory& theory, std::span<const Point> batch) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& x : batch) {
        out.push_back(predict_theory(theory, x));
    }
    return out;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) {
        throw ContractError("mean of an empty list");
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

// In-place LDL^T of a small symmetric positive semi-definite matrix stored
// row-major. Returns the smallest pivot relative to the largest diagonal.
double ldlt(std::vector<double>& a, std::size_t n) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_diag = std::max(max_diag, a[i * n + i]);
    }
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        double dj = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            dj -= a[j * n + k] * a[j * n + k] * a[k * n + k];
        }
        a[j * n + j] = dj;
        min_ratio = std::min(min_ratio, max_diag > 0.0 ? dj / max_diag : 0.0);
        if (dj <= 0.0) {
            return min_ratio;
        }
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                v -= a[i * n + k] * a[j * n + k] * a[k * n + k];
            }
            a[i * n + j] = v / dj;
        }
    }
    return min_ratio;
}

std::vector<double> ldlt_solve(const std::vector<double>& f, std::size_t n, std::vector<double> b) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            b[i] -= f[i * n + k] * b[k];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        b[i] /= f[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) {
            b[i] -= f[k * n + i] * b[k];
        }
    }
    return b;
}

constexpr double kRidge = 1e-9;
constexpr double kRankTolerance = 1e-10;

} // namespace

RuleOutput fit_linear(std::span<const Point> xs, std::span<const double> ys) {
    if (xs.empty() || xs.size() != ys.size()) {
        throw ContractError("fit_linear: need a non-empty sample list with one target per input");
    }
    const std::size_t n = xs.size();
    const std::size_t d = xs.front().size();
    const double y_mean = mean_of(ys);
    if (n < d + 1) {
        return ConstantOutput{y_mean};
    }

    std::vector<double> x_mean(d, 0.0);
    for (const auto& x : xs) {
        if (x.size() != d) {
            throw ContractError("fit_linear: inconsistent input dimension");
        }
        for (std::size_t i = 0; i < d; ++i) {
            x_mean[i] += x[i];
        }
    }
    for (double& m : x_mean) {
        m /= static_cast<double>(n);
    }

    // Centered normal equations: the intercept decouples from the slopes.
    std::vector<double> gram(d * d, 0.0);
    std::vector<double> rhs(d, 0.0);
    std::vector<double> xc(d);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < d; ++i) {
            xc[i] = xs[s][i] - x_mean[i];
        }
        const double yc = ys[s] - y_mean;
        for (std::size_t i = 0; i < d; ++i) {
            rhs[i] += xc[i] * yc;
            for (std::size_t j = 0; j <= i; ++j) {
                gram[i * d + j] += xc[i] * xc[j];
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            gram[j * d + i] = gram[i * d + j];
        }
    }

    std::vector<double> factor = gram;
    if (!(ldlt(factor, d) > kRankTolerance)) {
        return ConstantOutput{y_mean};
    }

    // Solve the ridge system, then refine against the unregularized one so
    // well-posed fits carry no visible ridge bias.
    std::vector<double> ridged = gram;
    for (std::size_t i = 0; i < d; ++i) {
        ridged[i * d + i] += kRidge;
    }
    ldlt(ridged, d);
    std::vector<double> beta = ldlt_solve(ridged, d, rhs);
    for (int pass = 0; pass < 3; ++pass) {
        std::vector<double> residual = rhs;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                residual[i] -= gram[i * d + j] * beta[j];
            }
        }
        const auto step = ldlt_solve(ridged, d, residual);
        for (std::size_t i = 0; i < d; ++i) {
            beta[i] += step[i];
        }
    }

    double intercept = y_mean;
    for (std::size_t i = 0; i < d; ++i) {
        intercept -= beta[i] * x_mean[i];
    }
    if (!std::isfinite(intercept) ||
        !std::all_of(beta.begin(), beta.end(), [](double b) { return std::isfinite(b); })) {
        return ConstantOutput{y_mean};
    }
    return LinearOutput{intercept, std::move(beta)};
}

namespace {

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s(buf);
    // Never print "-0.000".
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

std::string feature_name(const Theory& theory, std::size_t i) {
    return i < theory.feature_names.size() ? theory.feature_names[i] : "x" + std::to_string(i + 1);
}

std::string render_cube(const Theory& theory, const Hypercube& cube, int precision) {
    std::string text;
    for (std::size_t i = 0; i < cube.dim(); ++i) {
        if (i > 0) {
            text += " and ";
        }
        const bool closed = cube[i].hi == theory.domain.upper(i);
        text += feature_name(theory, i) + " in [" + fixed(cube[i].lo, precision) + ", " +
                fixed(cube[i].hi, precision) + (closed ? "]" : ")");
    }
    return text;
}

std::string render_output(const Theory& theory, const RuleOutput& output, int precision) {
    if (const auto* c = std::get_if<ConstantOutput>(&output)) {
        return fixed(c->value, precision);
    }
    const auto& lin = std::get<LinearOutput>(output);
    std::string text = fixed(lin.intercept, precision);
    for (std::size_t i = 0; i < lin.coefficients.size(); ++i) {
        std::string mag = fixed(lin.coefficients[i], precision);
        const bool negative = mag.front() == '-';
        if (negative) {
            mag.erase(0, 1);
        }
        text += (negative ? " - " : " + ") + mag + "*" + feature_name(theory, i);
    }
    return text;
}

json cube_json(const Hypercube& cube) {
    json arr = json::array();
    for (const auto& iv : cube.bounds()) {
        arr.push_back({iv.lo, iv.hi});
    }
    return arr;
}

Hypercube cube_from_json(const json& j) {
    std::vector<Interval> bounds;
    for (const auto& iv : j) {
        if (!iv.is_array() || iv.size() != 2) {
            throw DataError("theory JSON: interval must be a [lo, hi] pair");
        }
        bounds.push_back({iv[0].get<double>(), iv[1].get<double>()});
    }
    return Hypercube(std::move(bounds));
}

json output_json(const RuleOutput& output) {
    if (const auto* c = std::get_if<ConstantOutput>(&output)) {
        return {{"kind", "constant"}, {"value", c->value}};
    }
    const auto& lin = std::get<LinearOutput>(output);
    return {{"kind", "linear"}, {"intercept", lin.intercept}, {"coefficients", lin.coefficients}};
}

RuleOutput output_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        return ConstantOutput{j.at("value").get<double>()};
    }
    if (kind == "linear") {
        return LinearOutput{j.at("intercept").get<double>(), j.at("coefficients").get<std::vector<double>>()};
    }
    throw DataError("theory JSON: unknown output kind '" + kind + "'");
}

} // namespace

std::string render(const Theory& theory, int precision) {
    std::string text;
    const std::string target = theory.target_name.empty() ? "y" : theory.target_name;
    for (const auto& rule : theory.rules) {
        text += "if " + render_cube(theory, rule.region.outer, precision);
        for (const auto& hole : rule.region.holes) {
            text += " and not (" + render_cube(theory, hole, precision) + ")";
        }
        text += " then " + target + " = " + render_output(theory, rule.output, precision) + "\n";
    }
    text += "else " + target + " = " + render_output(theory, theory.default_output, precision) + "\n";
    return text;
}

std::string theory_to_json(const Theory& theory, int indent) {
    json rules = json::array();
    for (const auto& rule : theory.rules) {
        json holes = json::array();
        for (const auto& hole : rule.region.holes) {
            holes.push_back(cube_json(hole));
        }
        rules.push_back({{"region", {{"outer", cube_json(rule.region.outer)}, {"holes", holes}}},
                         {"output", output_json(rule.output)}});
    }
    const json doc = {
        {"format", "skex-theory"},
        {"version", 1},
        {"feature_names", theory.feature_names},
        {"target_name", theory.target_name},
        {"domain", cube_json(theory.domain.bounds)},
        {"rules", rules},
        {"default", output_json(theory.default_output)},
    };
    return doc.dump(indent) + "\n";
}

Theory theory_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != "skex-theory" || doc.at("version").get<int>() != 1) {
            throw DataError("theory JSON: unsupported format or version");
        }
        Theory theory;
        theory.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        theory.target_name = doc.value("target_name", std::string("y"));
        theory.domain = DomainBounds{cube_from_json(doc.at("domain"))};
        for (const auto& r : doc.at("rules")) {
            Rule rule;
            rule.region.outer = cube_from_json(r.at("region").at("outer"));
            for (const auto& h : r.at("region").at("holes")) {
                rule.region.holes.push_back(cube_from_json(h));
            }
            rule.output = output_from_json(r.at("output"));
            theory.rules.push_back(std::move(rule));
        }
        theory.default_output = output_from_json(doc.at("default"));
        theory.validate();
        return theory;
    } catch (const json::exception& e) {
        throw DataError(std::string("theory JSON: ") + e.what());
    } catch (const ContractError& e) {
        throw DataError(std::string("theory JSON: ") + e.what());
    }
}

} // namespace skex
