#pragma once

#include "skex/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace skex {

struct ConstantOutput {
    double value = 0.0;
    friend bool operator==(const ConstantOutput&, const ConstantOutput&) = default;
};

struct LinearOutput {
    double intercept = 0.0;
    std::vector<double> coefficients;
    friend bool operator==(const LinearOutput&, const LinearOutput&) = default;
};

using RuleOutput = std::variant<ConstantOutput, LinearOutput>;

enum class OutputKind { constant, linear };

double evaluate_output(const RuleOutput& output, std::span<const double> x);

struct Rule {
    Region region;
    RuleOutput output;
};

/// Ordered rule list with a default output. Evaluation is first match.
struct Theory {
    std::vector<Rule> rules;
    RuleOutput default_output = ConstantOutput{};
    std::vector<std::string> feature_names;
    std::string target_name = "y";
    DomainBounds domain;

    std::size_t dim() const noexcept { return domain.dim(); }

    /// Index of the first rule whose region holds x, or nullopt for the default.
    std::optional<std::size_t> match(std::span<const double> x) const;

    /// Checks rule/output dimensions against the domain.
    void validate() const;
};

double predict_theory(const Theory& theory, std::span<const double> x);
std::vector<double> predict_theory(const Theory& theory, std::span<const Point> batch);

/// Least-squares affine fit of y on x.
///
/// Falls back to Constant(mean y) when there are fewer than d + 1 samples or
/// the centered design is rank deficient.
RuleOutput fit_linear(std::span<const Point> xs, std::span<const double> ys);

double mean_of(std::span<const double> values);

/// Human-readable rule list, one line per rule plus the trailing "else" line.
std::string render(const Theory& theory, int precision = 3);

/// JSON document describing the theory (format "skex-theory", version 1).
std::string theory_to_json(const Theory& theory, int indent = 2);
Theory theory_from_json(const std::string& text);

} // namespace skex
