#pragma once

#include "skex/cluster.hpp"
#include "skex/data.hpp"
#include "skex/grid.hpp"
#include "skex/iter.hpp"
#include "skex/theory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace skex {

struct EvaluationReport {
    std::string method;
    std::size_t rule_count = 0;
    double fidelity_mae = 0.0;
    double fidelity_mse = 0.0;
    double fidelity_r2 = 0.0;
    double predictive_mae = 0.0;
    /// Fraction of evaluated points matched by a non-default rule.
    double coverage = 0.0;
};

/// Coefficient of determination; 1 for a perfect fit of a constant
/// reference, 0 for any other fit of a constant reference.
double r_squared(std::span<const double> reference, std::span<const double> predicted);

/// Metrics over the samples of `dataset`: fidelity against the oracle,
/// predictive error against the recorded targets.
EvaluationReport evaluate(const Theory& theory, const Dataset& dataset, const Predictor& oracle,
                          std::string method = {});

/// Configurations for the methods to compare; absent entries are skipped.
struct MethodConfigs {
    std::optional<IterConfig> iter;
    std::optional<GridConfig> gridex;
    std::optional<GridConfig> gridrex;
    std::optional<ClusterConfig> cluster;

    /// All four methods with default settings.
    static MethodConfigs all();
};

/// An extractor failure tagged with the method that raised it.
class MethodError : public std::runtime_error {
public:
    MethodError(std::string method, const std::string& what);
    const std::string& method() const noexcept { return method_; }

private:
    std::string method_;
};

/// Runs every configured extractor on the same data and oracle; reports come
/// back in the order iter, gridex, gridrex, cluster.
std::vector<EvaluationReport> compare_methods(const Dataset& dataset, const Predictor& oracle,
                                              const MethodConfigs& configs);

/// Same, but evaluates on `evaluation` while extracting from `training`.
std::vector<EvaluationReport> compare_methods(const Dataset& training, const Dataset& evaluation,
                                              const Predictor& oracle, const MethodConfigs& configs);

std::string reports_to_csv(std::span<const EvaluationReport> reports);
std::string report_to_json(const EvaluationReport& report, int indent = 2);
std::string reports_to_json(std::span<const EvaluationReport> reports, int indent = 2);

} // namespace skex
