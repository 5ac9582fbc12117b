#include "skex/metrics.hpp"

#include "skex/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <functional>

namespace skex {

double r_squared(std::span<const double> reference, std::span<const double> predicted) {
    const double mean = mean_of(reference);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        ss_res += (reference[i] - predicted[i]) * (reference[i] - predicted[i]);
        ss_tot += (reference[i] - mean) * (reference[i] - mean);
    }
    if (ss_tot == 0.0) {
        return ss_res == 0.0 ? 1.0 : 0.0;
    }
    return 1.0 - ss_res / ss_tot;
}

EvaluationReport evaluate(const Theory& theory, const Dataset& dataset, const Predictor& oracle, std::string method) {
    if (dataset.empty()) {
        throw ContractError("evaluate: empty dataset");
    }
    const auto inputs = dataset.inputs();
    const auto reference = oracle.predict(inputs);
    std::vector<double> predicted;
    predicted.reserve(inputs.size());
    std::size_t covered = 0;
    for (const auto& x : inputs) {
        const auto hit = theory.match(x);
        if (hit) {
            ++covered;
        }
        predicted.push_back(evaluate_output(hit ? theory.rules[*hit].output : theory.default_output, x));
    }

    EvaluationReport report;
    report.method = std::move(method);
    report.rule_count = theory.rules.size();
    const double n = static_cast<double>(inputs.size());
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double truth_sum = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double e = predicted[i] - reference[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        truth_sum += std::abs(predicted[i] - dataset[i].y);
    }
    report.fidelity_mae = abs_sum / n;
    report.fidelity_mse = sq_sum / n;
    report.fidelity_r2 = r_squared(reference, predicted);
    report.predictive_mae = truth_sum / n;
    report.coverage = static_cast<double>(covered) / n;
    return report;
}

MethodConfigs MethodConfigs::all() {
    MethodConfigs configs;
    configs.iter = IterConfig{};
    configs.gridex = GridConfig{};
    configs.gridrex = GridConfig{};
    configs.gridrex->output_kind = OutputKind::linear;
    configs.cluster = ClusterConfig{};
    return configs;
}

MethodError::MethodError(std::string method, const std::string& what)
    : std::runtime_error(method + ": " + what), method_(std::move(method)) {}

std::vector<EvaluationReport> compare_methods(const Dataset& training, const Dataset& evaluation,
                                              const Predictor& oracle, const MethodConfigs& configs) {
    std::vector<EvaluationReport> reports;
    const auto run = [&](const std::string& name, const std::function<Theory()>& extract) {
        try {
            reports.push_back(evaluate(extract(), evaluation, oracle, name));
        } catch (const std::exception& e) {
            throw MethodError(name, e.what());
        }
    };
    if (configs.iter) {
        run("iter", [&] { return extract_iter(training, oracle, *configs.iter); });
    }
    if (configs.gridex) {
        GridConfig cfg = *configs.gridex;
        cfg.output_kind = OutputKind::constant;
        run("gridex", [&] { return extract_grid(training, oracle, cfg); });
    }
    if (configs.gridrex) {
        GridConfig cfg = *configs.gridrex;
        cfg.output_kind = OutputKind::linear;
        run("gridrex", [&] { return extract_grid(training, oracle, cfg); });
    }
    if (configs.cluster) {
        run("cluster", [&] { return extract_clustered(training, oracle, *configs.cluster); });
    }
    return reports;
}

std::vector<EvaluationReport> compare_methods(const Dataset& dataset, const Predictor& oracle,
                                              const MethodConfigs& configs) {
    return compare_methods(dataset, dataset, oracle, configs);
}

namespace {

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json report_json(const EvaluationReport& r) {
    return {{"method", r.method},
            {"rule_count", r.rule_count},
            {"fidelity_mae", r.fidelity_mae},
            {"fidelity_mse", r.fidelity_mse},
            {"fidelity_r2", r.fidelity_r2},
            {"predictive_mae", r.predictive_mae},
            {"coverage", r.coverage}};
}

} // namespace

std::string reports_to_csv(std::span<const EvaluationReport> reports) {
    std::string text = "method,rule_count,fidelity_mae,fidelity_mse,fidelity_r2,predictive_mae,coverage\n";
    for (const auto& r : reports) {
        text += r.method + "," + std::to_string(r.rule_count) + "," + g17(r.fidelity_mae) + "," +
                g17(r.fidelity_mse) + "," + g17(r.fidelity_r2) + "," + g17(r.predictive_mae) + "," +
                g17(r.coverage) + "\n";
    }
    return text;
}

std::string report_to_json(const EvaluationReport& report, int indent) {
    return report_json(report).dump(indent) + "\n";
}

std::string reports_to_json(std::span<const EvaluationReport> reports, int indent) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        arr.push_back(report_json(r));
    }
    return arr.dump(indent) + "\n";
}

} // namespace skex
