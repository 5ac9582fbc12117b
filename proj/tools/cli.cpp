#include "cli.hpp"

#include "skex/cluster.hpp"
#include "skex/config.hpp"
#include "skex/data.hpp"
#include "skex/error.hpp"
#include "skex/grid.hpp"
#include "skex/iter.hpp"
#include "skex/metrics.hpp"
#include "skex/random.hpp"
#include "skex/theory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>

namespace skex::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string data_path;
    std::string spec;
    std::string method;
    std::string out;
    std::string out_dir;
    std::string json_out;
    long long seed = -1;
    long long n = -1;
    double noise = -1.0;
    long long g = -1;
};

/// Files staged under temporary names and renamed only once all are written.
class StagedOutputs {
public:
    void add(const fs::path& target, const std::string& content) {
        const fs::path tmp = target.string() + ".tmp-skex";
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw DataError("cannot write '" + tmp.string() + "'");
        }
        out << content;
        out.close();
        if (!out) {
            throw DataError("failed writing '" + tmp.string() + "'");
        }
        staged_.emplace_back(tmp, target);
    }

    void commit() {
        for (const auto& [tmp, target] : staged_) {
            fs::rename(tmp, target);
        }
        staged_.clear();
    }

    ~StagedOutputs() {
        std::error_code ec;
        for (const auto& entry : staged_) {
            fs::remove(entry.first, ec);
        }
    }

private:
    std::vector<std::pair<fs::path, fs::path>> staged_;
};

RunConfig build_config(const Options& opt) {
    RunConfig config = opt.config_path.empty() ? RunConfig{} : RunConfig::load(opt.config_path);
    for (const auto& assignment : opt.overrides) {
        config.set_assignment(assignment);
    }
    if (opt.seed >= 0) {
        config.set("seed", std::to_string(opt.seed));
    }
    if (!opt.spec.empty()) {
        config.set("data.spec", opt.spec);
    }
    if (opt.n >= 0) {
        config.set("data.n", std::to_string(opt.n));
    }
    if (opt.noise >= 0.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", opt.noise);
        config.set("data.noise", buf);
    }
    if (opt.g >= 0) {
        config.set("plot.g", std::to_string(opt.g));
    }
    return config;
}

void require_parent_dir(const std::string& path, const char* what) {
    if (path.empty()) {
        throw ConfigError(std::string(what) + " path is required");
    }
    const fs::path parent = fs::absolute(path).parent_path();
    if (!fs::is_directory(parent)) {
        throw ConfigError(std::string(what) + ": directory '" + parent.string() + "' does not exist");
    }
}

void require_input(const Options& opt, const RunConfig& config) {
    if (!opt.data_path.empty()) {
        if (!fs::is_regular_file(opt.data_path)) {
            throw ConfigError("data file '" + opt.data_path + "' does not exist");
        }
    } else if (config.get("data.spec").empty()) {
        throw ConfigError("either --data or a benchmark spec (--spec / data.spec) is required");
    }
}

Dataset load_data(const Options& opt, const RunConfig& config) {
    if (!opt.data_path.empty()) {
        return read_csv(opt.data_path);
    }
    const auto spec = benchmark_spec(config.get("data.spec"));
    const double noise = config.get_double("data.noise");
    if (noise < 0.0) {
        throw ConfigError("data.noise must be non-negative");
    }
    const std::size_t n = config.get_size("data.n");
    if (n < 1) {
        throw ConfigError("data.n must be at least 1");
    }
    return generate(spec, n, noise, config.seed());
}

std::unique_ptr<Predictor> make_oracle(const RunConfig& config, const Dataset& data) {
    std::string kind = config.get("oracle");
    const std::string spec = config.get("data.spec");
    if (kind == "auto") {
        kind = spec.empty() ? "knn" : "exact";
    }
    if (kind == "exact") {
        if (spec.empty()) {
            throw ConfigError("oracle=exact needs data.spec");
        }
        auto oracle = std::make_unique<ExactPiecewise>(benchmark_spec(spec));
        if (oracle->spec().dim() != data.dim()) {
            throw DataError("data dimension does not match spec '" + spec + "'");
        }
        return oracle;
    }
    if (kind == "knn") {
        return std::make_unique<KNNRegressor>(data, config.get_size("oracle.k"));
    }
    throw ConfigError("oracle must be auto, exact or knn");
}

struct Split {
    Dataset training;
    Dataset evaluation;
};

Split holdout_split(const Dataset& data, const RunConfig& config) {
    const double fraction = config.get_double("eval.holdout");
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw ConfigError("eval.holdout must lie in [0, 1)");
    }
    if (fraction == 0.0) {
        return {data, data};
    }
    const std::size_t n = data.size();
    const auto n_eval = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    if (n_eval < 1 || n_eval >= n) {
        throw ConfigError("eval.holdout leaves an empty training or evaluation set");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derived(config.seed(), 0x686f6c64);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.index(i + 1)]);
    }
    std::vector<std::size_t> eval_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
    std::sort(eval_idx.begin(), eval_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {data.subset(train_idx), data.subset(eval_idx)};
}

Theory extract_with(const std::string& method, const Dataset& data, const Predictor& oracle,
                    const RunConfig& config) {
    if (method == "iter") {
        return extract_iter(data, oracle, config.iter());
    }
    if (method == "grid" || method == "gridex" || method == "gridrex") {
        GridConfig grid = config.grid();
        if (method == "gridex") {
            grid.output_kind = OutputKind::constant;
        } else if (method == "gridrex") {
            grid.output_kind = OutputKind::linear;
        }
        return extract_grid(data, oracle, grid);
    }
    if (method == "cluster") {
        return extract_clustered(data, oracle, config.cluster());
    }
    throw ConfigError("unknown method '" + method + "' (expected iter, grid, gridex, gridrex, cluster)");
}

int cmd_generate(const Options& opt, std::ostream& out) {
    const RunConfig config = build_config(opt);
    if (config.get("data.spec").empty()) {
        throw ConfigError("generate needs --spec");
    }
    require_parent_dir(opt.out, "--out");
    const Dataset data = load_data(Options{}, config);
    StagedOutputs files;
    files.add(opt.out, to_csv(data));
    files.commit();
    out << "wrote " << data.size() << " samples to " << opt.out << "\n";
    return kOk;
}

int cmd_extract(const Options& opt, std::ostream& out) {
    const RunConfig config = build_config(opt);
    require_input(opt, config);
    if (opt.out_dir.empty()) {
        throw ConfigError("--out-dir is required");
    }
    if (fs::exists(opt.out_dir) && !fs::is_directory(opt.out_dir)) {
        throw ConfigError("--out-dir '" + opt.out_dir + "' is not a directory");
    }
    require_parent_dir(fs::path(opt.out_dir).lexically_normal().string(), "--out-dir");
    const int precision = config.get_int("render.precision");
    if (precision < 0 || precision > 17) {
        throw ConfigError("render.precision must lie in [0, 17]");
    }

    const Dataset data = load_data(opt, config);
    const auto oracle = make_oracle(config, data);
    const Split split = holdout_split(data, config);
    const Theory theory = extract_with(opt.method, split.training, *oracle, config);
    const EvaluationReport report = evaluate(theory, split.evaluation, *oracle, opt.method);

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    StagedOutputs files;
    files.add(dir / "theory.txt", render(theory, precision));
    files.add(dir / "theory.json", theory_to_json(theory));
    files.add(dir / "report.json", report_to_json(report));
    files.commit();
    out << render(theory, precision);
    return kOk;
}

int cmd_compare(const Options& opt, std::ostream& out) {
    const RunConfig config = build_config(opt);
    require_input(opt, config);
    require_parent_dir(opt.out, "--out");
    if (!opt.json_out.empty()) {
        require_parent_dir(opt.json_out, "--json");
    }
    const MethodConfigs methods = config.methods();

    const Dataset data = load_data(opt, config);
    const auto oracle = make_oracle(config, data);
    const Split split = holdout_split(data, config);
    const auto reports = compare_methods(split.training, split.evaluation, *oracle, methods);

    StagedOutputs files;
    files.add(opt.out, reports_to_csv(reports));
    if (!opt.json_out.empty()) {
        files.add(opt.json_out, reports_to_json(reports));
    }
    files.commit();
    out << reports_to_csv(reports);
    return kOk;
}

int cmd_plotgrid(const Options& opt, std::ostream& out) {
    const RunConfig config = build_config(opt);
    require_input(opt, config);
    require_parent_dir(opt.out, "--out");
    const long long g = config.get_int("plot.g");
    if (g < 1) {
        throw ConfigError("plot.g must be at least 1");
    }

    const Dataset data = load_data(opt, config);
    if (data.dim() != 2) {
        throw DataError("plotgrid needs two input features");
    }
    const auto oracle = make_oracle(config, data);
    const Theory theory = extract_with(opt.method, data, *oracle, config);

    const auto& box = theory.domain.bounds;
    std::string text = data.feature_names()[0] + "," + data.feature_names()[1] + ",prediction,rule\n";
    char buf[128];
    for (long long i = 0; i < g; ++i) {
        for (long long j = 0; j < g; ++j) {
            const Point p{box[0].lo + box[0].width() * (static_cast<double>(i) + 0.5) / static_cast<double>(g),
                          box[1].lo + box[1].width() * (static_cast<double>(j) + 0.5) / static_cast<double>(g)};
            const auto hit = theory.match(p);
            const double y = evaluate_output(hit ? theory.rules[*hit].output : theory.default_output, p);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%lld\n", p[0], p[1], y,
                          hit ? static_cast<long long>(*hit) : -1LL);
            text += buf;
        }
    }
    StagedOutputs files;
    files.add(opt.out, text);
    files.commit();
    out << "wrote " << g * g << " lattice points to " << opt.out << "\n";
    return kOk;
}

int cmd_keys(std::ostream& out) {
    for (const auto& key : config_keys()) {
        out << key.name << " = " << (key.default_value.empty() ? "(unset)" : key.default_value) << "    # "
            << key.description << "\n";
    }
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rule extraction from black-box regressors"};
    app.require_subcommand(1);
    Options opt;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "key=value configuration file");
        cmd->add_option("--set", opt.overrides, "override a config key (key=value), repeatable");
        cmd->add_option("--seed", opt.seed, "global seed (overrides 'seed')");
    };
    const auto add_data = [&](CLI::App* cmd) {
        cmd->add_option("--data", opt.data_path, "input CSV");
        cmd->add_option("--spec", opt.spec, "built-in benchmark to generate instead of --data");
        cmd->add_option("--n", opt.n, "samples per benchmark region");
        cmd->add_option("--noise", opt.noise, "Gaussian noise standard deviation");
    };

    auto* generate_cmd = app.add_subcommand("generate", "write a benchmark dataset as CSV");
    add_common(generate_cmd);
    generate_cmd->add_option("--spec", opt.spec, "benchmark name");
    generate_cmd->add_option("--n", opt.n, "samples per region");
    generate_cmd->add_option("--noise", opt.noise, "Gaussian noise standard deviation");
    generate_cmd->add_option("--out", opt.out, "output CSV")->required();

    auto* extract_cmd = app.add_subcommand("extract", "extract a theory with one method");
    add_common(extract_cmd);
    add_data(extract_cmd);
    extract_cmd->add_option("--method", opt.method, "iter, grid, gridex, gridrex or cluster")->required();
    extract_cmd->add_option("--out-dir", opt.out_dir, "directory for theory.txt, theory.json, report.json")
        ->required();

    auto* compare_cmd = app.add_subcommand("compare", "run all methods and write a report CSV");
    add_common(compare_cmd);
    add_data(compare_cmd);
    compare_cmd->add_option("--out", opt.out, "report CSV")->required();
    compare_cmd->add_option("--json", opt.json_out, "optional report JSON");

    auto* plot_cmd = app.add_subcommand("plotgrid", "evaluate a theory on a g x g lattice");
    add_common(plot_cmd);
    add_data(plot_cmd);
    plot_cmd->add_option("--method", opt.method, "extraction method")->required();
    plot_cmd->add_option("--g", opt.g, "lattice points per axis");
    plot_cmd->add_option("--out", opt.out, "output CSV")->required();

    auto* keys_cmd = app.add_subcommand("keys", "list configuration keys and defaults");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (generate_cmd->parsed()) {
            return cmd_generate(opt, out);
        }
        if (extract_cmd->parsed()) {
            return cmd_extract(opt, out);
        }
        if (compare_cmd->parsed()) {
            return cmd_compare(opt, out);
        }
        if (plot_cmd->parsed()) {
            return cmd_plotgrid(opt, out);
        }
        if (keys_cmd->parsed()) {
            return cmd_keys(out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ContractError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const MethodError& e) {
        err << "extraction failed: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    }
    return kConfigError;
}

} // namespace skex::cli
