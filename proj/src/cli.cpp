#include "suremap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "suremap/ablation.hpp"
#include "suremap/benchmark.hpp"
#include "suremap/error.hpp"
#include "suremap/io.hpp"
#include "suremap/methods.hpp"
#include "suremap/oracle.hpp"
#include "suremap/simulate.hpp"

namespace suremap {

namespace {

struct GlobalFlags {
    std::uint64_t seed = 0;
    std::string output;
    std::string format = "json";
};

// Estimator flags shared by estimate, benchmark and ablate.
struct EstimatorFlags {
    CLI::Option* max_iter = nullptr;
    CLI::Option* gtol = nullptr;
    CLI::Option* max_order = nullptr;
    CLI::Option* variant = nullptr;
    CLI::Option* allow_negative = nullptr;
    CLI::Option* multistart = nullptr;
    CLI::Option* fallback_pooled = nullptr;
    CLI::Option* center = nullptr;

    int max_iter_value = 200;
    double gtol_value = 1e-8;
    int max_order_value = 0;
    std::string variant_value = "metamap";
    std::string center_path;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f) {
    f.max_iter = cmd->add_option("--max-iter", f.max_iter_value, "Optimizer iteration budget (default 200)");
    f.gtol = cmd->add_option("--gtol", f.gtol_value, "Projected-gradient tolerance (default 1e-8)");
    f.max_order = cmd->add_option("--max-order", f.max_order_value,
                                  "Highest free interaction order; -1 keeps only the full set");
    f.variant = cmd->add_option("--variant", f.variant_value, "Multi-task center: metamap or suresolve")
                    ->check(CLI::IsMember({"metamap", "suresolve"}));
    f.allow_negative = cmd->add_flag("--allow-negative-center", "Skip the nonnegativity clamp on the center");
    f.multistart = cmd->add_flag("--multistart", "Add four rescaled optimizer starts");
    f.fallback_pooled =
        cmd->add_flag("--fallback-pooled", "mt-global/mt-offset: use the pooled mean where no task has data");
    f.center = cmd->add_option("--center", f.center_path, "bock: JSON array with the shrinkage target");
}

bool any_of(const std::vector<std::string>& methods, std::initializer_list<const char*> names) {
    for (const auto& m : methods)
        for (const char* n : names)
            if (m == n) return true;
    return false;
}

void require_method(const CLI::Option* opt, const std::vector<std::string>& methods,
                    std::initializer_list<const char*> allowed) {
    if (opt->count() == 0 || any_of(methods, allowed)) return;
    std::string names;
    for (const char* n : allowed) names += std::string(names.empty() ? "" : ", ") + n;
    throw UsageError(opt->get_name() + " only applies to " + names);
}

MethodOptions method_options(const EstimatorFlags& f, const std::vector<std::string>& methods, int k) {
    require_method(f.max_iter, methods, {"suremap", "mt-suremap"});
    require_method(f.gtol, methods, {"suremap", "mt-suremap"});
    require_method(f.max_order, methods, {"suremap", "mt-suremap"});
    require_method(f.multistart, methods, {"suremap", "mt-suremap"});
    require_method(f.variant, methods, {"mt-suremap"});
    require_method(f.allow_negative, methods, {"mt-suremap"});
    require_method(f.fallback_pooled, methods, {"mt-global", "mt-offset"});
    require_method(f.center, methods, {"bock"});

    MethodOptions options;
    if (f.max_iter->count() && f.max_iter_value < 1) throw UsageError("--max-iter must be positive");
    if (f.gtol->count() && !(f.gtol_value > 0.0)) throw UsageError("--gtol must be positive");
    options.fit.max_iterations = f.max_iter_value;
    options.fit.gradient_tolerance = f.gtol_value;
    if (f.max_order->count()) {
        if (k >= 0 && (f.max_order_value < -1 || f.max_order_value > k))
            throw UsageError("--max-order must lie in [-1, " + std::to_string(k) + "]");
        options.fit.max_order = f.max_order_value;
    }
    options.fit.variant = parse_variant(f.variant_value);
    options.fit.nonneg_center = f.allow_negative->count() == 0;
    options.fit.multistart = f.multistart->count() > 0;
    options.global.fallback_pooled = f.fallback_pooled->count() > 0;
    if (f.center->count()) options.bock_center = vector_from_json(read_json_file(f.center_path), "--center");
    return options;
}

void emit(const GlobalFlags& g, std::ostream& out, const std::string& text) {
    if (g.output.empty() || g.output == "-") {
        out << text;
        out.flush();
    } else {
        write_text(g.output, text);
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void require_format(const GlobalFlags& g) {
    if (g.format != "json" && g.format != "csv") throw UsageError("--format must be json or csv");
}

std::string group_label_columns(const AttributeSpace& space, int g) {
    std::string s;
    const auto classes = space.group_classes(g);
    for (int a = 0; a < space.k(); ++a) s += space.attribute(a).levels[classes[a]] + ",";
    return s;
}

std::string attribute_header(const AttributeSpace& space) {
    std::string s;
    for (const auto& a : space.attributes()) s += a.name + ",";
    return s;
}

// ---------------------------------------------------------------- summarize

struct SummarizeArgs {
    std::string input;
    std::string space;
    bool auc = false;
    double floor = 1e-12;
    double fallback = 0.0;
    CLI::Option* fallback_opt = nullptr;
};

CsvOptions csv_options(const std::string& space_path, bool auc) {
    CsvOptions o;
    o.auc = auc;
    if (!space_path.empty()) o.space = space_from_json(read_json_file(space_path));
    return o;
}

void cmd_summarize(const GlobalFlags& g, const SummarizeArgs& a, std::ostream& out) {
    require_format(g);
    const Dataset data = read_csv_file(a.input, csv_options(a.space, a.auc));
    SummarizeOptions options;
    options.sigma2_floor = a.floor;
    if (a.fallback_opt->count()) {
        if (!(a.fallback > 0.0)) throw UsageError("--fallback-sigma2 must be positive");
        options.fallback_sigma2 = a.fallback;
    }
    const auto tasks = summarize_dataset(data, options);
    if (g.format == "json") {
        emit(g, out, dump(summaries_to_json(data.space, tasks)));
        return;
    }
    std::ostringstream csv;
    csv << "task," << attribute_header(data.space) << "y,n\n";
    for (const auto& t : tasks)
        for (int grp = 0; grp < t.d(); ++grp)
            csv << t.id << ',' << group_label_columns(data.space, grp) << format_number(t.y[grp]) << ',' << t.n[grp]
                << '\n';
    emit(g, out, csv.str());
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string input;
    std::string method;
    bool verify_oracle = false;
    EstimatorFlags flags;
};

void add_fit_fields(Json& j, const AttributeSpace& space, const FitResult& fit) {
    j["tau2_hat"] = subset_vector_to_json(space, fit.tau2);
    if (fit.upsilon2.size() > 0) j["upsilon2_hat"] = subset_vector_to_json(space, fit.upsilon2);
    if (fit.theta.size() > 0) j["theta_hat"] = vector_to_json(fit.theta);
    j["objective"] = fit.objective;
    j["initial_objective"] = fit.initial_objective;
    j["iterations"] = fit.iterations;
    j["status"] = std::string(status_name(fit.status));
}

// Ridge parameters for the oracle: fitted values, with zero entries raised to
// 1e-4 of the largest entry so that every prior variance is positive.
Eigen::VectorXd interior(const Eigen::VectorXd& v, bool& floored) {
    const double top = std::max(v.maxCoeff(), 1e-8);
    Eigen::VectorXd out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!(out[i] > 0.0)) {
            out[i] = 1e-4 * top;
            floored = true;
        }
    return out;
}

double sup_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

Json oracle_single(const TaskSummary& task, const PriorStructure& structure, const FitResult& fit) {
    bool floored = false;
    const Eigen::VectorXd tau2 = interior(fit.tau2, floored);
    const Eigen::VectorXd ridge = ridge_single(task, structure, tau2).mu_hat;
    const Eigen::VectorXd map =
        map_estimate(task, Eigen::VectorXd::Zero(task.d()), build_covariance(structure, tau2)).mu_hat;
    return {{"parameters", floored ? "floored" : "fitted"}, {"max_discrepancy", sup_distance(ridge, map)}};
}

Json oracle_multi(std::span<const TaskSummary> tasks, const PriorStructure& structure, const FitResult& fit) {
    bool floored = false;
    const Eigen::VectorXd tau2 = interior(fit.tau2, floored);
    const Eigen::VectorXd ups = interior(fit.upsilon2, floored);
    const auto ridge = ridge_multi(tasks, structure, tau2, ups);
    const auto est = mt_estimate(tasks, structure, tau2, ups, Variant::metamap, false);
    double worst = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) worst = std::max(worst, sup_distance(ridge[t].mu_hat, est[t].mu_hat));
    return {{"parameters", floored ? "floored" : "fitted"}, {"max_discrepancy", worst}};
}

void cmd_estimate(const GlobalFlags& g, const EstimateArgs& a, std::ostream& out) {
    require_format(g);
    if (!is_known_method(a.method)) throw UsageError("unknown method '" + a.method + "'");
    const std::vector<std::string> methods = {a.method};
    if (a.verify_oracle && !is_fitted_method(a.method))
        throw UsageError("--verify-oracle only applies to suremap, mt-suremap");
    const SummaryFile file = summaries_from_json(read_json_file(a.input));
    const MethodOptions options = method_options(a.flags, methods, file.space.k());
    if (a.verify_oracle && a.method == "mt-suremap" && options.fit.variant != Variant::metamap)
        throw UsageError("--verify-oracle needs the metamap variant");
    if (a.method == "mt-bock" && file.tasks.size() < 2) throw UsageError("mt-bock needs at least two tasks");

    const PriorStructure structure(file.space);
    const MethodRun run = run_method(a.method, file.tasks, structure, options);

    if (g.format == "csv") {
        std::ostringstream csv;
        csv << "task," << attribute_header(file.space) << "mu_hat\n";
        for (std::size_t t = 0; t < file.tasks.size(); ++t)
            for (int grp = 0; grp < file.space.d(); ++grp)
                csv << file.tasks[t].id << ',' << group_label_columns(file.space, grp)
                    << format_number(run.outputs[t].mu_hat[grp]) << '\n';
        emit(g, out, csv.str());
        return;
    }

    Json j;
    j["method"] = a.method;
    j["attributes"] = space_to_json(file.space);
    Json tasks = Json::array();
    for (std::size_t t = 0; t < file.tasks.size(); ++t) {
        Json task;
        task["id"] = file.tasks[t].id;
        task["mu_hat"] = vector_to_json(run.outputs[t].mu_hat);
        std::vector<std::string> prov;
        for (auto p : run.outputs[t].provenance) prov.push_back(p == Provenance::direct ? "direct" : "fallback");
        task["provenance"] = prov;
        if (a.method == "suremap") {
            add_fit_fields(task, file.space, run.fits[t]);
            if (a.verify_oracle) task["oracle"] = oracle_single(file.tasks[t], structure, run.fits[t]);
        }
        tasks.push_back(std::move(task));
    }
    j["tasks"] = std::move(tasks);
    if (a.method == "mt-suremap") {
        j["variant"] = std::string(variant_name(options.fit.variant));
        add_fit_fields(j, file.space, run.fits[0]);
        if (a.verify_oracle) j["oracle"] = oracle_multi(file.tasks, structure, run.fits[0]);
    }
    emit(g, out, dump(j));
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
    std::string input;
    std::string space;
    bool auc = false;
    std::vector<std::string> methods;
    std::vector<double> rates;
    int trials = 0;
    int threshold = 40;
    std::string metric = "mae";
    int threads = 0;
    std::string csv;
    EstimatorFlags flags;
};

void cmd_benchmark(const GlobalFlags& g, BenchmarkArgs a, std::ostream& out) {
    require_format(g);
    std::sort(a.rates.begin(), a.rates.end());
    if (std::adjacent_find(a.rates.begin(), a.rates.end()) != a.rates.end())
        throw UsageError("--rates lists a rate twice");
    if (a.threads < 0) throw UsageError("--threads must be nonnegative");
    for (const auto& m : a.methods)
        if (!is_known_method(m)) throw UsageError("unknown method '" + m + "'");
    BenchmarkSpec spec;
    spec.methods = a.methods;
    spec.rates = a.rates;
    spec.trials = a.trials;
    spec.seed = g.seed;
    spec.threshold = a.threshold;
    spec.metric = parse_metric(a.metric);
    const Dataset data = read_csv_file(a.input, csv_options(a.space, a.auc));
    spec.options = method_options(a.flags, a.methods, data.space.k());
    spec.validate(data.task_count());
    const TrialReport report = run_benchmark(data, spec, a.threads);

    std::ostringstream csv;
    write_report_csv(csv, report);
    if (!a.csv.empty()) write_text(a.csv, csv.str());
    emit(g, out, g.format == "json" ? dump(report_to_json(report)) : csv.str());
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string spec;
    std::uint64_t trial = 0;
};

SyntheticSpec load_synthetic(const std::string& path) {
    SyntheticSpec spec = path.empty() ? default_synthetic_spec() : synthetic_from_json(read_json_file(path));
    spec.validate();
    return spec;
}

void cmd_simulate(const GlobalFlags& g, const SimulateArgs& a, std::ostream& out) {
    require_format(g);
    const SyntheticSpec spec = load_synthetic(a.spec);
    const PriorStructure structure(spec.space);
    const SyntheticDraw draw = simulate(spec, structure, g.seed, a.trial);
    if (g.format == "json") {
        emit(g, out, dump(draw_to_json(spec.space, draw)));
        return;
    }
    std::ostringstream csv;
    write_csv(csv, simulate_rows(spec, draw, g.seed, a.trial));
    emit(g, out, csv.str());
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
    std::string sweep;
    std::vector<double> values;
    std::vector<std::string> methods;
    int trials = 40;
    std::string input;
    std::string space;
    bool auc = false;
    double rate = 1.0;
    int threshold = 40;
    std::string spec;
    std::string metric = "mae";
    int threads = 0;
    CLI::Option* input_opt = nullptr;
    CLI::Option* rate_opt = nullptr;
    CLI::Option* threshold_opt = nullptr;
    EstimatorFlags flags;
};

void cmd_ablate(const GlobalFlags& g, const AblateArgs& a, std::ostream& out) {
    require_format(g);
    if (a.threads < 0) throw UsageError("--threads must be nonnegative");
    AblationSpec spec;
    spec.sweep = parse_sweep(a.sweep);
    spec.values = a.values;
    spec.methods = a.methods;
    spec.trials = a.trials;
    spec.seed = g.seed;
    spec.metric = parse_metric(a.metric);
    spec.rate = a.rate;
    spec.threshold = a.threshold;
    if (spec.sweep == Sweep::max_order && a.flags.max_order->count())
        throw UsageError("--max-order cannot be combined with a max-order sweep");
    const bool with_data = a.input_opt->count() > 0;
    if (with_data && spec.sweep != Sweep::max_order)
        throw UsageError("--input only applies to the max-order sweep; task and alpha sweeps are synthetic");
    if (!with_data && (a.rate_opt->count() || a.threshold_opt->count()))
        throw UsageError("--rate and --threshold need --input");
    if (with_data && !a.spec.empty()) throw UsageError("--spec cannot be combined with --input");
    if (!(a.rate > 0.0 && a.rate <= 1.0)) throw UsageError("--rate must lie in (0, 1]");
    spec.validate();

    std::optional<Dataset> data;
    if (with_data) data = read_csv_file(a.input, csv_options(a.space, a.auc));
    else spec.synthetic = load_synthetic(a.spec);
    const int k = data ? data->space.k() : spec.synthetic.space.k();
    spec.options = method_options(a.flags, a.methods, k);

    const AblationReport report = run_ablation(spec, data ? &*data : nullptr, a.threads);
    if (g.format == "json") {
        emit(g, out, dump(ablation_to_json(report)));
        return;
    }
    std::ostringstream csv;
    write_ablation_csv(csv, report);
    emit(g, out, csv.str());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Disaggregated evaluation with SURE-tuned structured shrinkage", "suremap"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalFlags g;
    app.add_option("--seed", g.seed, "Seed of every random stream (default 0)");
    app.add_option("--output", g.output, "Write the report to this file instead of standard output");
    app.add_option("--format", g.format, "Report format: json or csv (default json)");

    SummarizeArgs sa;
    auto* summarize = app.add_subcommand("summarize", "Group means, counts and pooled variance from a raw CSV");
    summarize->add_option("input,--input", sa.input, "Raw CSV file")->required();
    summarize->add_option("--space", sa.space, "JSON attribute space fixing attribute order and levels");
    summarize->add_flag("--auc", sa.auc, "Rows carry label and score; summarize per-group AUC");
    summarize->add_option("--sigma2-floor", sa.floor, "Lower bound on the pooled variance (default 1e-12)");
    sa.fallback_opt = summarize->add_option("--fallback-sigma2", sa.fallback,
                                            "Variance to use when no residual degrees of freedom remain");

    EstimateArgs ea;
    auto* estimate = app.add_subcommand("estimate", "Run one estimator on a summary JSON");
    estimate->add_option("input,--input", ea.input, "Summary JSON file")->required();
    estimate->add_option("--method", ea.method, "Estimator name")->required();
    estimate->add_flag("--verify-oracle", ea.verify_oracle, "Cross-check a SureMap fit against ridge regression");
    add_estimator_flags(estimate, ea.flags);

    BenchmarkArgs ba;
    auto* benchmark = app.add_subcommand("benchmark", "Subsampling benchmark against full-data ground truth");
    benchmark->add_option("input,--input", ba.input, "Raw CSV file")->required();
    benchmark->add_option("--space", ba.space, "JSON attribute space");
    benchmark->add_flag("--auc", ba.auc, "Rows carry label and score; benchmark per-group AUC");
    benchmark->add_option("--methods", ba.methods, "Comma-separated estimator names")->delimiter(',')->required();
    benchmark->add_option("--rates", ba.rates, "Comma-separated subsampling rates in (0, 1]")
        ->delimiter(',')
        ->required();
    benchmark->add_option("--trials", ba.trials, "Trials per rate (default 200 single-task, 40 multi-task)");
    benchmark->add_option("--threshold", ba.threshold, "Minimum rows for a group to be scored (default 40)");
    benchmark->add_option("--metric", ba.metric, "mae, rmse or weighted-mse (default mae)");
    benchmark->add_option("--threads", ba.threads, "Worker threads; 1 runs serially, 0 uses the OpenMP default");
    benchmark->add_option("--csv", ba.csv, "Also write the flat per-trial CSV to this file");
    add_estimator_flags(benchmark, ba.flags);

    SimulateArgs ma;
    auto* simulate_cmd = app.add_subcommand("simulate", "Draw synthetic tasks from the hierarchical prior");
    simulate_cmd->add_option("--spec", ma.spec, "Synthetic spec JSON (default: built-in hierarchical spec)");
    simulate_cmd->add_option("--trial", ma.trial, "Draw index within the seed (default 0)");

    AblateArgs aa;
    auto* ablate = app.add_subcommand("ablate", "Sweep max order, task count or task similarity");
    ablate->add_option("--sweep", aa.sweep, "max-order, tasks or alpha")->required();
    ablate->add_option("--values", aa.values, "Comma-separated sweep values")->delimiter(',')->required();
    ablate->add_option("--methods", aa.methods, "Comma-separated estimator names")->delimiter(',')->required();
    ablate->add_option("--trials", aa.trials, "Trials per sweep value (default 40)");
    aa.input_opt = ablate->add_option("--input", aa.input, "Raw CSV for a data-driven max-order sweep");
    ablate->add_option("--space", aa.space, "JSON attribute space for --input");
    ablate->add_flag("--auc", aa.auc, "--input rows carry label and score");
    aa.rate_opt = ablate->add_option("--rate", aa.rate, "Subsampling rate for --input (default 1)");
    aa.threshold_opt = ablate->add_option("--threshold", aa.threshold, "Truth threshold for --input (default 40)");
    ablate->add_option("--spec", aa.spec, "Synthetic spec JSON");
    ablate->add_option("--metric", aa.metric, "mae, rmse or weighted-mse (default mae)");
    ablate->add_option("--threads", aa.threads, "Worker threads; 1 runs serially, 0 uses the OpenMP default");
    add_estimator_flags(ablate, aa.flags);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsageError;
    }

    try {
        if (*summarize) cmd_summarize(g, sa, out);
        else if (*estimate) cmd_estimate(g, ea, out);
        else if (*benchmark) cmd_benchmark(g, ba, out);
        else if (*simulate_cmd) cmd_simulate(g, ma, out);
        else if (*ablate) cmd_ablate(g, aa, out);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitDataError;
}

}  // namespace suremap
