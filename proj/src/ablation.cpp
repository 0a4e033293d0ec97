#include "suremap/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>

#include <omp.h>

#include "suremap/error.hpp"

namespace suremap {

Sweep parse_sweep(std::string_view name) {
    if (name == "max-order") return Sweep::max_order;
    if (name == "tasks") return Sweep::tasks;
    if (name == "alpha") return Sweep::alpha;
    throw UsageError("unknown sweep '" + std::string(name) + "' (expected max-order, tasks or alpha)");
}

std::string_view sweep_name(Sweep s) {
    switch (s) {
        case Sweep::max_order: return "max-order";
        case Sweep::tasks: return "tasks";
        case Sweep::alpha: return "alpha";
    }
    return "max-order";
}

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

void AblationSpec::validate() const {
    if (values.empty()) throw UsageError("the sweep needs at least one value");
    if (methods.empty()) throw UsageError("at least one method is required");
    for (const auto& m : methods)
        if (!is_known_method(m)) throw UsageError("unknown method '" + m + "'");
    if (trials < 1) throw UsageError("trials must be positive");
    for (double v : values) {
        switch (sweep) {
            case Sweep::max_order:
                if (!is_integer(v) || v < -1) throw UsageError("max-order values must be integers >= -1");
                break;
            case Sweep::tasks:
                if (!is_integer(v) || v < 1) throw UsageError("task counts must be positive integers");
                if (v < 2)
                    for (const auto& m : methods)
                        if (m == "mt-bock") throw UsageError("mt-bock needs at least two tasks");
                break;
            case Sweep::alpha:
                if (!(v >= 0.0 && v <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
                break;
        }
    }
}

std::vector<double> synthetic_trial(const SyntheticSpec& spec, const std::vector<std::string>& methods,
                                    const MethodOptions& options, Metric metric, double alpha,
                                    std::uint64_t seed, int trial) {
    const PriorStructure structure(spec.space);
    const SyntheticDraw draw = simulate(spec, structure, seed, static_cast<std::uint64_t>(trial));
    std::vector<TaskSummary> tasks = draw.tasks;
    std::vector<Eigen::VectorXd> truth_mu = draw.mu;
    if (alpha >= 0.0) {
        const Dataset rows = reassign_tasks(simulate_rows(spec, draw, seed, static_cast<std::uint64_t>(trial)), alpha,
                                            seed, static_cast<std::uint64_t>(trial));
        SummarizeOptions so;
        so.fallback_sigma2 = spec.sigma2;
        tasks = summarize_dataset(rows, so);
        truth_mu = mixed_truth(draw.mu, alpha);
    }

    std::vector<double> out(methods.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MethodRun run;
        try {
            run = run_method(methods[m], tasks, structure, options);
        } catch (const DataError&) {
            continue;
        } catch (const NumericalError&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        double sum = 0.0;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            const GroundTruth truth{truth_mu[t], std::vector<bool>(static_cast<std::size_t>(spec.space.d()), true)};
            sum += score(metric, run.outputs[t].mu_hat, truth, tasks[t].n);
        }
        out[m] = sum / static_cast<double>(tasks.size());
    }
    return out;
}

namespace {

std::vector<std::vector<double>> synthetic_trials(const SyntheticSpec& spec, const AblationSpec& ablation,
                                                  const MethodOptions& options, double alpha, int threads) {
    std::vector<std::vector<double>> slots(static_cast<std::size_t>(ablation.trials));
    if (threads == 1) {
        for (int trial = 0; trial < ablation.trials; ++trial)
            slots[trial] = synthetic_trial(spec, ablation.methods, options, ablation.metric, alpha, ablation.seed, trial);
        return slots;
    }
    std::exception_ptr error;
    int error_trial = ablation.trials;
    const int workers = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (int trial = 0; trial < ablation.trials; ++trial) {
        try {
            slots[trial] = synthetic_trial(spec, ablation.methods, options, ablation.metric, alpha, ablation.seed, trial);
        } catch (...) {
#pragma omp critical(suremap_ablation_error)
            if (trial < error_trial) {
                error_trial = trial;
                error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
    return slots;
}

int free_entry_count(int k, int max_order) {
    int c = 0;
    for (bool free : order_mask(k, max_order)) c += free ? 1 : 0;
    return c;
}

}  // namespace

AblationReport run_ablation(const AblationSpec& spec, const Dataset* data, int threads) {
    spec.validate();
    AblationReport report{std::string(sweep_name(spec.sweep)), std::string(metric_name(spec.metric)), {}};
    const int k = data ? data->space.k() : spec.synthetic.space.k();

    for (double value : spec.values) {
        MethodOptions options = spec.options;
        SyntheticSpec synthetic = spec.synthetic;
        double alpha = -1.0;
        int free_entries = -1;
        switch (spec.sweep) {
            case Sweep::max_order: {
                const int ell = std::min(static_cast<int>(value), k);
                options.fit.max_order = ell;
                free_entries = free_entry_count(k, ell);
                break;
            }
            case Sweep::tasks: synthetic.tasks = static_cast<int>(value); break;
            case Sweep::alpha: alpha = value; break;
        }

        if (spec.sweep == Sweep::max_order && data) {
            BenchmarkSpec bench;
            bench.methods = spec.methods;
            bench.rates = {spec.rate};
            bench.trials = spec.trials;
            bench.seed = spec.seed;
            bench.threshold = spec.threshold;
            bench.metric = spec.metric;
            bench.options = options;
            for (auto& cell : run_benchmark(*data, bench, threads).cells)
                report.rows.push_back(
                    {value, cell.method, cell.mean, cell.ci_halfwidth, cell.failures, free_entries, cell.values});
            continue;
        }

        const auto slots = synthetic_trials(synthetic, spec, options, alpha, threads);
        for (std::size_t m = 0; m < spec.methods.size(); ++m) {
            AblationRow row;
            row.value = value;
            row.method = spec.methods[m];
            row.free_entries = free_entries;
            for (const auto& slot : slots) {
                row.values.push_back(slot[m]);
                if (!std::isfinite(slot[m])) ++row.failures;
            }
            const Interval ci = mean_interval(row.values);
            row.mean = ci.mean;
            row.ci_halfwidth = ci.halfwidth;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

Json ablation_to_json(const AblationReport& report) {
    Json rows = Json::array();
    for (const auto& row : report.rows) {
        Json r;
        r["value"] = row.value;
        r["method"] = row.method;
        r["mean"] = row.mean;
        r["ci_halfwidth"] = row.ci_halfwidth;
        r["failures"] = row.failures;
        if (row.free_entries >= 0) r["free_tau2_entries"] = row.free_entries;
        r["values"] = row.values;
        rows.push_back(std::move(r));
    }
    return Json{{"sweep", report.sweep}, {"metric", report.metric}, {"rows", std::move(rows)}};
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
    out << "sweep,value,method,mean,ci_halfwidth,failures\n";
    for (const auto& row : report.rows)
        out << report.sweep << ',' << format_number(row.value) << ',' << row.method << ',' << format_number(row.mean)
            << ',' << format_number(row.ci_halfwidth) << ',' << row.failures << '\n';
}

}  // namespace suremap
