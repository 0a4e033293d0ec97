#include "suremap/benchmark.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <set>

#include <omp.h>

#include "suremap/error.hpp"
#include "suremap/random.hpp"

namespace suremap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Metric parse_metric(std::string_view name) {
    if (name == "mae") return Metric::mae;
    if (name == "rmse") return Metric::rmse;
    if (name == "weighted-mse") return Metric::weighted_mse;
    throw UsageError("unknown metric '" + std::string(name) + "' (expected mae, rmse or weighted-mse)");
}

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::mae: return "mae";
        case Metric::rmse: return "rmse";
        case Metric::weighted_mse: return "weighted-mse";
    }
    return "mae";
}

double score(Metric metric, const Eigen::VectorXd& mu_hat, const GroundTruth& truth, const Eigen::VectorXi& counts) {
    switch (metric) {
        case Metric::mae: return mae(mu_hat, truth);
        case Metric::rmse: return rmse(mu_hat, truth);
        case Metric::weighted_mse: return weighted_mse(mu_hat, truth, counts);
    }
    return mae(mu_hat, truth);
}

void BenchmarkSpec::validate(int task_count) const {
    if (methods.empty()) throw UsageError("at least one method is required");
    std::set<std::string> seen;
    for (const auto& m : methods) {
        if (!is_known_method(m)) throw UsageError("unknown method '" + m + "'");
        if (!seen.insert(m).second) throw UsageError("method '" + m + "' listed twice");
        if (m == "mt-bock" && task_count < 2) throw UsageError("mt-bock needs at least two tasks");
    }
    if (rates.empty()) throw UsageError("at least one subsampling rate is required");
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] > 0.0 && rates[i] <= 1.0)) throw UsageError("rates must lie in (0, 1]");
        if (i > 0 && !(rates[i] > rates[i - 1])) throw UsageError("rates must be strictly ascending");
    }
    if (trials < 0) throw UsageError("trials must be positive");
    if (threshold < 1) throw UsageError("truth threshold must be at least 1");
}

int BenchmarkSpec::resolved_trials(int task_count) const {
    if (trials > 0) return trials;
    return task_count > 1 ? 40 : 200;
}

BenchmarkPlan plan_benchmark(const Dataset& data, const BenchmarkSpec& spec) {
    const int tc = data.task_count();
    spec.validate(tc);
    BenchmarkPlan plan;
    plan.data = &data;
    plan.spec = spec;
    plan.trials = spec.resolved_trials(tc);
    plan.methods = spec.methods;
    if (std::find(plan.methods.begin(), plan.methods.end(), "naive") == plan.methods.end())
        plan.methods.push_back("naive");
    plan.rows = data.rows_by_task();
    plan.truth = dataset_truth(data, spec.threshold);
    plan.counts = group_counts(data);
    bool any = false;
    for (const auto& truth : plan.truth) {
        plan.scored.push_back(truth.included_count() > 0);
        any = any || plan.scored.back();
    }
    if (!any)
        throw DataError("no group has at least " + std::to_string(spec.threshold) +
                        " rows; lower the truth threshold or supply more data");
    plan.full_sigma2 = summarize_dataset(data).front().sigma2;
    return plan;
}

TrialSlot run_trial(const BenchmarkPlan& plan, std::size_t rate_index, int trial) {
    const double rate = plan.spec.rates.at(rate_index);
    const std::uint64_t rate_key = std::bit_cast<std::uint64_t>(rate);
    std::vector<std::size_t> picked;
    for (std::size_t t = 0; t < plan.rows.size(); ++t) {
        const auto& rows = plan.rows[t];
        if (rows.empty()) continue;
        const double target = std::ceil(rate * static_cast<double>(rows.size()) - 1e-9);
        const auto draws = std::max<std::size_t>(1, static_cast<std::size_t>(target));
        auto rng = make_stream(plan.spec.seed, static_cast<std::uint64_t>(trial), rate_key, t);
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        for (std::size_t i = 0; i < draws; ++i) picked.push_back(rows[pick(rng)]);
    }

    const std::size_t tc = plan.rows.size();
    TrialSlot slot;
    slot.values.assign(plan.methods.size(), std::vector<double>(tc, kNaN));
    std::vector<TaskSummary> tasks;
    try {
        SummarizeOptions options;
        options.fallback_sigma2 = plan.full_sigma2;
        tasks = summarize_dataset(plan.data->select(picked), options);
    } catch (const DataError&) {
        return slot;
    }

    const PriorStructure structure(plan.data->space);
    for (std::size_t m = 0; m < plan.methods.size(); ++m) {
        MethodRun run;
        try {
            run = run_method(plan.methods[m], tasks, structure, plan.spec.options);
        } catch (const DataError&) {
            continue;
        } catch (const NumericalError&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        for (std::size_t t = 0; t < tc; ++t)
            if (plan.scored[t])
                slot.values[m][t] = score(plan.spec.metric, run.outputs[t].mu_hat, plan.truth[t], plan.counts[t]);
    }
    return slot;
}

std::vector<TrialSlot> run_trials_serial(const BenchmarkPlan& plan) {
    std::vector<TrialSlot> slots;
    slots.reserve(plan.spec.rates.size() * static_cast<std::size_t>(plan.trials));
    for (std::size_t r = 0; r < plan.spec.rates.size(); ++r)
        for (int trial = 0; trial < plan.trials; ++trial) slots.push_back(run_trial(plan, r, trial));
    return slots;
}

std::vector<TrialSlot> run_trials_parallel(const BenchmarkPlan& plan, int threads) {
    const long total = static_cast<long>(plan.spec.rates.size()) * plan.trials;
    std::vector<TrialSlot> slots(static_cast<std::size_t>(total));
    const int workers = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr error;
    long error_index = total;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (long i = 0; i < total; ++i) {
        try {
            slots[static_cast<std::size_t>(i)] =
                run_trial(plan, static_cast<std::size_t>(i / plan.trials), static_cast<int>(i % plan.trials));
        } catch (...) {
#pragma omp critical(suremap_benchmark_error)
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
    return slots;
}

Interval mean_interval(const std::vector<double>& values) {
    Interval out;
    double sum = 0.0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++out.count;
        }
    if (out.count == 0) return {kNaN, kNaN, 0};
    out.mean = sum / out.count;
    if (out.count < 2) {
        out.halfwidth = kNaN;
        return out;
    }
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v)) ss += (v - out.mean) * (v - out.mean);
    out.halfwidth = 1.96 * std::sqrt(ss / (out.count - 1)) / std::sqrt(static_cast<double>(out.count));
    return out;
}

TrialReport aggregate(const BenchmarkPlan& plan, const std::vector<TrialSlot>& slots) {
    const std::size_t tc = plan.rows.size();
    const std::size_t naive_index =
        std::find(plan.methods.begin(), plan.methods.end(), "naive") - plan.methods.begin();
    TrialReport report;
    report.task_ids = plan.data->task_ids();
    report.metric = std::string(metric_name(plan.spec.metric));
    report.seed = plan.spec.seed;
    report.trials = plan.trials;
    report.threshold = plan.spec.threshold;

    for (std::size_t m = 0; m < plan.spec.methods.size(); ++m) {
        for (std::size_t r = 0; r < plan.spec.rates.size(); ++r) {
            CellReport cell;
            cell.method = plan.spec.methods[m];
            cell.rate = plan.spec.rates[r];
            std::vector<std::vector<double>> per_task(tc), naive_task(tc);
            for (int trial = 0; trial < plan.trials; ++trial) {
                const auto& slot = slots[r * static_cast<std::size_t>(plan.trials) + static_cast<std::size_t>(trial)];
                double sum = 0.0;
                int scored = 0;
                for (std::size_t t = 0; t < tc; ++t) {
                    if (!plan.scored[t]) continue;
                    sum += slot.values[m][t];
                    ++scored;
                    per_task[t].push_back(slot.values[m][t]);
                    naive_task[t].push_back(slot.values[naive_index][t]);
                }
                const double value = sum / scored;
                cell.values.push_back(value);
                if (!std::isfinite(value)) ++cell.failures;
            }
            const Interval ci = mean_interval(cell.values);
            cell.mean = ci.mean;
            cell.ci_halfwidth = ci.halfwidth;
            for (std::size_t t = 0; t < tc; ++t) {
                const double own = plan.scored[t] ? mean_interval(per_task[t]).mean : kNaN;
                const double base = plan.scored[t] ? mean_interval(naive_task[t]).mean : kNaN;
                cell.task_mean.push_back(own);
                const double ratio = base / own;
                cell.improvement_ratio.push_back(std::isfinite(ratio) ? ratio : kNaN);
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

TrialReport run_benchmark(const Dataset& data, const BenchmarkSpec& spec, int threads) {
    const BenchmarkPlan plan = plan_benchmark(data, spec);
    return aggregate(plan, threads == 1 ? run_trials_serial(plan) : run_trials_parallel(plan, threads));
}

Json report_to_json(const TrialReport& report) {
    Json j;
    j["metric"] = report.metric;
    j["seed"] = report.seed;
    j["trials"] = report.trials;
    j["threshold"] = report.threshold;
    j["tasks"] = report.task_ids;
    Json cells = Json::array();
    for (const auto& cell : report.cells) {
        Json c;
        c["method"] = cell.method;
        c["rate"] = cell.rate;
        c["mean"] = cell.mean;
        c["ci_halfwidth"] = cell.ci_halfwidth;
        c["failures"] = cell.failures;
        c["values"] = cell.values;
        if (report.task_ids.size() > 1) {
            Json tasks = Json::array();
            for (std::size_t t = 0; t < report.task_ids.size(); ++t)
                tasks.push_back({{"id", report.task_ids[t]},
                                 {"mean", cell.task_mean[t]},
                                 {"improvement_ratio", cell.improvement_ratio[t]}});
            c["per_task"] = std::move(tasks);
        }
        cells.push_back(std::move(c));
    }
    j["results"] = std::move(cells);
    return j;
}

void write_report_csv(std::ostream& out, const TrialReport& report) {
    out << "method,rate,trial,metric_value\n";
    for (const auto& cell : report.cells)
        for (std::size_t trial = 0; trial < cell.values.size(); ++trial)
            out << cell.method << ',' << format_number(cell.rate) << ',' << trial << ','
                << format_number(cell.values[trial]) << '\n';
}

}  // namespace suremap
