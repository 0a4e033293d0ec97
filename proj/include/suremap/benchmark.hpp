#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "suremap/dataset.hpp"
#include "suremap/io.hpp"
#include "suremap/methods.hpp"

namespace suremap {

enum class Metric { mae, rmse, weighted_mse };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

// Error of one task's estimate. Weighted MSE weighs groups by `counts`.
double score(Metric metric, const Eigen::VectorXd& mu_hat, const GroundTruth& truth, const Eigen::VectorXi& counts);

struct BenchmarkSpec {
    std::vector<std::string> methods;
    // Subsampling fractions in (0, 1], ascending.
    std::vector<double> rates;
    // 0 selects 200 for single-task data and 40 for multi-task data.
    int trials = 0;
    std::uint64_t seed = 0;
    int threshold = 40;
    Metric metric = Metric::mae;
    MethodOptions options;

    // Throws UsageError. `task_count` checks methods that need several tasks.
    void validate(int task_count) const;
    int resolved_trials(int task_count) const;
};

// Metric of every (method, task) in one trial at one rate. NaN marks a method
// that failed on the draw or a task without scored groups.
struct TrialSlot {
    std::vector<std::vector<double>> values;
};

// Everything a trial needs from the full dataset, computed once.
struct BenchmarkPlan {
    const Dataset* data = nullptr;
    BenchmarkSpec spec;
    int trials = 0;
    // spec.methods, plus naive for the per-task ratios when it is not listed.
    std::vector<std::string> methods;
    std::vector<std::vector<std::size_t>> rows;
    std::vector<GroundTruth> truth;
    std::vector<Eigen::VectorXi> counts;
    std::vector<bool> scored;
    double full_sigma2 = 1.0;
};

BenchmarkPlan plan_benchmark(const Dataset& data, const BenchmarkSpec& spec);

// Draws ceil(rate * N_t) rows with replacement from every task using the
// stream (seed, trial, rate bits, task), then runs and scores every method.
TrialSlot run_trial(const BenchmarkPlan& plan, std::size_t rate_index, int trial);

// Slots ordered rate-major then by trial. The serial runner is the reference;
// the parallel runner spreads trials over OpenMP threads (0 = runtime default)
// and must produce identical slots.
std::vector<TrialSlot> run_trials_serial(const BenchmarkPlan& plan);
std::vector<TrialSlot> run_trials_parallel(const BenchmarkPlan& plan, int threads = 0);

struct CellReport {
    std::string method;
    double rate = 0.0;
    // Task-averaged metric of every trial.
    std::vector<double> values;
    double mean = 0.0;
    // 1.96 sd / sqrt(trials); NaN with fewer than two finite trials.
    double ci_halfwidth = 0.0;
    int failures = 0;
    // Per task: mean metric over trials and naive mean divided by it.
    std::vector<double> task_mean;
    std::vector<double> improvement_ratio;
};

struct TrialReport {
    std::vector<std::string> task_ids;
    std::string metric;
    std::uint64_t seed = 0;
    int trials = 0;
    int threshold = 0;
    std::vector<CellReport> cells;
};

TrialReport aggregate(const BenchmarkPlan& plan, const std::vector<TrialSlot>& slots);

// threads == 1 uses the serial runner.
TrialReport run_benchmark(const Dataset& data, const BenchmarkSpec& spec, int threads = 0);

Json report_to_json(const TrialReport& report);
// Columns method,rate,trial,metric_value; one row per method, rate and trial.
void write_report_csv(std::ostream& out, const TrialReport& report);

// Mean and 1.96 sd / sqrt(n) over the finite entries.
struct Interval {
    double mean = 0.0;
    double halfwidth = 0.0;
    int count = 0;
};
Interval mean_interval(const std::vector<double>& values);

}  // namespace suremap
