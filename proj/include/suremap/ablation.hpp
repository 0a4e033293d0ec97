#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "suremap/benchmark.hpp"
#include "suremap/simulate.hpp"

namespace suremap {

enum class Sweep { max_order, tasks, alpha };

Sweep parse_sweep(std::string_view name);
std::string_view sweep_name(Sweep s);

struct AblationSpec {
    Sweep sweep = Sweep::max_order;
    std::vector<double> values;
    std::vector<std::string> methods;
    int trials = 40;
    std::uint64_t seed = 0;
    Metric metric = Metric::mae;
    MethodOptions options;
    SyntheticSpec synthetic = default_synthetic_spec();
    // Subsampling rate and truth threshold of a max-order sweep over a dataset.
    double rate = 1.0;
    int threshold = 40;

    // Throws UsageError for values outside the sweep's range.
    void validate() const;
};

struct AblationRow {
    double value = 0.0;
    std::string method;
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    int failures = 0;
    // Free tau2 entries under the max order; -1 for other sweeps.
    int free_entries = -1;
    std::vector<double> values;
};

struct AblationReport {
    std::string sweep;
    std::string metric;
    std::vector<AblationRow> rows;
};

// Task-averaged metric of each method on one synthetic draw, scored against
// the drawn means. With alpha >= 0 the draw is expanded into rows, rows are
// reassigned across tasks with probability alpha, and the truth becomes the
// correspondingly mixed means.
std::vector<double> synthetic_trial(const SyntheticSpec& spec, const std::vector<std::string>& methods,
                                    const MethodOptions& options, Metric metric, double alpha,
                                    std::uint64_t seed, int trial);

// Max-order sweeps run the subsampling benchmark when `data` is given and
// synthetic trials otherwise; task-count and alpha sweeps are synthetic.
AblationReport run_ablation(const AblationSpec& spec, const Dataset* data = nullptr, int threads = 0);

Json ablation_to_json(const AblationReport& report);
// Columns sweep,value,method,mean,ci_halfwidth,failures.
void write_ablation_csv(std::ostream& out, const AblationReport& report);

}  // namespace suremap
