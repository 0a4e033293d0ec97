#include "suremap/methods.hpp"

#include <algorithm>

#include "suremap/error.hpp"

namespace suremap {

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {"naive",     "pooled",    "bock",   "bock-pooled", "suremap",
                                                   "mt-global", "mt-offset", "mt-bock", "mt-suremap"};
    return names;
}

bool is_known_method(std::string_view name) {
    const auto& names = method_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_fitted_method(std::string_view name) { return name == "suremap" || name == "mt-suremap"; }

bool is_multitask_method(std::string_view name) { return name.substr(0, 3) == "mt-"; }

namespace {

std::vector<Provenance> provenance_of(const TaskSummary& s) {
    std::vector<Provenance> p(s.d());
    for (int g = 0; g < s.d(); ++g) p[g] = s.missing(g) ? Provenance::fallback : Provenance::direct;
    return p;
}

}  // namespace

MethodRun run_method(std::string_view method, std::span<const TaskSummary> tasks, const PriorStructure& structure,
                     const MethodOptions& options) {
    if (!is_known_method(method)) throw UsageError("unknown method '" + std::string(method) + "'");
    if (tasks.empty()) throw DomainError("at least one task is required");
    MethodRun run{std::string(method), {}, {}};

    if (method == "mt-global") {
        run.outputs.assign(tasks.size(), mt_global(tasks, options.global));
    } else if (method == "mt-offset") {
        run.outputs = mt_offset(tasks, options.global);
    } else if (method == "mt-bock") {
        run.outputs = mt_bock(tasks);
    } else if (method == "mt-suremap") {
        FitResult fit = fit_multi(tasks, structure, options.fit);
        for (std::size_t t = 0; t < tasks.size(); ++t)
            run.outputs.push_back({fit.mu_hat[t], "mt-suremap", provenance_of(tasks[t])});
        run.fits.push_back(std::move(fit));
    } else {
        for (const auto& task : tasks) {
            if (method == "naive") {
                run.outputs.push_back(naive(task));
            } else if (method == "pooled") {
                run.outputs.push_back(pooled(task));
            } else if (method == "bock") {
                run.outputs.push_back(bock(task, options.bock_center.value_or(Eigen::VectorXd::Zero(task.d()))));
            } else if (method == "bock-pooled") {
                run.outputs.push_back(bock_pooled(task));
            } else {
                FitResult fit = fit_single(task, structure, options.fit);
                run.outputs.push_back({fit.mu_hat[0], "suremap", provenance_of(task)});
                run.fits.push_back(std::move(fit));
            }
        }
    }
    return run;
}

}  // namespace suremap
