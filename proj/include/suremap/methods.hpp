#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "suremap/baselines.hpp"
#include "suremap/optimizer.hpp"
#include "suremap/prior.hpp"

namespace suremap {

// Registered estimator names, in report order.
const std::vector<std::string>& method_names();
bool is_known_method(std::string_view name);
// suremap and mt-suremap, the methods tuned by SURE.
bool is_fitted_method(std::string_view name);
// Methods that pool information across tasks.
bool is_multitask_method(std::string_view name);

struct MethodOptions {
    FitConfig fit;
    GlobalOptions global;
    // Shrinkage target of `bock`; zero when unset.
    std::optional<Eigen::VectorXd> bock_center;
};

struct MethodRun {
    std::string method;
    // One output per task.
    std::vector<EstimatorOutput> outputs;
    // Fitted hyperparameters: one per task for suremap, a single entry for mt-suremap.
    std::vector<FitResult> fits;
};

// Runs `method` on every task. Single-task methods treat each task on its own.
MethodRun run_method(std::string_view method, std::span<const TaskSummary> tasks, const PriorStructure& structure,
                     const MethodOptions& options = {});

}  // namespace suremap
