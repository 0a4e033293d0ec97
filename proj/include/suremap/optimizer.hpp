#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "suremap/objectives.hpp"

namespace suremap {

enum class FitStatus { converged, max_iter, line_search_failure };

std::string_view status_name(FitStatus s);

struct MinimizeOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    int memory_pairs = 10;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    FitStatus status = FitStatus::max_iter;
    int iterations = 0;
    int evaluations = 0;
    // Objective at the starting point followed by every accepted iterate.
    std::vector<double> trace;
};

using Objective = std::function<ObjectiveEval(const Eigen::VectorXd&)>;

// Projected limited-memory BFGS on {x >= 0}. Coordinates flagged in `fixed`
// stay at their starting value. Objective evaluations that throw or return
// non-finite values are treated as failed trial points.
MinimizeResult minimize_bounded(const Objective& f, const Eigen::VectorXd& x0, const MinimizeOptions& options = {},
                                const std::vector<bool>& fixed = {});

struct FitConfig {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    int memory_pairs = 10;
    // Highest interaction order left free; unset means k (no restriction).
    std::optional<int> max_order;
    Variant variant = Variant::metamap;
    bool nonneg_center = true;
    // Additional starts from the default point scaled by 0.01, 0.1, 10 and 100.
    bool multistart = false;
};

struct FitResult {
    Eigen::VectorXd tau2;
    // Hyperprior variances; empty unless the MetaMap variant was fitted.
    Eigen::VectorXd upsilon2;
    Eigen::VectorXd theta;
    std::vector<Eigen::VectorXd> mu_hat;
    double objective = 0.0;
    double initial_objective = 0.0;
    int iterations = 0;
    FitStatus status = FitStatus::max_iter;
    std::vector<double> trace;
};

FitResult fit_single(const TaskSummary& summary, const PriorStructure& structure, const FitConfig& config = {});

FitResult fit_multi(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                    const FitConfig& config = {});

}  // namespace suremap
