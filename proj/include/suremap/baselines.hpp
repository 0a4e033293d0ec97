#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "suremap/model.hpp"

namespace suremap {

enum class Provenance { direct, fallback };

struct EstimatorOutput {
    Eigen::VectorXd mu_hat;
    std::string method;
    // fallback marks groups whose estimate did not come from their own data
    std::vector<Provenance> provenance;
};

// Group means, falling back to the pooled mean for empty groups.
EstimatorOutput naive(const TaskSummary& summary);

// Count-weighted overall mean reported for every group.
EstimatorOutput pooled(const TaskSummary& summary);
// theta + pooled(y - theta)
EstimatorOutput pooled(const TaskSummary& summary, const Eigen::VectorXd& theta);

// Positive-part Bock shrinkage toward theta:
//   theta + (1 - (d+ - 2) / q)_+ (y - theta),  q = (y - theta)^T Sigma^{-1} (y - theta)
// with d+ the number of populated groups. q = 0 returns theta; empty groups
// return theta.
EstimatorOutput bock(const TaskSummary& summary, const Eigen::VectorXd& theta);

// Bock shrinkage toward the data-dependent pooled mean with constant d+ - 3.
EstimatorOutput bock_pooled(const TaskSummary& summary);

struct GlobalOptions {
    // Substitute the all-task pooled mean where no task observed a group.
    bool fallback_pooled = false;
};

// Precision-weighted per-group mean over tasks, shared by every task.
EstimatorOutput mt_global(std::span<const TaskSummary> tasks, const GlobalOptions& options = {});

// mt_global shifted per task so the task's pooled mean is preserved.
std::vector<EstimatorOutput> mt_offset(std::span<const TaskSummary> tasks, const GlobalOptions& options = {});

// Leave-one-task-out center used by mt_bock: precision-weighted group means
// over the other tasks, or their pooled mean where no other task has data.
Eigen::VectorXd leave_one_out_center(std::span<const TaskSummary> tasks, int t);

// Bock shrinkage of each task toward its leave-one-task-out center.
std::vector<EstimatorOutput> mt_bock(std::span<const TaskSummary> tasks);

}  // namespace suremap
