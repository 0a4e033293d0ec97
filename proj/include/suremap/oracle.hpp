#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "suremap/baselines.hpp"
#include "suremap/prior.hpp"

namespace suremap {

// Ridge-regression view of the additive effects prior: one feature per
// (subset A, cell c) pair, Phi_{g,(A,c)} = 1 when group g falls in cell c of A.
// Columns are ordered by ascending subset mask, then by cell.
struct FeatureDesign {
    Eigen::MatrixXd phi;
    // First column of each subset's block; offsets[2^k] is the column count.
    std::vector<int> offsets;

    // Diagonal of the prior matrix K (or V): the subset variance repeated over its cells.
    Eigen::VectorXd prior_diagonal(const Eigen::VectorXd& variances) const;
    int columns() const { return static_cast<int>(phi.cols()); }
};

FeatureDesign feature_design(const PriorStructure& structure);

// Phi (Phi^T Sigma^{-1} Phi + K^{-1})^{-1} Phi^T Sigma^{-1} y; tau2 must be positive.
EstimatorOutput ridge_single(const TaskSummary& summary, const PriorStructure& structure,
                             const Eigen::VectorXd& tau2);

// Stacked regression with one coefficient block per task (prior K) and one
// shared block (prior V built from upsilon2). Returns each task's fitted means.
std::vector<EstimatorOutput> ridge_multi(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                                         const Eigen::VectorXd& tau2, const Eigen::VectorXd& upsilon2);

}  // namespace suremap
