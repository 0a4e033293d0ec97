#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "suremap/baselines.hpp"
#include "suremap/model.hpp"
#include "suremap/prior.hpp"

namespace suremap {

enum class Variant { metamap, suresolve };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

struct ObjectiveEval {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

// Prior mean shared by all tasks together with the mixing matrices M_t that
// produce it, theta = sum_t M_t y_t (before any nonnegativity clamp).
struct MapCenter {
    Eigen::VectorXd theta;
    std::vector<Eigen::MatrixXd> mixing;
};

// Posterior mode y - A (y - theta), A = (I + Lambda Sigma^{-1})^{-1}.
EstimatorOutput map_estimate(const TaskSummary& summary, const Eigen::VectorXd& theta,
                             const Eigen::MatrixXd& lambda);

// Divergence of the MAP estimator with respect to y: d - Tr(A).
double map_divergence(const TaskSummary& summary, const Eigen::MatrixXd& lambda);

// (sigma2 / d) (||mu_hat - y||^2_{Sigma^{-1}} - d + 2 div)
double sure_value(const TaskSummary& summary, const Eigen::VectorXd& mu_hat, double divergence);

// Unbiased risk estimate of E||mu_hat - mu||^2_W for y ~ N(mu, sigma) with a
// general covariance:
//   ||mu_hat - y||^2_W + Tr(W sigma) + 2 sum_ij (sigma .* (W J - W))_ij
// where J is the Jacobian of mu_hat with respect to y.
double sure_value_general(const Eigen::VectorXd& y, const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& w,
                          const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& jacobian);

// ||A y||^2_{Sigma^{-1}} - 2 Tr(A) and its gradient in tau2.
ObjectiveEval st_objective(const TaskSummary& summary, const PriorStructure& structure,
                           const Eigen::VectorXd& tau2);

// Center under the hyperprior theta ~ N(0, Lambda(upsilon2)).
MapCenter theta_metamap(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                        const Eigen::VectorXd& tau2, const Eigen::VectorXd& upsilon2);

// Center minimizing sum_t ||A_t (theta - y_t)||^2_{Sigma_t^{-1}}.
MapCenter theta_suresolve(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                          const Eigen::VectorXd& tau2);

// Sum over tasks of ||A_t (theta - y_t)||^2_{Sigma_t^{-1}} + 2 Tr(A_t (M_t - I)).
// The gradient covers tau2 followed by upsilon2 for MetaMap, and tau2 only for
// SureSolve, whose center has no hyperprior (upsilon2 is then ignored).
ObjectiveEval mt_objective(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                           const Eigen::VectorXd& tau2, const Eigen::VectorXd& upsilon2, Variant variant);

// Center computed by `variant`, clamped at zero when nonneg_center is set.
Eigen::VectorXd mt_center(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                          const Eigen::VectorXd& tau2, const Eigen::VectorXd& upsilon2, Variant variant,
                          bool nonneg_center);

// y_t + A_t (theta - y_t) for every task.
std::vector<EstimatorOutput> mt_estimate(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                                         const Eigen::VectorXd& tau2, const Eigen::VectorXd& upsilon2,
                                         Variant variant, bool nonneg_center = true);

// Same as mt_estimate with an explicit center.
std::vector<EstimatorOutput> mt_estimate_at(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                                            const Eigen::VectorXd& tau2, const Eigen::VectorXd& theta);

}  // namespace suremap
