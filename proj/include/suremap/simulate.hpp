#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "suremap/dataset.hpp"
#include "suremap/io.hpp"
#include "suremap/prior.hpp"

namespace suremap {

// Hierarchical generative model for synthetic tasks:
//   theta ~ N(0, Lambda(upsilon2))        (or fixed, or zero)
//   mu_t  = theta + sum_A tau_A Z_{A; g_A}  with Z_A i.i.d. N(0,1) per cell
//   n_tg  ~ Uniform{n_min, ..., n_max}
//   y_tg  ~ N(mu_tg, sigma2 / n_tg)
struct SyntheticSpec {
    AttributeSpace space;
    int tasks = 1;
    int n_min = 1;
    int n_max = 5;
    Eigen::VectorXd tau2;
    // Hyperprior variances of the shared center; empty means theta = 0.
    Eigen::VectorXd upsilon2;
    // Explicit center; overrides upsilon2 when set.
    Eigen::VectorXd theta;
    // Explicit task covariance; overrides tau2 when set (drawn through its
    // symmetric square root).
    Eigen::MatrixXd lambda;
    double sigma2 = 1.0;

    // Throws UsageError describing the first invalid field.
    void validate() const;
};

// Defaults used when no spec file is given: two attributes with 2 and 3
// levels, ten tasks, counts in [1, 5], tau2 = 0.1 and upsilon2 = 1 on every
// subset, sigma2 = 1.
SyntheticSpec default_synthetic_spec();

// Reads the JSON form: {"attributes" | "levels", "tasks", "n_min", "n_max",
// "tau2", "upsilon2", "theta", "lambda", "sigma2"}. Missing fields keep their
// defaults; "levels" is a list of level counts.
SyntheticSpec synthetic_from_json(const Json& j);
Json synthetic_to_json(const SyntheticSpec& spec);

struct SyntheticDraw {
    Eigen::VectorXd theta;
    std::vector<Eigen::VectorXd> mu;
    std::vector<TaskSummary> tasks;
};

// sum_A tau_A Z_{A; g_A}: one N(0,1) draw per cell of every subset, in
// ascending subset order. Entries with tau2_A = 0 still consume their draws.
Eigen::VectorXd draw_additive_effects(const PriorStructure& structure, const Eigen::VectorXd& tau2,
                                      std::mt19937_64& rng);

// One draw of the model above. Task t uses the stream (seed, trial, 0, t) and
// the center uses the shared stream, so adding tasks leaves earlier ones intact.
SyntheticDraw simulate(const SyntheticSpec& spec, const PriorStructure& structure, std::uint64_t seed,
                       std::uint64_t trial);

// Raw rows for a draw: n_tg values per group, each N(mu_tg, sigma2).
Dataset simulate_rows(const SyntheticSpec& spec, const SyntheticDraw& draw, std::uint64_t seed,
                      std::uint64_t trial);

// Moves each row to a uniformly random task with probability alpha.
Dataset reassign_tasks(const Dataset& data, double alpha, std::uint64_t seed, std::uint64_t trial);

// Expected means after reassignment: (1 - alpha) mu_t + alpha * mean_s mu_s.
std::vector<Eigen::VectorXd> mixed_truth(const std::vector<Eigen::VectorXd>& mu, double alpha);

Json draw_to_json(const AttributeSpace& space, const SyntheticDraw& draw);

}  // namespace suremap
