#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace suremap {

struct Attribute {
    std::string name;
    std::vector<std::string> levels;
};

// The group lattice: k categorical attributes whose level combinations form
// d = prod(d_a) disjoint groups. Groups are numbered row-major in attribute
// declaration order, so the last attribute varies fastest. All indices here
// are 0-based; group g of class tuple c is ((c_0 * d_1 + c_1) * d_2 + ...).
class AttributeSpace {
public:
    AttributeSpace() = default;
    explicit AttributeSpace(std::vector<Attribute> attributes);

    // Attributes named a1..ak with levels "1".."d_a".
    static AttributeSpace from_level_counts(std::span<const int> counts);

    int k() const { return static_cast<int>(attributes_.size()); }
    int d() const { return d_; }
    int level_count(int a) const { return static_cast<int>(attributes_[a].levels.size()); }
    const Attribute& attribute(int a) const { return attributes_[a]; }
    const std::vector<Attribute>& attributes() const { return attributes_; }

    int group_index(std::span<const int> classes) const;
    std::vector<int> group_classes(int g) const;

    // Level index of `label` for attribute a; throws DomainError listing known levels.
    int level_index(int a, std::string_view label) const;

    bool operator==(const AttributeSpace& other) const;

private:
    std::vector<Attribute> attributes_;
    int d_ = 0;
};

// Sufficient statistics of one task under the Gaussian model y ~ N(mu, Sigma)
// with Sigma = diag(sigma2 / n). Groups with n_g = 0 hold y_g = 0 as a
// placeholder; their precision is zero so they never enter a weighted sum.
struct TaskSummary {
    std::string id;
    Eigen::VectorXd y;
    Eigen::VectorXi n;
    double sigma2 = 1.0;
    // Optional per-group observation variances (e.g. for AUC). When set, the
    // precision of populated groups is 1 / group_variance instead of n / sigma2.
    Eigen::VectorXd group_variance;

    int d() const { return static_cast<int>(y.size()); }
    bool missing(int g) const { return n[g] == 0; }
    int populated() const;
    std::int64_t total() const;
    // Diagonal of Sigma^{-1}.
    Eigen::VectorXd precision() const;
};

// Rows of (group, value) with an optional task label per row.
class RecordBatch {
public:
    void add(int group, double value, int task = 0);
    void add(const AttributeSpace& space, std::span<const int> classes, double value, int task = 0);

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    int group(std::size_t row) const { return groups_[row]; }
    double value(std::size_t row) const { return values_[row]; }
    int task(std::size_t row) const { return tasks_[row]; }
    int task_count() const { return task_count_; }

    std::vector<std::string> task_names;

    void reserve(std::size_t rows);
    // Rows belonging to task t, in original order.
    RecordBatch task_slice(int t) const;

private:
    std::vector<int> groups_;
    std::vector<double> values_;
    std::vector<int> tasks_;
    int task_count_ = 0;
};

struct SummarizeOptions {
    // Lower bound applied to the pooled residual variance.
    double sigma2_floor = 1e-12;
    // Used when there are no residual degrees of freedom (N <= nonempty groups).
    std::optional<double> fallback_sigma2;
};

// Group means, counts and the pooled within-group variance
// sigma2 = sum (f(z) - y_g)^2 / (N - d+), d+ = number of nonempty groups.
TaskSummary summarize(const RecordBatch& batch, const AttributeSpace& space,
                      const SummarizeOptions& options = {});

// One summary per task with a single sigma2 pooled over all tasks; the
// denominator subtracts the nonempty-group count of every task.
std::vector<TaskSummary> summarize_multi(const RecordBatch& batch, const AttributeSpace& space,
                                         const SummarizeOptions& options = {});

// Mann-Whitney based variance of a group AUC: (n+1) / (12 n n0 n1).
double auc_group_variance(std::int64_t n, std::int64_t n0, std::int64_t n1);

struct GroundTruth {
    Eigen::VectorXd mu;
    std::vector<bool> included;

    int included_count() const;
};

// Per-group full-data means; groups with fewer than `threshold` rows are excluded.
GroundTruth ground_truth(const RecordBatch& batch, const AttributeSpace& space, int threshold = 40);

double mae(const Eigen::VectorXd& mu_hat, const GroundTruth& truth);
double rmse(const Eigen::VectorXd& mu_hat, const GroundTruth& truth);
double weighted_mse(const Eigen::VectorXd& mu_hat, const GroundTruth& truth, const Eigen::VectorXi& n);

}  // namespace suremap
