#include "suremap/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "suremap/error.hpp"

namespace suremap {

AttributeSpace::AttributeSpace(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
    if (attributes_.empty()) throw DomainError("attribute space needs at least one attribute");
    long long d = 1;
    for (const auto& attr : attributes_) {
        if (attr.levels.empty()) throw DomainError("attribute '" + attr.name + "' has no levels");
        std::set<std::string> seen(attr.levels.begin(), attr.levels.end());
        if (seen.size() != attr.levels.size())
            throw DomainError("attribute '" + attr.name + "' has duplicate level labels");
        d *= static_cast<long long>(attr.levels.size());
        if (d > (1LL << 30)) throw DomainError("attribute space too large");
    }
    d_ = static_cast<int>(d);
}

AttributeSpace AttributeSpace::from_level_counts(std::span<const int> counts) {
    std::vector<Attribute> attrs;
    for (std::size_t a = 0; a < counts.size(); ++a) {
        if (counts[a] < 1) throw DomainError("level count must be positive");
        Attribute attr{"a" + std::to_string(a + 1), {}};
        for (int l = 0; l < counts[a]; ++l) attr.levels.push_back(std::to_string(l + 1));
        attrs.push_back(std::move(attr));
    }
    return AttributeSpace(std::move(attrs));
}

int AttributeSpace::group_index(std::span<const int> classes) const {
    if (static_cast<int>(classes.size()) != k())
        throw DomainError("class tuple has " + std::to_string(classes.size()) + " entries, expected " +
                          std::to_string(k()));
    int g = 0;
    for (int a = 0; a < k(); ++a) {
        const int c = classes[a];
        if (c < 0 || c >= level_count(a))
            throw DomainError("class " + std::to_string(c) + " out of range for attribute '" +
                              attributes_[a].name + "' with " + std::to_string(level_count(a)) + " levels");
        g = g * level_count(a) + c;
    }
    return g;
}

std::vector<int> AttributeSpace::group_classes(int g) const {
    if (g < 0 || g >= d_) throw DomainError("group index " + std::to_string(g) + " out of range");
    std::vector<int> classes(k());
    for (int a = k() - 1; a >= 0; --a) {
        classes[a] = g % level_count(a);
        g /= level_count(a);
    }
    return classes;
}

int AttributeSpace::level_index(int a, std::string_view label) const {
    const auto& levels = attributes_[a].levels;
    for (std::size_t l = 0; l < levels.size(); ++l)
        if (levels[l] == label) return static_cast<int>(l);
    std::ostringstream msg;
    msg << "unknown level '" << label << "' for attribute '" << attributes_[a].name << "'; known levels:";
    for (const auto& l : levels) msg << " " << l;
    throw DomainError(msg.str());
}

bool AttributeSpace::operator==(const AttributeSpace& other) const {
    if (attributes_.size() != other.attributes_.size()) return false;
    for (std::size_t a = 0; a < attributes_.size(); ++a)
        if (attributes_[a].name != other.attributes_[a].name ||
            attributes_[a].levels != other.attributes_[a].levels)
            return false;
    return true;
}

int TaskSummary::populated() const { return static_cast<int>((n.array() > 0).count()); }

std::int64_t TaskSummary::total() const {
    std::int64_t s = 0;
    for (int g = 0; g < n.size(); ++g) s += n[g];
    return s;
}

Eigen::VectorXd TaskSummary::precision() const {
    Eigen::VectorXd p(d());
    for (int g = 0; g < d(); ++g) {
        if (n[g] == 0)
            p[g] = 0.0;
        else if (group_variance.size() == d())
            p[g] = 1.0 / group_variance[g];
        else
            p[g] = n[g] / sigma2;
    }
    return p;
}

void RecordBatch::add(int group, double value, int task) {
    if (task < 0) throw DomainError("negative task index");
    groups_.push_back(group);
    values_.push_back(value);
    tasks_.push_back(task);
    task_count_ = std::max(task_count_, task + 1);
}

void RecordBatch::add(const AttributeSpace& space, std::span<const int> classes, double value, int task) {
    add(space.group_index(classes), value, task);
}

void RecordBatch::reserve(std::size_t rows) {
    groups_.reserve(rows);
    values_.reserve(rows);
    tasks_.reserve(rows);
}

RecordBatch RecordBatch::task_slice(int t) const {
    RecordBatch out;
    for (std::size_t i = 0; i < size(); ++i)
        if (tasks_[i] == t) out.add(groups_[i], values_[i], 0);
    if (t < static_cast<int>(task_names.size())) out.task_names = {task_names[t]};
    return out;
}

namespace {

struct Accumulated {
    std::vector<TaskSummary> tasks;
    double residual_sum = 0.0;
    std::int64_t rows = 0;
    std::int64_t nonempty = 0;
};

Accumulated accumulate(const RecordBatch& batch, const AttributeSpace& space, int task_count,
                       bool ignore_tasks) {
    const int d = space.d();
    Accumulated acc;
    acc.tasks.resize(task_count);
    for (int t = 0; t < task_count; ++t) {
        acc.tasks[t].y = Eigen::VectorXd::Zero(d);
        acc.tasks[t].n = Eigen::VectorXi::Zero(d);
        if (t < static_cast<int>(batch.task_names.size())) acc.tasks[t].id = batch.task_names[t];
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const int g = batch.group(i);
        if (g < 0 || g >= d) throw DomainError("row " + std::to_string(i) + " has group outside the space");
        auto& task = acc.tasks[ignore_tasks ? 0 : batch.task(i)];
        task.y[g] += batch.value(i);
        task.n[g] += 1;
    }
    for (auto& task : acc.tasks)
        for (int g = 0; g < d; ++g)
            if (task.n[g] > 0) task.y[g] /= task.n[g];
    // second pass for residuals
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& task = acc.tasks[ignore_tasks ? 0 : batch.task(i)];
        const double r = batch.value(i) - task.y[batch.group(i)];
        acc.residual_sum += r * r;
    }
    acc.rows = static_cast<std::int64_t>(batch.size());
    for (const auto& task : acc.tasks) acc.nonempty += task.populated();
    return acc;
}

double pooled_variance(const Accumulated& acc, const SummarizeOptions& options) {
    const std::int64_t dof = acc.rows - acc.nonempty;
    if (dof <= 0) {
        if (options.fallback_sigma2) return *options.fallback_sigma2;
        throw DataError("degenerate variance: " + std::to_string(acc.rows) + " rows in " +
                        std::to_string(acc.nonempty) + " nonempty groups leave no residual degrees of freedom");
    }
    return std::max(acc.residual_sum / static_cast<double>(dof), options.sigma2_floor);
}

}  // namespace

TaskSummary summarize(const RecordBatch& batch, const AttributeSpace& space, const SummarizeOptions& options) {
    if (batch.empty()) throw DataError("cannot summarize an empty batch");
    auto acc = accumulate(batch, space, 1, true);
    const double sigma2 = pooled_variance(acc, options);
    TaskSummary out = std::move(acc.tasks[0]);
    out.sigma2 = sigma2;
    return out;
}

std::vector<TaskSummary> summarize_multi(const RecordBatch& batch, const AttributeSpace& space,
                                         const SummarizeOptions& options) {
    if (batch.empty()) throw DataError("cannot summarize an empty batch");
    const int task_count = std::max<int>(batch.task_count(), static_cast<int>(batch.task_names.size()));
    auto acc = accumulate(batch, space, task_count, false);
    const double sigma2 = pooled_variance(acc, options);
    for (auto& task : acc.tasks) task.sigma2 = sigma2;
    return std::move(acc.tasks);
}

double auc_group_variance(std::int64_t n, std::int64_t n0, std::int64_t n1) {
    if (n0 < 1 || n1 < 1) throw DomainError("single-class group has no AUC variance");
    if (n != n0 + n1) throw DomainError("group count must equal negatives plus positives");
    const double nd = static_cast<double>(n);
    return (nd + 1.0) / (12.0 * nd * static_cast<double>(n0) * static_cast<double>(n1));
}

int GroundTruth::included_count() const {
    int c = 0;
    for (bool b : included) c += b ? 1 : 0;
    return c;
}

GroundTruth ground_truth(const RecordBatch& batch, const AttributeSpace& space, int threshold) {
    const int d = space.d();
    GroundTruth truth{Eigen::VectorXd::Zero(d), std::vector<bool>(d, false)};
    std::vector<std::int64_t> count(d, 0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        truth.mu[batch.group(i)] += batch.value(i);
        ++count[batch.group(i)];
    }
    for (int g = 0; g < d; ++g) {
        if (count[g] > 0) truth.mu[g] /= static_cast<double>(count[g]);
        truth.included[g] = count[g] >= threshold && count[g] > 0;
    }
    return truth;
}

namespace {

void check_lengths(const Eigen::VectorXd& mu_hat, const GroundTruth& truth) {
    if (mu_hat.size() != truth.mu.size() || truth.included.size() != static_cast<std::size_t>(truth.mu.size()))
        throw DomainError("estimate and ground truth lengths differ");
    if (truth.included_count() == 0) throw DataError("no group passes the ground-truth threshold");
}

}  // namespace

double mae(const Eigen::VectorXd& mu_hat, const GroundTruth& truth) {
    check_lengths(mu_hat, truth);
    double s = 0.0;
    for (int g = 0; g < mu_hat.size(); ++g)
        if (truth.included[g]) s += std::abs(mu_hat[g] - truth.mu[g]);
    return s / truth.included_count();
}

double rmse(const Eigen::VectorXd& mu_hat, const GroundTruth& truth) {
    check_lengths(mu_hat, truth);
    double s = 0.0;
    for (int g = 0; g < mu_hat.size(); ++g)
        if (truth.included[g]) s += (mu_hat[g] - truth.mu[g]) * (mu_hat[g] - truth.mu[g]);
    return std::sqrt(s / truth.included_count());
}

double weighted_mse(const Eigen::VectorXd& mu_hat, const GroundTruth& truth, const Eigen::VectorXi& n) {
    check_lengths(mu_hat, truth);
    if (n.size() != mu_hat.size()) throw DomainError("count vector length differs");
    double s = 0.0;
    for (int g = 0; g < mu_hat.size(); ++g)
        if (truth.included[g]) s += n[g] * (mu_hat[g] - truth.mu[g]) * (mu_hat[g] - truth.mu[g]);
    return s / truth.included_count();
}

}  // namespace suremap
