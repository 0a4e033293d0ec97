#include "suremap/baselines.hpp"

#include <algorithm>

#include "suremap/error.hpp"

namespace suremap {

namespace {

double pooled_mean(const TaskSummary& s, const Eigen::VectorXd& shift) {
    double num = 0.0;
    std::int64_t den = 0;
    for (int g = 0; g < s.d(); ++g) {
        if (s.n[g] == 0) continue;
        num += s.n[g] * (s.y[g] - shift[g]);
        den += s.n[g];
    }
    if (den == 0) throw DataError("pooled mean of a task with no samples");
    return num / static_cast<double>(den);
}

std::vector<Provenance> provenance_of(const TaskSummary& s) {
    std::vector<Provenance> p(s.d());
    for (int g = 0; g < s.d(); ++g) p[g] = s.missing(g) ? Provenance::fallback : Provenance::direct;
    return p;
}

void check_tasks(std::span<const TaskSummary> tasks) {
    if (tasks.empty()) throw DomainError("at least one task is required");
    for (const auto& t : tasks)
        if (t.d() != tasks[0].d()) throw DomainError("tasks have different group counts");
}

EstimatorOutput shrink_toward(const TaskSummary& s, const Eigen::VectorXd& theta, double constant,
                              std::string method) {
    if (theta.size() != s.d()) throw DomainError("center length differs from group count");
    const Eigen::VectorXd p = s.precision();
    double q = 0.0;
    for (int g = 0; g < s.d(); ++g)
        if (!s.missing(g)) q += p[g] * (s.y[g] - theta[g]) * (s.y[g] - theta[g]);
    const double factor = q > 0.0 ? std::clamp(1.0 - constant / q, 0.0, 1.0) : 0.0;
    EstimatorOutput out{theta, std::move(method), provenance_of(s)};
    for (int g = 0; g < s.d(); ++g)
        if (!s.missing(g)) out.mu_hat[g] = theta[g] + factor * (s.y[g] - theta[g]);
    return out;
}

}  // namespace

EstimatorOutput naive(const TaskSummary& summary) {
    if (summary.populated() == 0) throw DataError("naive estimator needs at least one populated group");
    EstimatorOutput out{summary.y, "naive", provenance_of(summary)};
    if (summary.populated() < summary.d()) {
        const double fill = pooled_mean(summary, Eigen::VectorXd::Zero(summary.d()));
        for (int g = 0; g < summary.d(); ++g)
            if (summary.missing(g)) out.mu_hat[g] = fill;
    }
    return out;
}

EstimatorOutput pooled(const TaskSummary& summary) {
    const double m = pooled_mean(summary, Eigen::VectorXd::Zero(summary.d()));
    return {Eigen::VectorXd::Constant(summary.d(), m), "pooled",
            std::vector<Provenance>(summary.d(), Provenance::direct)};
}

EstimatorOutput pooled(const TaskSummary& summary, const Eigen::VectorXd& theta) {
    if (theta.size() != summary.d()) throw DomainError("center length differs from group count");
    const double m = pooled_mean(summary, theta);
    return {theta.array() + m, "pooled", std::vector<Provenance>(summary.d(), Provenance::direct)};
}

EstimatorOutput bock(const TaskSummary& summary, const Eigen::VectorXd& theta) {
    if (summary.d() < 3) throw DomainError("Bock estimator needs at least 3 groups");
    return shrink_toward(summary, theta, summary.populated() - 2.0, "bock");
}

EstimatorOutput bock_pooled(const TaskSummary& summary) {
    if (summary.d() < 4) throw DomainError("pooled Bock estimator needs at least 4 groups");
    const Eigen::VectorXd theta = pooled(summary).mu_hat;
    return shrink_toward(summary, theta, summary.populated() - 3.0, "bock-pooled");
}

EstimatorOutput mt_global(std::span<const TaskSummary> tasks, const GlobalOptions& options) {
    check_tasks(tasks);
    const int d = tasks[0].d();
    Eigen::VectorXd num = Eigen::VectorXd::Zero(d), den = Eigen::VectorXd::Zero(d);
    for (const auto& t : tasks) {
        const Eigen::VectorXd p = t.precision();
        for (int g = 0; g < d; ++g) {
            if (t.missing(g)) continue;
            num[g] += p[g] * t.y[g];
            den[g] += p[g];
        }
    }
    EstimatorOutput out{Eigen::VectorXd::Zero(d), "mt-global", std::vector<Provenance>(d, Provenance::direct)};
    double fill = 0.0;
    bool have_fill = false;
    for (int g = 0; g < d; ++g) {
        if (den[g] > 0.0) {
            out.mu_hat[g] = num[g] / den[g];
            continue;
        }
        if (!options.fallback_pooled)
            throw DataError("group " + std::to_string(g) + " has no data in any task");
        if (!have_fill) {
            double s = 0.0;
            std::int64_t c = 0;
            for (const auto& t : tasks)
                for (int h = 0; h < d; ++h) {
                    s += t.n[h] * t.y[h];
                    c += t.n[h];
                }
            if (c == 0) throw DataError("no task has any data");
            fill = s / static_cast<double>(c);
            have_fill = true;
        }
        out.mu_hat[g] = fill;
        out.provenance[g] = Provenance::fallback;
    }
    return out;
}

std::vector<EstimatorOutput> mt_offset(std::span<const TaskSummary> tasks, const GlobalOptions& options) {
    const auto global = mt_global(tasks, options);
    std::vector<EstimatorOutput> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) {
        auto est = pooled(t, global.mu_hat);
        est.method = "mt-offset";
        out.push_back(std::move(est));
    }
    return out;
}

Eigen::VectorXd leave_one_out_center(std::span<const TaskSummary> tasks, int t) {
    check_tasks(tasks);
    const int d = tasks[0].d();
    Eigen::VectorXd num = Eigen::VectorXd::Zero(d), den = Eigen::VectorXd::Zero(d);
    double pooled_num = 0.0;
    std::int64_t pooled_den = 0;
    for (int s = 0; s < static_cast<int>(tasks.size()); ++s) {
        if (s == t) continue;
        const Eigen::VectorXd p = tasks[s].precision();
        for (int g = 0; g < d; ++g) {
            if (tasks[s].missing(g)) continue;
            num[g] += p[g] * tasks[s].y[g];
            den[g] += p[g];
            pooled_num += tasks[s].n[g] * tasks[s].y[g];
            pooled_den += tasks[s].n[g];
        }
    }
    if (pooled_den == 0) throw DataError("no data outside task " + std::to_string(t));
    const double fill = pooled_num / static_cast<double>(pooled_den);
    Eigen::VectorXd theta(d);
    for (int g = 0; g < d; ++g) theta[g] = den[g] > 0.0 ? num[g] / den[g] : fill;
    return theta;
}

std::vector<EstimatorOutput> mt_bock(std::span<const TaskSummary> tasks) {
    check_tasks(tasks);
    if (tasks.size() < 2) throw DomainError("mt-bock needs at least two tasks");
    std::vector<EstimatorOutput> out;
    for (int t = 0; t < static_cast<int>(tasks.size()); ++t) {
        auto est = bock(tasks[t], leave_one_out_center(tasks, t));
        est.method = "mt-bock";
        out.push_back(std::move(est));
    }
    return out;
}

}  // namespace suremap
