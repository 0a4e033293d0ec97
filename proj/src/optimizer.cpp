#include "suremap/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "suremap/error.hpp"

namespace suremap {

using Eigen::VectorXd;

std::string_view status_name(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iter: return "max-iter";
        case FitStatus::line_search_failure: return "line-search-failure";
    }
    return "unknown";
}

namespace {

struct Point {
    VectorXd x;
    double f = 0.0;
    VectorXd g;
    bool ok = false;
};

Point evaluate(const Objective& f, const VectorXd& x, int& evaluations) {
    Point p{x, 0.0, VectorXd(), false};
    ++evaluations;
    try {
        ObjectiveEval e = f(x);
        if (e.gradient.size() != x.size()) throw DomainError("objective gradient has the wrong length");
        p.f = e.value;
        p.g = std::move(e.gradient);
        p.ok = std::isfinite(p.f) && p.g.allFinite();
    } catch (const NumericalError&) {
        p.ok = false;
    }
    return p;
}

// Coordinates that may move: not fixed, and not held at the bound by a gradient pushing outward.
std::vector<bool> free_set(const Point& p, const std::vector<bool>& fixed) {
    std::vector<bool> free(p.x.size());
    for (Eigen::Index i = 0; i < p.x.size(); ++i) free[i] = !fixed[i] && !(p.x[i] <= 0.0 && p.g[i] > 0.0);
    return free;
}

double projected_gradient_norm(const Point& p, const std::vector<bool>& fixed) {
    double norm = 0.0;
    for (Eigen::Index i = 0; i < p.x.size(); ++i) {
        if (fixed[i]) continue;
        const double step = p.x[i] - std::max(p.x[i] - p.g[i], 0.0);
        norm = std::max(norm, std::abs(step));
    }
    return norm;
}

VectorXd masked(const VectorXd& v, const std::vector<bool>& free) {
    VectorXd out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!free[i]) out[i] = 0.0;
    return out;
}

struct Pair {
    VectorXd s, y;
};

VectorXd two_loop(const VectorXd& grad, const std::deque<Pair>& pairs, const std::vector<bool>& free) {
    VectorXd q = masked(grad, free);
    std::vector<double> alpha(pairs.size()), rho(pairs.size());
    std::vector<VectorXd> s(pairs.size()), y(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        s[j] = masked(pairs[j].s, free);
        y[j] = masked(pairs[j].y, free);
        const double sy = s[j].dot(y[j]);
        rho[j] = sy > 0.0 ? 1.0 / sy : 0.0;
    }
    for (std::size_t j = pairs.size(); j-- > 0;) {
        alpha[j] = rho[j] * s[j].dot(q);
        q -= alpha[j] * y[j];
    }
    if (!pairs.empty()) {
        const std::size_t last = pairs.size() - 1;
        const double yy = y[last].dot(y[last]);
        if (rho[last] > 0.0 && yy > 0.0) q *= 1.0 / (rho[last] * yy);
    }
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const double beta = rho[j] * y[j].dot(q);
        q += (alpha[j] - beta) * s[j];
    }
    return -masked(q, free);
}

VectorXd project(VectorXd x, const VectorXd& anchor, const std::vector<bool>& fixed) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = fixed[i] ? anchor[i] : std::max(x[i], 0.0);
    return x;
}

}  // namespace

MinimizeResult minimize_bounded(const Objective& f, const VectorXd& x0, const MinimizeOptions& options,
                                const std::vector<bool>& fixed_in) {
    if (options.max_iterations < 0 || options.memory_pairs < 1 || !(options.gradient_tolerance > 0.0))
        throw DomainError("invalid optimizer settings");
    if ((x0.array() < 0.0).any() || !x0.allFinite()) throw DomainError("starting point must be finite and nonnegative");
    const std::vector<bool> fixed = fixed_in.empty() ? std::vector<bool>(x0.size(), false) : fixed_in;
    if (static_cast<Eigen::Index>(fixed.size()) != x0.size()) throw DomainError("fixed mask has the wrong length");

    MinimizeResult result;
    Point cur = evaluate(f, x0, result.evaluations);
    result.x = x0;
    result.value = cur.f;
    if (!cur.ok) {
        result.value = std::numeric_limits<double>::quiet_NaN();
        result.status = FitStatus::line_search_failure;
        return result;
    }
    result.trace.push_back(cur.f);

    std::deque<Pair> pairs;
    result.status = FitStatus::max_iter;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (projected_gradient_norm(cur, fixed) <= options.gradient_tolerance) {
            result.status = FitStatus::converged;
            break;
        }
        const auto free = free_set(cur, fixed);
        VectorXd dir = two_loop(cur.g, pairs, free);
        double slope = cur.g.dot(dir);
        bool steepest = pairs.empty();
        if (!(slope < 0.0) || !dir.allFinite()) {
            pairs.clear();
            dir = -masked(cur.g, free);
            slope = cur.g.dot(dir);
            steepest = true;
        }
        if (!(slope < 0.0)) {
            // Every free coordinate has zero gradient and the rest are held at the bound.
            result.status = FitStatus::converged;
            break;
        }
        double step = 1.0;
        if (steepest) step = std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>());

        Point next;
        bool accepted = false;
        for (int bt = 0; bt < options.max_backtracks; ++bt, step *= 0.5) {
            const VectorXd trial = project(cur.x + step * dir, cur.x, fixed);
            const VectorXd moved = trial - cur.x;
            if (moved.lpNorm<Eigen::Infinity>() == 0.0) break;
            next = evaluate(f, trial, result.evaluations);
            if (!next.ok) continue;
            if (next.f <= cur.f + options.armijo * cur.g.dot(moved)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            result.status = FitStatus::line_search_failure;
            break;
        }
        Pair pair{next.x - cur.x, next.g - cur.g};
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.y.squaredNorm()) {
            pairs.push_back(std::move(pair));
            if (static_cast<int>(pairs.size()) > options.memory_pairs) pairs.pop_front();
        }
        cur = std::move(next);
        result.iterations = iter + 1;
        result.trace.push_back(cur.f);
    }
    result.x = cur.x;
    result.value = cur.f;
    return result;
}

namespace {

MinimizeOptions options_of(const FitConfig& c) {
    MinimizeOptions o;
    o.max_iterations = c.max_iterations;
    o.gradient_tolerance = c.gradient_tolerance;
    o.memory_pairs = c.memory_pairs;
    return o;
}

std::vector<bool> fixed_mask(int k, const FitConfig& config, int blocks) {
    const auto free = order_mask(k, config.max_order.value_or(k));
    std::vector<bool> fixed;
    for (int b = 0; b < blocks; ++b)
        for (bool f : free) fixed.push_back(!f);
    return fixed;
}

MinimizeResult run(const Objective& f, const VectorXd& x0, const FitConfig& config,
                   const std::vector<bool>& fixed) {
    MinimizeResult best = minimize_bounded(f, x0, options_of(config), fixed);
    if (!config.multistart) return best;
    for (double scale : {0.01, 0.1, 10.0, 100.0}) {
        MinimizeResult r = minimize_bounded(f, VectorXd(scale * x0), options_of(config), fixed);
        if (std::isfinite(r.value) && !(r.value >= best.value)) best = std::move(r);
    }
    return best;
}

void copy_run(FitResult& fit, const MinimizeResult& r, double initial) {
    fit.objective = r.value;
    fit.initial_objective = initial;
    fit.iterations = r.iterations;
    fit.status = r.status;
    fit.trace = r.trace;
}

}  // namespace

FitResult fit_single(const TaskSummary& summary, const PriorStructure& structure, const FitConfig& config) {
    const int k = structure.k();
    VectorXd x0 = VectorXd::Zero(structure.subset_count());
    x0[full_subset(k)] = 1.0;
    const Objective f = [&](const VectorXd& x) { return st_objective(summary, structure, x); };
    const double initial = f(x0).value;
    const MinimizeResult r = run(f, x0, config, fixed_mask(k, config, 1));
    if (!std::isfinite(r.value)) throw NumericalError("single-task objective is not finite at the starting point");

    FitResult fit;
    copy_run(fit, r, initial);
    fit.tau2 = r.x;
    fit.theta = VectorXd::Zero(structure.d());
    fit.mu_hat.push_back(map_estimate(summary, fit.theta, build_covariance(structure, fit.tau2)).mu_hat);
    return fit;
}

FitResult fit_multi(std::span<const TaskSummary> tasks, const PriorStructure& structure, const FitConfig& config) {
    if (tasks.empty()) throw DomainError("at least one task is required");
    const int k = structure.k();
    const int subsets = structure.subset_count();
    const bool meta = config.variant == Variant::metamap;
    const int blocks = meta ? 2 : 1;
    VectorXd x0 = VectorXd::Zero(blocks * subsets);
    for (int b = 0; b < blocks; ++b) x0[b * subsets + full_subset(k)] = 1.0;

    const VectorXd no_upsilon = VectorXd::Zero(subsets);
    const Objective f = [&](const VectorXd& x) {
        if (meta) return mt_objective(tasks, structure, x.head(subsets), x.tail(subsets), Variant::metamap);
        return mt_objective(tasks, structure, x, no_upsilon, Variant::suresolve);
    };
    const double initial = f(x0).value;
    const MinimizeResult r = run(f, x0, config, fixed_mask(k, config, blocks));
    if (!std::isfinite(r.value)) throw NumericalError("multi-task objective is not finite at the starting point");

    FitResult fit;
    copy_run(fit, r, initial);
    fit.tau2 = r.x.head(subsets);
    if (meta) fit.upsilon2 = r.x.tail(subsets);
    const VectorXd ups = meta ? fit.upsilon2 : no_upsilon;
    fit.theta = mt_center(tasks, structure, fit.tau2, ups, config.variant, config.nonneg_center);
    for (auto& e : mt_estimate_at(tasks, structure, fit.tau2, fit.theta)) fit.mu_hat.push_back(std::move(e.mu_hat));
    return fit;
}

}  // namespace suremap
