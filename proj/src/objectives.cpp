#include "suremap/objectives.hpp"

#include <string>

#include "suremap/error.hpp"
#include "suremap/linalg.hpp"

namespace suremap {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Per-task quantities shared by the multi-task objectives.
struct TaskTerms {
    VectorXd p;  // diagonal of Sigma^{-1}
    MatrixXd a;  // shrinkage matrix A_t
    MatrixXd q;  // Sigma^{-1} A_t, symmetric
};

TaskTerms task_terms(const TaskSummary& s, const MatrixXd& lambda) {
    TaskTerms t;
    t.p = s.precision();
    t.a = shrinkage_matrix(lambda, t.p);
    MatrixXd q = t.p.asDiagonal() * t.a;
    t.q = 0.5 * (q + q.transpose());
    return t;
}

void check_summary(const TaskSummary& s, const PriorStructure& structure) {
    if (s.d() != structure.d())
        throw DomainError("summary has " + std::to_string(s.d()) + " groups, prior structure has " +
                          std::to_string(structure.d()));
}

void check_tasks(std::span<const TaskSummary> tasks, const PriorStructure& structure) {
    if (tasks.empty()) throw DomainError("at least one task is required");
    for (const auto& t : tasks) check_summary(t, structure);
}

std::vector<TaskTerms> all_terms(std::span<const TaskSummary> tasks, const MatrixXd& lambda) {
    std::vector<TaskTerms> terms;
    terms.reserve(tasks.size());
    for (const auto& t : tasks) terms.push_back(task_terms(t, lambda));
    return terms;
}

struct MetaMapSystem {
    MatrixXd gamma;
    MatrixXd s;      // sum_t Q_t
    MatrixXd n;      // (I + Gamma S)^{-1}
    VectorXd b;      // sum_t Q_t y_t
    MapCenter center;
};

MetaMapSystem metamap_system(std::span<const TaskSummary> tasks, const std::vector<TaskTerms>& terms,
                             const PriorStructure& structure, const VectorXd& upsilon2) {
    const int d = structure.d();
    MetaMapSystem sys;
    sys.gamma = build_covariance(structure, upsilon2);
    sys.s = MatrixXd::Zero(d, d);
    sys.b = VectorXd::Zero(d);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        sys.s += terms[t].q;
        sys.b += terms[t].q * tasks[t].y;
    }
    const ExtendedLU lu(identity_plus_product(sys.gamma, sys.s));
    sys.n = lu.inverse();
    sys.center.theta = lu.solve(VectorXd(sys.gamma * sys.b));
    for (const auto& term : terms) sys.center.mixing.push_back(lu.solve(MatrixXd(sys.gamma * term.q)));
    return sys;
}

struct SureSolveSystem {
    std::vector<MatrixXd> k;  // A_t^T Sigma_t^{-1} A_t
    MatrixXd r_inv;
    MapCenter center;
};

SureSolveSystem suresolve_system(std::span<const TaskSummary> tasks, const std::vector<TaskTerms>& terms,
                                 int d) {
    SureSolveSystem sys;
    MatrixXd r = MatrixXd::Zero(d, d);
    VectorXd rhs = VectorXd::Zero(d);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        MatrixXd k = terms[t].q.transpose() * terms[t].a;
        k = 0.5 * (k + k.transpose());
        r += k;
        rhs += k * tasks[t].y;
        sys.k.push_back(std::move(k));
    }
    const ExtendedLU lu(r);
    sys.r_inv = lu.inverse();
    sys.center.theta = lu.solve(rhs);
    for (const auto& k : sys.k) sys.center.mixing.push_back(lu.solve(k));
    return sys;
}

VectorXd clamp_nonnegative(VectorXd theta) { return theta.cwiseMax(0.0); }

}  // namespace

Variant parse_variant(std::string_view name) {
    if (name == "metamap") return Variant::metamap;
    if (name == "suresolve") return Variant::suresolve;
    throw UsageError("unknown variant '" + std::string(name) + "' (expected metamap or suresolve)");
}

std::string_view variant_name(Variant v) { return v == Variant::metamap ? "metamap" : "suresolve"; }

EstimatorOutput map_estimate(const TaskSummary& summary, const VectorXd& theta, const MatrixXd& lambda) {
    if (theta.size() != summary.d()) throw DomainError("center length differs from group count");
    const MatrixXd a = shrinkage_matrix(lambda, summary.precision());
    EstimatorOutput out;
    const Eigen::MatrixXd keep = Eigen::MatrixXd::Identity(summary.d(), summary.d()) - a;
    out.mu_hat = theta + keep * (summary.y - theta);
    out.method = "map";
    out.provenance.resize(summary.d());
    for (int g = 0; g < summary.d(); ++g)
        out.provenance[g] = summary.missing(g) ? Provenance::fallback : Provenance::direct;
    return out;
}

double map_divergence(const TaskSummary& summary, const MatrixXd& lambda) {
    return summary.d() - shrinkage_matrix(lambda, summary.precision()).trace();
}

double sure_value(const TaskSummary& summary, const VectorXd& mu_hat, double divergence) {
    if (mu_hat.size() != summary.d()) throw DomainError("estimate length differs from group count");
    const VectorXd r = mu_hat - summary.y;
    const double weighted = r.dot(summary.precision().cwiseProduct(r));
    const double d = summary.d();
    return summary.sigma2 / d * (weighted - d + 2.0 * divergence);
}

double sure_value_general(const VectorXd& y, const MatrixXd& sigma, const MatrixXd& w, const VectorXd& mu_hat,
                          const MatrixXd& jacobian) {
    const auto d = y.size();
    if (sigma.rows() != d || sigma.cols() != d || w.rows() != d || w.cols() != d || mu_hat.size() != d ||
        jacobian.rows() != d || jacobian.cols() != d)
        throw DomainError("dimension mismatch in generalized SURE");
    const VectorXd r = mu_hat - y;
    return r.dot(w * r) + (w * sigma).trace() + 2.0 * sigma.cwiseProduct(w * jacobian - w).sum();
}

ObjectiveEval st_objective(const TaskSummary& summary, const PriorStructure& structure, const VectorXd& tau2) {
    check_summary(summary, structure);
    const TaskTerms t = task_terms(summary, build_covariance(structure, tau2));
    const VectorXd r = t.a * summary.y;
    const VectorXd w = t.p.cwiseProduct(r);
    const VectorXd v = t.a.transpose() * w;
    const MatrixXd g = 2.0 * t.q * t.a;

    ObjectiveEval eval;
    eval.value = r.dot(w) - 2.0 * t.a.trace();
    eval.gradient.resize(structure.subset_count());
    for (int m = 0; m < structure.subset_count(); ++m)
        eval.gradient[m] = -2.0 * structure.bilinear(m, v, w) + structure.trace_product(m, g);
    return eval;
}

MapCenter theta_metamap(std::span<const TaskSummary> tasks, const PriorStructure& structure, const VectorXd& tau2,
                        const VectorXd& upsilon2) {
    check_tasks(tasks, structure);
    const auto terms = all_terms(tasks, build_covariance(structure, tau2));
    return metamap_system(tasks, terms, structure, upsilon2).center;
}

MapCenter theta_suresolve(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                          const VectorXd& tau2) {
    check_tasks(tasks, structure);
    const auto terms = all_terms(tasks, build_covariance(structure, tau2));
    return suresolve_system(tasks, terms, structure.d()).center;
}

ObjectiveEval mt_objective(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                           const VectorXd& tau2, const VectorXd& upsilon2, Variant variant) {
    check_tasks(tasks, structure);
    const int d = structure.d();
    const int subsets = structure.subset_count();
    const std::size_t tc = tasks.size();
    const auto terms = all_terms(tasks, build_covariance(structure, tau2));

    MetaMapSystem meta;
    SureSolveSystem solve;
    const MapCenter* center = nullptr;
    if (variant == Variant::metamap) {
        meta = metamap_system(tasks, terms, structure, upsilon2);
        center = &meta.center;
    } else {
        solve = suresolve_system(tasks, terms, d);
        center = &solve.center;
    }
    const VectorXd& theta = center->theta;
    const auto& mix = center->mixing;

    // r_t = A_t e_t, w_t = Sigma_t^{-1} r_t = Q_t e_t, v_t = A_t^T w_t
    std::vector<VectorXd> e(tc), w(tc), v(tc);
    VectorXd g = VectorXd::Zero(d);
    MatrixXd h = MatrixXd::Zero(d, d);
    ObjectiveEval eval;
    for (std::size_t t = 0; t < tc; ++t) {
        e[t] = theta - tasks[t].y;
        const VectorXd r = terms[t].a * e[t];
        w[t] = terms[t].p.cwiseProduct(r);
        v[t] = terms[t].a.transpose() * w[t];
        g += v[t];
        h += mix[t] * terms[t].a;
        eval.value += r.dot(w[t]) + 2.0 * (terms[t].a * mix[t]).trace() - 2.0 * terms[t].a.trace();
    }

    // Every trace term of the tau2 gradient is Tr(C_i gt).
    MatrixXd gt = MatrixXd::Zero(d, d);
    for (std::size_t t = 0; t < tc; ++t) {
        const MatrixXd& q = terms[t].q;
        const MatrixXd& a = terms[t].a;
        if (variant == Variant::metamap) {
            gt += 2.0 * q * (a - mix[t] * a - a * mix[t] + h * mix[t]);
        } else {
            const MatrixXd& k = solve.k[t];
            const MatrixXd et = (a - h) * solve.r_inv;
            gt += 2.0 * q * (a - mix[t] * a) - 2.0 * (q * et * k + k * et * q);
        }
    }

    const int params = variant == Variant::metamap ? 2 * subsets : subsets;
    eval.gradient = VectorXd::Zero(params);

    if (variant == Variant::metamap) {
        std::vector<VectorXd> mg(tc);
        for (std::size_t t = 0; t < tc; ++t) mg[t] = mix[t].transpose() * g;
        for (int m = 0; m < subsets; ++m) {
            double acc = structure.trace_product(m, gt);
            for (std::size_t t = 0; t < tc; ++t)
                acc += -2.0 * structure.bilinear(m, v[t], w[t]) + 2.0 * structure.bilinear(m, mg[t], w[t]);
            eval.gradient[m] = acc;
        }

        // Hyperprior components: dGamma = C_i.
        const VectorXd ng = meta.n.transpose() * g;
        const VectorXd resid = meta.b - meta.s * theta;
        MatrixXd qa = MatrixXd::Zero(d, d);
        for (std::size_t t = 0; t < tc; ++t) qa += terms[t].q * terms[t].a;
        const MatrixXd gu = 2.0 * (qa - meta.s * h) * meta.n;
        for (int m = 0; m < subsets; ++m)
            eval.gradient[subsets + m] = 2.0 * structure.bilinear(m, ng, resid) + structure.trace_product(m, gu);
    } else {
        // E_t = (A_t - H) R^{-1}, z = R^{-1} g
        const VectorXd z = solve.r_inv * g;
        std::vector<VectorXd> kz(tc), qz(tc), ke(tc);
        for (std::size_t t = 0; t < tc; ++t) {
            const MatrixXd& k = solve.k[t];
            const MatrixXd& q = terms[t].q;
            kz[t] = k * z;
            qz[t] = q * z;
            ke[t] = k * e[t];
        }
        for (int m = 0; m < subsets; ++m) {
            double acc = structure.trace_product(m, gt);
            for (std::size_t t = 0; t < tc; ++t) {
                acc += -2.0 * structure.bilinear(m, v[t], w[t]);
                acc += 2.0 * (structure.bilinear(m, kz[t], w[t]) + structure.bilinear(m, qz[t], ke[t]));
            }
            eval.gradient[m] = acc;
        }
    }
    return eval;
}

Eigen::VectorXd mt_center(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                          const VectorXd& tau2, const VectorXd& upsilon2, Variant variant, bool nonneg_center) {
    VectorXd theta = variant == Variant::metamap ? theta_metamap(tasks, structure, tau2, upsilon2).theta
                                                 : theta_suresolve(tasks, structure, tau2).theta;
    return nonneg_center ? clamp_nonnegative(std::move(theta)) : theta;
}

std::vector<EstimatorOutput> mt_estimate_at(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                                            const VectorXd& tau2, const VectorXd& theta) {
    check_tasks(tasks, structure);
    const MatrixXd lambda = build_covariance(structure, tau2);
    std::vector<EstimatorOutput> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) out.push_back(map_estimate(t, theta, lambda));
    return out;
}

std::vector<EstimatorOutput> mt_estimate(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                                         const VectorXd& tau2, const VectorXd& upsilon2, Variant variant,
                                         bool nonneg_center) {
    const VectorXd theta = mt_center(tasks, structure, tau2, upsilon2, variant, nonneg_center);
    return mt_estimate_at(tasks, structure, tau2, theta);
}

}  // namespace suremap
