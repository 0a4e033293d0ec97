#include "suremap/oracle.hpp"

#include "suremap/error.hpp"

namespace suremap {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::VectorXd FeatureDesign::prior_diagonal(const VectorXd& variances) const {
    if (variances.size() + 1 != static_cast<Eigen::Index>(offsets.size()))
        throw DomainError("variance vector length does not match the design");
    VectorXd diag(columns());
    for (Eigen::Index m = 0; m < variances.size(); ++m)
        diag.segment(offsets[m], offsets[m + 1] - offsets[m]).setConstant(variances[m]);
    return diag;
}

FeatureDesign feature_design(const PriorStructure& structure) {
    FeatureDesign design;
    design.offsets.push_back(0);
    for (int m = 0; m < structure.subset_count(); ++m)
        design.offsets.push_back(design.offsets.back() + structure.cell_count(m));
    design.phi = MatrixXd::Zero(structure.d(), design.offsets.back());
    for (int m = 0; m < structure.subset_count(); ++m)
        design.phi.middleCols(design.offsets[m], structure.cell_count(m)) = structure.indicator(m);
    return design;
}

namespace {

void require_positive(const VectorXd& v, const char* what) {
    if (!(v.array() > 0.0).all()) throw DomainError(std::string(what) + " must be strictly positive for the ridge oracle");
}

MatrixXd solve_spd(const MatrixXd& m, const MatrixXd& rhs) {
    const Eigen::LDLT<MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericalError("ridge normal equations are singular");
    return ldlt.solve(rhs);
}

EstimatorOutput as_output(VectorXd mu, const TaskSummary& s) {
    EstimatorOutput out{std::move(mu), "ridge", std::vector<Provenance>(s.d())};
    for (int g = 0; g < s.d(); ++g) out.provenance[g] = s.missing(g) ? Provenance::fallback : Provenance::direct;
    return out;
}

}  // namespace

EstimatorOutput ridge_single(const TaskSummary& summary, const PriorStructure& structure, const VectorXd& tau2) {
    if (summary.d() != structure.d()) throw DomainError("summary and prior structure sizes differ");
    if (tau2.size() != structure.subset_count()) throw DomainError("tau2 has the wrong length");
    require_positive(tau2, "tau2");
    const FeatureDesign design = feature_design(structure);
    const VectorXd p = summary.precision();
    MatrixXd normal = design.phi.transpose() * p.asDiagonal() * design.phi;
    normal.diagonal() += design.prior_diagonal(tau2).cwiseInverse();
    const VectorXd beta = solve_spd(normal, design.phi.transpose() * p.cwiseProduct(summary.y));
    return as_output(design.phi * beta, summary);
}

std::vector<EstimatorOutput> ridge_multi(std::span<const TaskSummary> tasks, const PriorStructure& structure,
                                         const VectorXd& tau2, const VectorXd& upsilon2) {
    if (tasks.empty()) throw DomainError("at least one task is required");
    if (tau2.size() != structure.subset_count() || upsilon2.size() != structure.subset_count())
        throw DomainError("variance vectors have the wrong length");
    require_positive(tau2, "tau2");
    require_positive(upsilon2, "upsilon2");
    const FeatureDesign design = feature_design(structure);
    const int d = structure.d();
    const int c = design.columns();
    const int tc = static_cast<int>(tasks.size());

    // Rows: task-major stacked groups. Columns: task blocks, then the shared block.
    MatrixXd phi = MatrixXd::Zero(tc * d, (tc + 1) * c);
    VectorXd p(tc * d), y(tc * d);
    for (int t = 0; t < tc; ++t) {
        if (tasks[t].d() != d) throw DomainError("summary and prior structure sizes differ");
        phi.block(t * d, t * c, d, c) = design.phi;
        phi.block(t * d, tc * c, d, c) = design.phi;
        p.segment(t * d, d) = tasks[t].precision();
        y.segment(t * d, d) = tasks[t].y;
    }
    VectorXd prior((tc + 1) * c);
    for (int t = 0; t < tc; ++t) prior.segment(t * c, c) = design.prior_diagonal(tau2);
    prior.segment(tc * c, c) = design.prior_diagonal(upsilon2);

    MatrixXd normal = phi.transpose() * p.asDiagonal() * phi;
    normal.diagonal() += prior.cwiseInverse();
    const VectorXd beta = solve_spd(normal, phi.transpose() * p.cwiseProduct(y));
    const VectorXd fitted = phi * beta;

    std::vector<EstimatorOutput> out;
    for (int t = 0; t < tc; ++t) out.push_back(as_output(fitted.segment(t * d, d), tasks[t]));
    return out;
}

}  // namespace suremap
