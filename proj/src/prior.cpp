#include "suremap/prior.hpp"

#include "suremap/error.hpp"
#include "suremap/linalg.hpp"

namespace suremap {

std::string subset_label(const AttributeSpace& space, SubsetMask mask) {
    std::string out = "{";
    bool first = true;
    for (int a = 0; a < space.k(); ++a) {
        if (!(mask & (SubsetMask{1} << a))) continue;
        if (!first) out += ",";
        out += space.attribute(a).name;
        first = false;
    }
    return out + "}";
}

std::vector<std::string> subset_labels(const AttributeSpace& space) {
    std::vector<std::string> labels;
    for (SubsetMask m = 0; m <= full_subset(space.k()); ++m) labels.push_back(subset_label(space, m));
    return labels;
}

PriorStructure::PriorStructure(AttributeSpace space, int max_groups) : space_(std::move(space)) {
    if (space_.d() > max_groups)
        throw DomainError("group count " + std::to_string(space_.d()) + " exceeds the structure limit " +
                          std::to_string(max_groups));
    if (space_.k() > 20) throw DomainError("too many attributes");
    const int d = space_.d();
    const int subsets = subset_count();
    cells_.assign(subsets, std::vector<int>(d, 0));
    members_.resize(subsets);

    std::vector<std::vector<int>> classes(d);
    for (int g = 0; g < d; ++g) classes[g] = space_.group_classes(g);

    for (int m = 0; m < subsets; ++m) {
        int count = 1;
        for (int a = 0; a < space_.k(); ++a)
            if (m & (1 << a)) count *= space_.level_count(a);
        members_[m].resize(count);
        for (int g = 0; g < d; ++g) {
            int cell = 0;
            for (int a = 0; a < space_.k(); ++a)
                if (m & (1 << a)) cell = cell * space_.level_count(a) + classes[g][a];
            cells_[m][g] = cell;
            members_[m][cell].push_back(g);
        }
    }
}

Eigen::MatrixXd PriorStructure::indicator(SubsetMask mask) const {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d(), cell_count(mask));
    for (int g = 0; g < d(); ++g) u(g, cells_[mask][g]) = 1.0;
    return u;
}

Eigen::MatrixXd PriorStructure::gram(SubsetMask mask) const {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d(), d());
    for (const auto& cell : members_[mask])
        for (int g : cell)
            for (int h : cell) c(g, h) = 1.0;
    return c;
}

Eigen::VectorXd PriorStructure::apply(SubsetMask mask, const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(d());
    for (const auto& cell : members_[mask]) {
        double s = 0.0;
        for (int g : cell) s += x[g];
        for (int g : cell) out[g] = s;
    }
    return out;
}

double PriorStructure::bilinear(SubsetMask mask, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    double total = 0.0;
    for (const auto& cell : members_[mask]) {
        double sx = 0.0, sy = 0.0;
        for (int g : cell) {
            sx += x[g];
            sy += y[g];
        }
        total += sx * sy;
    }
    return total;
}

double PriorStructure::trace_product(SubsetMask mask, const Eigen::MatrixXd& x) const {
    double total = 0.0;
    for (const auto& cell : members_[mask])
        for (int g : cell)
            for (int h : cell) total += x(h, g);
    return total;
}

PriorStructure build_structure(const AttributeSpace& space, int max_groups) {
    return PriorStructure(space, max_groups);
}

Eigen::MatrixXd build_covariance(const PriorStructure& structure, const Eigen::VectorXd& tau2) {
    if (tau2.size() != structure.subset_count())
        throw DomainError("tau2 has " + std::to_string(tau2.size()) + " entries, expected " +
                          std::to_string(structure.subset_count()));
    const int d = structure.d();
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(d, d);
    for (int m = 0; m < structure.subset_count(); ++m) {
        if (tau2[m] < 0.0) throw DomainError("variance components must be nonnegative");
        if (tau2[m] == 0.0) continue;
        for (const auto& cell : structure.members(m))
            for (int g : cell)
                for (int h : cell) lambda(g, h) += tau2[m];
    }
    return lambda;
}

Eigen::MatrixXd shrinkage_matrix(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& precision) {
    if (lambda.rows() != precision.size() || lambda.cols() != precision.size())
        throw DomainError("prior covariance and precision dimensions differ");
    if ((precision.array() < 0.0).any()) throw DomainError("precision entries must be nonnegative");
    const ExtendedLU lu(identity_plus_scaled(lambda, precision));
    return lu.inverse();
}

std::vector<bool> order_mask(int k, int max_order) {
    if (max_order < -1 || max_order > k) throw DomainError("max interaction order must lie in [-1, k]");
    std::vector<bool> free(std::size_t{1} << k);
    for (SubsetMask m = 0; m <= full_subset(k); ++m) {
        const int size = subset_size(m);
        free[m] = size <= max_order || size == k;
    }
    return free;
}

Eigen::VectorXd restrict_order(const Eigen::VectorXd& tau2, int k, int max_order) {
    if (tau2.size() != (1 << k)) throw DomainError("tau2 length must be 2^k");
    const auto free = order_mask(k, max_order);
    Eigen::VectorXd out = tau2;
    for (int m = 0; m < out.size(); ++m)
        if (!free[m]) out[m] = 0.0;
    return out;
}

}  // namespace suremap
