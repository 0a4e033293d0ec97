#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "suremap/model.hpp"

namespace suremap {

// Subset A of the attributes as a bitmask: bit a set iff attribute a is in A.
// Vectors indexed by subsets (tau2, upsilon2) use ascending mask order.
using SubsetMask = std::uint32_t;

inline SubsetMask full_subset(int k) { return (SubsetMask{1} << k) - 1; }
inline int subset_size(SubsetMask mask) { return __builtin_popcount(mask); }

// "{}", "{sex}", "{sex,age}" in attribute declaration order.
std::string subset_label(const AttributeSpace& space, SubsetMask mask);
std::vector<std::string> subset_labels(const AttributeSpace& space);

// Indicator structure of the additive intersectional-effects prior. For each
// subset A, groups are partitioned into cells by their classes on A; U_A is
// the d x (#cells) membership matrix and C_A = U_A U_A^T marks pairs of groups
// that agree on every attribute in A. Matrices are produced on demand; the
// hot paths work directly on the cell partition.
class PriorStructure {
public:
    static constexpr int kDefaultMaxGroups = 4096;

    explicit PriorStructure(AttributeSpace space, int max_groups = kDefaultMaxGroups);

    const AttributeSpace& space() const { return space_; }
    int d() const { return space_.d(); }
    int k() const { return space_.k(); }
    int subset_count() const { return 1 << space_.k(); }

    // Cell (column of U_A) of each group, cells numbered row-major over A.
    const std::vector<int>& cells(SubsetMask mask) const { return cells_[mask]; }
    int cell_count(SubsetMask mask) const { return static_cast<int>(members_[mask].size()); }
    const std::vector<std::vector<int>>& members(SubsetMask mask) const { return members_[mask]; }

    Eigen::MatrixXd indicator(SubsetMask mask) const;
    Eigen::MatrixXd gram(SubsetMask mask) const;

    // C_A x
    Eigen::VectorXd apply(SubsetMask mask, const Eigen::VectorXd& x) const;
    // x^T C_A y
    double bilinear(SubsetMask mask, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    // Tr(C_A X) = sum of X over pairs of groups that share a cell
    double trace_product(SubsetMask mask, const Eigen::MatrixXd& x) const;

private:
    AttributeSpace space_;
    std::vector<std::vector<int>> cells_;
    std::vector<std::vector<std::vector<int>>> members_;
};

PriorStructure build_structure(const AttributeSpace& space, int max_groups = PriorStructure::kDefaultMaxGroups);

// Lambda(tau2) = sum_A tau2_A C_A.
Eigen::MatrixXd build_covariance(const PriorStructure& structure, const Eigen::VectorXd& tau2);

// A = (I + Lambda diag(precision))^{-1}, obtained by a linear solve; neither
// Lambda nor Sigma is inverted, so zero variances and empty groups are fine.
Eigen::MatrixXd shrinkage_matrix(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& precision);

// Entries that remain free under a max interaction order ell: subsets with
// |A| <= ell, plus the full set. ell = -1 keeps only the full set.
std::vector<bool> order_mask(int k, int max_order);

// Zero tau2 for |A| in {ell+1, ..., k-1}.
Eigen::VectorXd restrict_order(const Eigen::VectorXd& tau2, int k, int max_order);

}  // namespace suremap
