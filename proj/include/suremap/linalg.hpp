#pragma once

#include <Eigen/Dense>

namespace suremap {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Partial-pivoted LU carried out in extended precision. Shrinkage systems of
// the form I + Lambda * P become badly conditioned when one variance
// component dominates (a 1e12 shared effect gives condition ~1e14), while the
// quantities built from them stay well defined; the wider mantissa keeps those
// quantities accurate to ~1e-6 in that regime.
class ExtendedLU {
public:
    // Reciprocal condition number (1-norm estimate) below which solve refuses.
    static constexpr double kMinRcond = 1e-17;

    explicit ExtendedLU(const Eigen::MatrixXd& m);
    explicit ExtendedLU(const MatrixXld& m);

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd inverse() const;
    double rcond() const { return rcond_; }

private:
    Eigen::PartialPivLU<MatrixXld> lu_;
    double rcond_ = 0.0;
};

// I + left * diag(right_diag), formed in extended precision so that the
// identity is not rounded away next to large entries.
MatrixXld identity_plus_scaled(const Eigen::MatrixXd& left, const Eigen::VectorXd& right_diag);

// I + left * right in extended precision.
MatrixXld identity_plus_product(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right);

}  // namespace suremap
