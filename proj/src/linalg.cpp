#include "suremap/linalg.hpp"

#include <algorithm>
#include <sstream>

#include "suremap/error.hpp"

namespace suremap {

ExtendedLU::ExtendedLU(const Eigen::MatrixXd& m) : ExtendedLU(MatrixXld(m.cast<long double>())) {}

ExtendedLU::ExtendedLU(const MatrixXld& m) {
    if (m.rows() != m.cols()) throw DomainError("linear solve needs a square matrix");
    if (!m.allFinite()) throw NumericalError("linear system has non-finite entries");
    lu_.compute(m);
    rcond_ = static_cast<double>(lu_.rcond());
    // The rcond estimate is meaningless once a pivot vanishes, so bound it by the pivot spread too.
    const auto pivots = lu_.matrixLU().diagonal().cwiseAbs();
    const long double largest = m.rows() > 0 ? pivots.maxCoeff() : 1.0L;
    const long double smallest = m.rows() > 0 ? pivots.minCoeff() : 1.0L;
    if (largest > 0.0L) rcond_ = std::min(rcond_, static_cast<double>(smallest / largest));
    else if (m.rows() > 0) rcond_ = 0.0;
    if (!(rcond_ >= kMinRcond)) {
        std::ostringstream msg;
        msg << "linear system is numerically singular (reciprocal condition " << rcond_ << ", dimension "
            << m.rows() << ")";
        throw NumericalError(msg.str());
    }
}

Eigen::MatrixXd ExtendedLU::solve(const Eigen::MatrixXd& rhs) const {
    return lu_.solve(rhs.cast<long double>()).cast<double>();
}

Eigen::VectorXd ExtendedLU::solve(const Eigen::VectorXd& rhs) const {
    return lu_.solve(rhs.cast<long double>()).cast<double>();
}

Eigen::MatrixXd ExtendedLU::inverse() const { return lu_.inverse().cast<double>(); }

MatrixXld identity_plus_scaled(const Eigen::MatrixXd& left, const Eigen::VectorXd& right_diag) {
    if (left.cols() != right_diag.size()) throw DomainError("dimension mismatch in I + L diag(p)");
    MatrixXld m = left.cast<long double>() * right_diag.cast<long double>().asDiagonal();
    m.diagonal().array() += 1.0L;
    return m;
}

MatrixXld identity_plus_product(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
    if (left.cols() != right.rows()) throw DomainError("dimension mismatch in I + L R");
    MatrixXld m = left.cast<long double>() * right.cast<long double>();
    m.diagonal().array() += 1.0L;
    return m;
}

}  // namespace suremap
