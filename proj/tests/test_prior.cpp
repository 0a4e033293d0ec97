#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "suremap/error.hpp"
#include "suremap/linalg.hpp"
#include "suremap/prior.hpp"
#include "support.hpp"

using namespace suremap;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing_support::space_of;

namespace {

// C_{A;g,h} = 1 iff g and h agree on every attribute of A, evaluated from class tuples.
MatrixXd gram_by_definition(const AttributeSpace& space, SubsetMask mask) {
    MatrixXd c = MatrixXd::Zero(space.d(), space.d());
    for (int g = 0; g < space.d(); ++g)
        for (int h = 0; h < space.d(); ++h) {
            const auto cg = space.group_classes(g), ch = space.group_classes(h);
            bool agree = true;
            for (int a = 0; a < space.k(); ++a)
                if ((mask >> a) & 1) agree = agree && cg[a] == ch[a];
            c(g, h) = agree ? 1.0 : 0.0;
        }
    return c;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

TEST_CASE("structure of the two-attribute example") {
    const PriorStructure s(space_of({2, 3}));
    CHECK(s.subset_count() == 4);
    CHECK(s.gram(0) == MatrixXd::Ones(6, 6));
    CHECK(s.gram(3) == MatrixXd::Identity(6, 6));
    MatrixXd sex = MatrixXd::Zero(6, 6);
    sex.topLeftCorner(3, 3).setOnes();
    sex.bottomRightCorner(3, 3).setOnes();
    CHECK(s.gram(1) == sex);
    for (int g = 0; g < 6; ++g)
        for (int h = 0; h < 6; ++h) CHECK(s.gram(2)(g, h) == (g % 3 == h % 3 ? 1.0 : 0.0));
}

TEST_CASE("single attribute has two subsets") {
    const PriorStructure s(space_of({3}));
    CHECK(s.subset_count() == 2);
    CHECK(s.gram(0) == MatrixXd::Ones(3, 3));
    CHECK(s.gram(1) == MatrixXd::Identity(3, 3));
}

TEST_CASE("gram matrices match the entrywise definition and Kronecker form") {
    const auto space = space_of({2, 2, 2});
    const PriorStructure s(space);
    for (SubsetMask m = 0; m < 8; ++m) {
        const MatrixXd def = gram_by_definition(space, m);
        CHECK(s.gram(m) == def);
        MatrixXd k = MatrixXd::Ones(1, 1);
        for (int a = 0; a < 3; ++a) k = kron(k, ((m >> a) & 1) ? MatrixXd(MatrixXd::Identity(2, 2)) : MatrixXd(MatrixXd::Ones(2, 2)));
        CHECK(s.gram(m) == k);
        const MatrixXd u = s.indicator(m);
        CHECK(u * u.transpose() == def);
        CHECK(u.colwise().sum().minCoeff() >= 1.0);
        CHECK(u.rowwise().sum() == VectorXd::Ones(8));
        const MatrixXd utu = u.transpose() * u;
        CHECK(utu.isDiagonal());
    }
    MatrixXd total = MatrixXd::Zero(8, 8);
    for (SubsetMask m = 0; m < 8; ++m) total += s.gram(m);
    CHECK(total.diagonal() == VectorXd::Constant(8, 8.0));
}

TEST_CASE("cell operations agree with dense gram products") {
    const auto space = space_of({3, 2, 2});
    const PriorStructure s(space);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    VectorXd x(12), y(12);
    MatrixXd z(12, 12);
    for (int i = 0; i < 12; ++i) x[i] = normal(rng), y[i] = normal(rng);
    for (int i = 0; i < 144; ++i) z(i) = normal(rng);
    for (SubsetMask m = 0; m < 8; ++m) {
        const MatrixXd c = s.gram(m);
        CHECK((s.apply(m, x) - c * x).norm() < 1e-12);
        CHECK(std::abs(s.bilinear(m, x, y) - x.dot(c * y)) < 1e-12);
        CHECK(std::abs(s.trace_product(m, z) - (c * z).trace()) < 1e-11);
    }
}

TEST_CASE("covariance examples") {
    const PriorStructure s(space_of({3}));
    const VectorXd tau2 = (VectorXd(2) << 1.0, 2.0).finished();
    const MatrixXd expected = (MatrixXd(3, 3) << 3, 1, 1, 1, 3, 1, 1, 1, 3).finished();
    CHECK(build_covariance(s, tau2) == expected);

    const PriorStructure s2(space_of({2, 3}));
    VectorXd e_full = VectorXd::Zero(4);
    e_full[3] = 1.0;
    CHECK(build_covariance(s2, e_full) == MatrixXd::Identity(6, 6));
    CHECK_THROWS_AS(build_covariance(s2, VectorXd::Ones(3)), DomainError);
    CHECK_THROWS_AS(build_covariance(s2, -VectorXd::Ones(4)), DomainError);
}

TEST_CASE("covariance equals the indicator-product sum and is PSD") {
    const PriorStructure s(space_of({2, 3}));
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const VectorXd tau2 = testing_support::random_positive(4, rng, 0.0, 3.0);
        MatrixXd oracle = MatrixXd::Zero(6, 6);
        for (SubsetMask m = 0; m < 4; ++m) {
            const MatrixXd u = s.indicator(m);
            oracle += tau2[m] * u * u.transpose();
        }
        const MatrixXd lambda = build_covariance(s, tau2);
        CHECK((lambda - oracle).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(lambda == lambda.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(lambda);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * lambda.norm());
    }
}

TEST_CASE("shrinkage matrix examples") {
    const MatrixXd id = MatrixXd::Identity(3, 3);
    CHECK((shrinkage_matrix(id, VectorXd::Ones(3)) - 0.5 * id).norm() < 1e-15);
    CHECK(shrinkage_matrix(id, VectorXd::Zero(3)) == id);

    const PriorStructure s(space_of({2, 3}));
    VectorXd tau2 = VectorXd::Zero(4);
    tau2[3] = 0.7;
    const VectorXd n = (VectorXd(6) << 1, 2, 3, 4, 5, 0).finished();
    const double sigma2 = 1.5;
    const MatrixXd a = shrinkage_matrix(build_covariance(s, tau2), n / sigma2);
    for (int g = 0; g < 6; ++g) CHECK(a(g, g) == doctest::Approx(1.0 / (1.0 + 0.7 * n[g] / sigma2)).epsilon(1e-14));
    CHECK((a - MatrixXd(a.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("shrinkage identities on random inputs") {
    const PriorStructure s(space_of({2, 3}));
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 30; ++rep) {
        const VectorXd tau2 = testing_support::random_positive(4, rng, 0.0, 2.0);
        const auto summary = testing_support::random_summary(6, rng, 1, 20, 0.8);
        const VectorXd p = summary.precision();
        const MatrixXd lambda = build_covariance(s, tau2);
        const MatrixXd a = shrinkage_matrix(lambda, p);
        const MatrixXd pa = p.asDiagonal() * a;
        CHECK((pa - pa.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * p.maxCoeff());
        const MatrixXd sigma = p.cwiseInverse().asDiagonal();
        const MatrixXd direct = (lambda + sigma).inverse();
        CHECK((direct - pa).norm() <= 1e-8 * direct.norm());
    }
}

TEST_CASE("extreme shared variance keeps the shrinkage accurate") {
    // Closed form for Lambda = a 11^T + b I with precisions p:
    // A = (I + (a 11^T + b I) P)^{-1}.
    const PriorStructure s(space_of({2, 3}));
    VectorXd tau2 = VectorXd::Zero(4);
    tau2[0] = 1e12;
    tau2[3] = 1e-12;
    const VectorXd p = (VectorXd(6) << 1, 3, 5, 7, 9, 11).finished();
    const MatrixXd a = shrinkage_matrix(build_covariance(s, tau2), p);
    const VectorXd y = (VectorXd(6) << 0.3, -1.0, 2.0, 0.5, 1.5, -0.2).finished();
    const VectorXd mu = y - a * y;
    const double pooled = p.dot(y) / p.sum();
    CHECK((mu.array() - pooled).abs().maxCoeff() <= 1e-4 * std::abs(pooled));
}

TEST_CASE("ill-conditioned systems are reported") {
    MatrixXd m = MatrixXd::Ones(3, 3);
    CHECK_THROWS_AS(ExtendedLU{m}, NumericalError);
    m(0, 0) = std::nan("");
    CHECK_THROWS_AS(ExtendedLU{m}, NumericalError);
}

TEST_CASE("order restriction") {
    VectorXd tau2 = VectorXd::Ones(4);
    const VectorXd r0 = restrict_order(tau2, 2, 0);
    CHECK(r0 == (VectorXd(4) << 1, 0, 0, 1).finished());
    CHECK(restrict_order(tau2, 2, 2) == tau2);
    CHECK(restrict_order(tau2, 2, -1) == (VectorXd(4) << 0, 0, 0, 1).finished());
    const VectorXd r3 = restrict_order(VectorXd::Ones(8), 3, 1);
    int zeroed = 0;
    for (int m = 0; m < 8; ++m) {
        if (r3[m] == 0.0) {
            ++zeroed;
            CHECK(subset_size(m) == 2);
        }
    }
    CHECK(zeroed == 3);
    CHECK_THROWS_AS(restrict_order(tau2, 2, 3), DomainError);
    CHECK_THROWS_AS(restrict_order(tau2, 2, -2), DomainError);
}

TEST_CASE("subset labels follow ascending mask order") {
    AttributeSpace space({{"sex", {"f", "m"}}, {"age", {"y", "o"}}});
    const auto labels = subset_labels(space);
    REQUIRE(labels.size() == 4);
    CHECK(labels[0] == "{}");
    CHECK(labels[1] == "{sex}");
    CHECK(labels[2] == "{age}");
    CHECK(labels[3] == "{sex,age}");
}

TEST_CASE("structure size limit") {
    CHECK_THROWS_AS(PriorStructure(space_of({100, 100})), DomainError);
    CHECK_NOTHROW(PriorStructure(space_of({100, 100}), 10000));
}
