#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "suremap/model.hpp"

namespace testing_support {

inline suremap::AttributeSpace space_of(std::vector<int> counts) {
    return suremap::AttributeSpace::from_level_counts(counts);
}

inline suremap::TaskSummary random_summary(int d, std::mt19937_64& rng, int n_lo = 1, int n_hi = 20,
                                           double sigma2 = 1.0, double spread = 1.0) {
    std::uniform_int_distribution<int> count(n_lo, n_hi);
    std::normal_distribution<double> normal(0.0, spread);
    suremap::TaskSummary s;
    s.y.resize(d);
    s.n.resize(d);
    s.sigma2 = sigma2;
    for (int g = 0; g < d; ++g) {
        s.n[g] = count(rng);
        s.y[g] = s.n[g] > 0 ? normal(rng) : 0.0;
    }
    return s;
}

inline Eigen::VectorXd random_positive(int size, std::mt19937_64& rng, double lo = 0.1, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v[i] = u(rng);
    return v;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
}

}  // namespace testing_support
