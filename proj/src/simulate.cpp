#include "suremap/simulate.hpp"

#include <cmath>

#include "suremap/error.hpp"
#include "suremap/random.hpp"

namespace suremap {

namespace {

bool nonnegative(const Eigen::VectorXd& v) { return v.allFinite() && (v.array() >= 0.0).all(); }

}  // namespace

void SyntheticSpec::validate() const {
    const int d = space.d();
    const int m = 1 << space.k();
    if (d < 1) throw UsageError("synthetic spec needs an attribute space");
    if (tasks < 1) throw UsageError("synthetic spec needs at least one task");
    if (n_min < 1 || n_max < n_min) throw UsageError("synthetic counts need 1 <= n_min <= n_max");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw UsageError("synthetic sigma2 must be positive");
    if (lambda.size() > 0) {
        if (lambda.rows() != d || lambda.cols() != d) throw UsageError("lambda must be d x d");
        if (!lambda.allFinite() || (lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff()))
            throw UsageError("lambda must be symmetric");
    } else if (tau2.size() != m || !nonnegative(tau2)) {
        throw UsageError("tau2 must hold " + std::to_string(m) + " nonnegative entries");
    }
    if (theta.size() > 0) {
        if (theta.size() != d || !theta.allFinite()) throw UsageError("theta must hold " + std::to_string(d) + " entries");
    } else if (upsilon2.size() > 0 && (upsilon2.size() != m || !nonnegative(upsilon2))) {
        throw UsageError("upsilon2 must hold " + std::to_string(m) + " nonnegative entries");
    }
}

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.space = AttributeSpace::from_level_counts(std::vector<int>{2, 3});
    spec.tasks = 10;
    spec.n_min = 1;
    spec.n_max = 5;
    spec.tau2 = Eigen::VectorXd::Constant(4, 0.1);
    spec.upsilon2 = Eigen::VectorXd::Constant(4, 1.0);
    spec.sigma2 = 1.0;
    return spec;
}

SyntheticSpec synthetic_from_json(const Json& j) {
    if (!j.is_object()) throw DataError("synthetic spec must be a JSON object");
    SyntheticSpec spec = default_synthetic_spec();
    try {
        const bool new_space = j.contains("attributes") || j.contains("levels");
        if (j.contains("attributes")) {
            spec.space = space_from_json(j.at("attributes"));
        } else if (j.contains("levels")) {
            try {
                spec.space = AttributeSpace::from_level_counts(j.at("levels").get<std::vector<int>>());
            } catch (const DomainError& e) {
                throw DataError(e.what());
            }
        }
        const int m = 1 << spec.space.k();
        if (new_space) {
            spec.tau2 = Eigen::VectorXd::Constant(m, 0.1);
            spec.upsilon2 = Eigen::VectorXd::Constant(m, 1.0);
        }
        if (j.contains("tasks")) spec.tasks = j.at("tasks").get<int>();
        if (j.contains("n_min")) spec.n_min = j.at("n_min").get<int>();
        if (j.contains("n_max")) spec.n_max = j.at("n_max").get<int>();
        if (j.contains("sigma2")) spec.sigma2 = j.at("sigma2").get<double>();
        if (j.contains("tau2")) spec.tau2 = subset_vector_from_json(spec.space, j.at("tau2"));
        if (j.contains("upsilon2")) {
            spec.upsilon2 = j.at("upsilon2").is_null() ? Eigen::VectorXd()
                                                       : subset_vector_from_json(spec.space, j.at("upsilon2"));
        }
        if (j.contains("theta")) spec.theta = vector_from_json(j.at("theta"), "theta");
        if (j.contains("lambda")) {
            const auto rows = j.at("lambda").get<std::vector<std::vector<double>>>();
            spec.lambda.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != rows.size()) throw DataError("lambda must be square");
                for (std::size_t c = 0; c < rows.size(); ++c)
                    spec.lambda(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed synthetic spec: ") + e.what());
    }
    return spec;
}

Json synthetic_to_json(const SyntheticSpec& spec) {
    Json j;
    j["attributes"] = space_to_json(spec.space);
    j["tasks"] = spec.tasks;
    j["n_min"] = spec.n_min;
    j["n_max"] = spec.n_max;
    j["sigma2"] = spec.sigma2;
    if (spec.lambda.size() > 0) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < spec.lambda.rows(); ++r) rows.push_back(vector_to_json(spec.lambda.row(r).transpose()));
        j["lambda"] = rows;
    } else {
        j["tau2"] = subset_vector_to_json(spec.space, spec.tau2);
    }
    if (spec.theta.size() > 0)
        j["theta"] = vector_to_json(spec.theta);
    else if (spec.upsilon2.size() > 0)
        j["upsilon2"] = subset_vector_to_json(spec.space, spec.upsilon2);
    return j;
}

Eigen::VectorXd draw_additive_effects(const PriorStructure& structure, const Eigen::VectorXd& tau2,
                                      std::mt19937_64& rng) {
    if (tau2.size() != structure.subset_count()) throw DomainError("tau2 has the wrong length");
    std::normal_distribution<double> normal;
    Eigen::VectorXd effect = Eigen::VectorXd::Zero(structure.d());
    std::vector<double> z;
    for (int m = 0; m < structure.subset_count(); ++m) {
        z.resize(structure.cell_count(m));
        for (double& v : z) v = normal(rng);
        const double scale = std::sqrt(tau2[m]);
        const auto& cells = structure.cells(m);
        for (int g = 0; g < structure.d(); ++g) effect[g] += scale * z[cells[g]];
    }
    return effect;
}

namespace {

Eigen::VectorXd draw_covariance(const Eigen::MatrixXd& lambda, std::mt19937_64& rng) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lambda);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(lambda.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    return eig.eigenvectors() * root.cwiseProduct(z);
}

}  // namespace

SyntheticDraw simulate(const SyntheticSpec& spec, const PriorStructure& structure, std::uint64_t seed,
                       std::uint64_t trial) {
    spec.validate();
    if (!(structure.space() == spec.space)) throw DomainError("prior structure does not match the synthetic space");
    const int d = structure.d();
    SyntheticDraw draw;
    if (spec.theta.size() > 0) {
        draw.theta = spec.theta;
    } else if (spec.upsilon2.size() > 0) {
        auto rng = make_stream(seed, trial, 0, kSharedStream);
        draw.theta = draw_additive_effects(structure, spec.upsilon2, rng);
    } else {
        draw.theta = Eigen::VectorXd::Zero(d);
    }

    for (int t = 0; t < spec.tasks; ++t) {
        auto rng = make_stream(seed, trial, 0, static_cast<std::uint64_t>(t));
        const Eigen::VectorXd effect = spec.lambda.size() > 0 ? draw_covariance(spec.lambda, rng)
                                                              : draw_additive_effects(structure, spec.tau2, rng);
        draw.mu.push_back(draw.theta + effect);

        std::uniform_int_distribution<int> count(spec.n_min, spec.n_max);
        std::normal_distribution<double> normal;
        TaskSummary s;
        s.id = "task" + std::to_string(t);
        s.sigma2 = spec.sigma2;
        s.n.resize(d);
        s.y.resize(d);
        for (int g = 0; g < d; ++g) {
            s.n[g] = count(rng);
            s.y[g] = draw.mu.back()[g] + std::sqrt(spec.sigma2 / s.n[g]) * normal(rng);
        }
        draw.tasks.push_back(std::move(s));
    }
    return draw;
}

Dataset simulate_rows(const SyntheticSpec& spec, const SyntheticDraw& draw, std::uint64_t seed,
                      std::uint64_t trial) {
    Dataset data;
    data.space = spec.space;
    for (const auto& task : draw.tasks) data.batch.task_names.push_back(task.id);
    const double sd = std::sqrt(spec.sigma2);
    for (std::size_t t = 0; t < draw.tasks.size(); ++t) {
        auto rng = make_stream(seed, trial, 1, t);
        std::normal_distribution<double> normal;
        const auto& task = draw.tasks[t];
        for (int g = 0; g < task.d(); ++g)
            for (int i = 0; i < task.n[g]; ++i)
                data.batch.add(g, draw.mu[t][g] + sd * normal(rng), static_cast<int>(t));
    }
    return data;
}

Dataset reassign_tasks(const Dataset& data, double alpha, std::uint64_t seed, std::uint64_t trial) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
    const int tc = data.task_count();
    Dataset out;
    out.space = data.space;
    out.batch.task_names = data.task_ids();
    out.labels = data.labels;
    const auto rows = data.rows_by_task();
    std::vector<int> target(data.batch.size());
    for (int t = 0; t < tc; ++t) {
        auto rng = make_stream(seed, trial, 2, static_cast<std::uint64_t>(t));
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, tc - 1);
        for (std::size_t i : rows[t]) {
            const double u = coin(rng);
            const int other = pick(rng);
            target[i] = u < alpha ? other : t;
        }
    }
    out.batch.reserve(data.batch.size());
    for (std::size_t i = 0; i < data.batch.size(); ++i) out.batch.add(data.batch.group(i), data.batch.value(i), target[i]);
    return out;
}

std::vector<Eigen::VectorXd> mixed_truth(const std::vector<Eigen::VectorXd>& mu, double alpha) {
    if (mu.empty()) return {};
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(mu[0].size());
    for (const auto& m : mu) mean += m;
    mean /= static_cast<double>(mu.size());
    std::vector<Eigen::VectorXd> out;
    for (const auto& m : mu) out.push_back((1.0 - alpha) * m + alpha * mean);
    return out;
}

Json draw_to_json(const AttributeSpace& space, const SyntheticDraw& draw) {
    Json j = summaries_to_json(space, draw.tasks);
    Json mu = Json::array();
    for (const auto& m : draw.mu) mu.push_back(vector_to_json(m));
    j["truth"] = {{"theta", vector_to_json(draw.theta)}, {"mu", mu}};
    return j;
}

}  // namespace suremap
