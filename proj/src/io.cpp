#include "suremap/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

#include "suremap/error.hpp"
#include "suremap/prior.hpp"

namespace suremap {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

Json space_to_json(const AttributeSpace& space) {
    Json attrs = Json::array();
    for (const auto& a : space.attributes()) attrs.push_back({{"name", a.name}, {"levels", a.levels}});
    return attrs;
}

namespace {

const Json& member(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw DataError(std::string("JSON is missing field '") + key + "'");
    return j.at(key);
}

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

AttributeSpace space_from_json(const Json& j) {
    return guarded("attribute space", [&] {
        const Json& arr = j.is_object() ? member(j, "attributes") : j;
        if (!arr.is_array()) throw DataError("attributes must be an array");
        std::vector<Attribute> attrs;
        for (const auto& a : arr)
            attrs.push_back({member(a, "name").get<std::string>(), member(a, "levels").get<std::vector<std::string>>()});
        try {
            return AttributeSpace(std::move(attrs));
        } catch (const DomainError& e) {
            throw DataError(e.what());
        }
    });
}

Json vector_to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw DataError(what + " must be an array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw DataError(what + " must be an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Json summaries_to_json(const AttributeSpace& space, std::span<const TaskSummary> tasks) {
    Json out;
    out["attributes"] = space_to_json(space);
    Json arr = Json::array();
    for (const auto& t : tasks) {
        Json task;
        task["id"] = t.id;
        task["y"] = vector_to_json(t.y);
        Json n = Json::array();
        for (int g = 0; g < t.n.size(); ++g) n.push_back(t.n[g]);
        task["n"] = n;
        if (t.group_variance.size() > 0) task["group_variance"] = vector_to_json(t.group_variance);
        if (t.sigma2 != tasks[0].sigma2) task["sigma2"] = t.sigma2;
        arr.push_back(std::move(task));
    }
    out["tasks"] = std::move(arr);
    out["sigma2"] = tasks.empty() ? 1.0 : tasks[0].sigma2;
    return out;
}

SummaryFile summaries_from_json(const Json& j) {
    return guarded("summary", [&] {
        SummaryFile file;
        file.space = space_from_json(member(j, "attributes"));
        const int d = file.space.d();
        const double shared = j.contains("sigma2") ? j.at("sigma2").get<double>() : 1.0;
        const Json& tasks = member(j, "tasks");
        if (!tasks.is_array() || tasks.empty()) throw DataError("summary needs a nonempty 'tasks' array");
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            const Json& tj = tasks[t];
            TaskSummary s;
            s.id = tj.contains("id") ? tj.at("id").get<std::string>() : std::to_string(t);
            s.y = vector_from_json(member(tj, "y"), "y");
            const auto n = member(tj, "n").get<std::vector<long long>>();
            if (s.y.size() != d || static_cast<int>(n.size()) != d)
                throw DataError("task '" + s.id + "' vectors must have length " + std::to_string(d));
            s.n.resize(d);
            for (int g = 0; g < d; ++g) {
                if (n[g] < 0) throw DataError("task '" + s.id + "' has a negative count");
                s.n[g] = static_cast<int>(n[g]);
                if (!std::isfinite(s.y[g])) throw DataError("task '" + s.id + "' has a non-finite mean");
            }
            s.sigma2 = tj.contains("sigma2") ? tj.at("sigma2").get<double>() : shared;
            if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2))
                throw DataError("task '" + s.id + "' needs a positive sigma2");
            if (tj.contains("group_variance")) {
                s.group_variance = vector_from_json(tj.at("group_variance"), "group_variance");
                if (s.group_variance.size() != d) throw DataError("group_variance must have length " + std::to_string(d));
                for (int g = 0; g < d; ++g)
                    if (s.n[g] > 0 && !(s.group_variance[g] > 0.0))
                        throw DataError("group_variance must be positive for populated groups");
            }
            file.tasks.push_back(std::move(s));
        }
        return file;
    });
}

Json subset_vector_to_json(const AttributeSpace& space, const Eigen::VectorXd& values) {
    return Json{{"subsets", subset_labels(space)}, {"values", vector_to_json(values)}};
}

Eigen::VectorXd subset_vector_from_json(const AttributeSpace& space, const Json& j) {
    const Eigen::VectorXd v = vector_from_json(j.is_object() ? member(j, "values") : j, "subset vector");
    if (v.size() != (1 << space.k()))
        throw DataError("subset vector must have length " + std::to_string(1 << space.k()));
    return v;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace suremap
