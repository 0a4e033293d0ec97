#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "suremap/model.hpp"

namespace suremap {

using Json = nlohmann::ordered_json;

// Shortest decimal text that reads back to the same double; "nan" and
// "inf"/"-inf" for non-finite values.
std::string format_number(double x);

Json space_to_json(const AttributeSpace& space);
// Accepts {"attributes": [...]} or the bare attribute array.
AttributeSpace space_from_json(const Json& j);

// {"attributes": [...], "tasks": [{"id", "y", "n"}...], "sigma2": s}. A task
// whose sigma2 differs from the first task's also carries its own "sigma2";
// per-group observation variances appear as "group_variance".
Json summaries_to_json(const AttributeSpace& space, std::span<const TaskSummary> tasks);

struct SummaryFile {
    AttributeSpace space;
    std::vector<TaskSummary> tasks;
};

SummaryFile summaries_from_json(const Json& j);

// {"subsets": ["{}", "{a}", ...], "values": [...]} in ascending-mask order.
Json subset_vector_to_json(const AttributeSpace& space, const Eigen::VectorXd& values);
Eigen::VectorXd subset_vector_from_json(const AttributeSpace& space, const Json& j);

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& what);

Json read_json_file(const std::string& path);
// Writes to `path`, or to standard output when the path is empty or "-".
void write_text(const std::string& path, const std::string& text);

}  // namespace suremap
