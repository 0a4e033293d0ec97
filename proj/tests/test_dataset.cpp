#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "suremap/dataset.hpp"
#include "suremap/error.hpp"
#include "suremap/io.hpp"
#include "suremap/prior.hpp"

using namespace suremap;

namespace {

Dataset parse(const std::string& text, const CsvOptions& options = {}) {
    std::istringstream in(text);
    return parse_csv(in, options);
}

std::string error_of(const std::string& text, const CsvOptions& options = {}) {
    try {
        parse(text, options);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("three-row fixture") {
    const auto data = parse("grp,value\nA,0.0\nA,1.0\nB,1.0\n");
    const auto tasks = summarize_dataset(data);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].y[0] == 0.5);
    CHECK(tasks[0].y[1] == 1.0);
    CHECK(tasks[0].n[0] == 2);
    CHECK(tasks[0].n[1] == 1);
    CHECK(tasks[0].sigma2 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tasks[0].id == "all");
}

TEST_CASE("header order, quoting and line endings") {
    const auto data = parse("value,\"age group\",sex\r\n1.5,\"18,24\",F\r\n2.5,25+,M\r\n\r\n3.0,\"say \"\"hi\"\"\",F");
    CHECK(data.space.k() == 2);
    CHECK(data.space.attribute(0).name == "age group");
    CHECK(data.space.attribute(0).levels == std::vector<std::string>{"18,24", "25+", "say \"hi\""});
    CHECK(data.space.attribute(1).levels == std::vector<std::string>{"F", "M"});
    CHECK(data.batch.size() == 3);
    CHECK(data.batch.group(2) == data.space.group_index(std::vector<int>{2, 0}));
}

TEST_CASE("levels are sorted so row order does not matter") {
    const auto a = parse("s,value\nz,1\na,2\nm,3\na,4\n");
    const auto b = parse("s,value\na,4\nm,3\na,2\nz,1\n");
    CHECK(a.space == b.space);
    const auto sa = summarize_dataset(a)[0], sb = summarize_dataset(b)[0];
    CHECK(sa.y == sb.y);
    CHECK(sa.n == sb.n);
    CHECK(sa.sigma2 == doctest::Approx(sb.sigma2).epsilon(1e-14));
}

TEST_CASE("malformed rows report their line") {
    CHECK(error_of("s,value\na,1\nb\n").find("line 3") != std::string::npos);
    CHECK(error_of("s,value\na,1\nb,abc\n").find("line 3") != std::string::npos);
    CHECK(error_of("s,value\na,1\n\nb,nan\n").find("line 4") != std::string::npos);
    CHECK(error_of("s,value\na,\"1\n").find("unterminated") != std::string::npos);
    CHECK(error_of("s,x\na,1\n").find("'value'") != std::string::npos);
    CHECK(error_of("s,s,value\na,b,1\n").find("duplicate") != std::string::npos);
    CHECK(error_of("").find("empty") != std::string::npos);
}

TEST_CASE("a fixed space rejects unknown levels and lists the known ones") {
    CsvOptions options;
    options.space = AttributeSpace({{"sex", {"F", "M"}}, {"age", {"young", "old"}}});
    const auto ok = parse("age,sex,value\nold,M,1\nyoung,F,2\n", options);
    CHECK(ok.space == *options.space);
    CHECK(ok.batch.group(0) == 3);
    CHECK(ok.batch.group(1) == 0);
    const std::string msg = error_of("age,sex,value\nold,X,1\n", options);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("F M") != std::string::npos);
    CHECK(error_of("sex,value\nF,1\n", options).find("attribute") != std::string::npos);
}

TEST_CASE("task column gives a shared sigma2") {
    const auto data = parse("task,g,value\nb,x,0\nb,x,1\nb,y,1\na,x,0\na,x,1\na,y,1\n");
    CHECK(data.task_ids() == std::vector<std::string>{"a", "b"});
    const auto tasks = summarize_dataset(data);
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].sigma2 == tasks[1].sigma2);
    // Residual sum 1 over 6 rows minus 4 nonempty groups.
    CHECK(tasks[0].sigma2 == doctest::Approx(0.5));
    CHECK(tasks[1].y[0] == 0.5);
}

TEST_CASE("CSV write and read round trip") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    Dataset data;
    data.space = AttributeSpace({{"a", {"p", "q,r"}}, {"b", {"1", "2", "3"}}});
    data.batch.task_names = {"t0", "t1"};
    for (int i = 0; i < 50; ++i) data.batch.add(i % 6, normal(rng), i % 2);
    std::ostringstream out;
    write_csv(out, data);
    CsvOptions options;
    options.space = data.space;
    const auto back = parse(out.str(), options);
    REQUIRE(back.batch.size() == data.batch.size());
    for (std::size_t i = 0; i < data.batch.size(); ++i) {
        CHECK(back.batch.value(i) == data.batch.value(i));
        CHECK(back.batch.group(i) == data.batch.group(i));
        CHECK(back.batch.task(i) == data.batch.task(i));
    }
}

TEST_CASE("summary JSON round trip is exact") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    const AttributeSpace space({{"sex", {"F", "M"}}, {"age", {"a", "b", "c"}}});
    std::vector<TaskSummary> tasks(3);
    for (int t = 0; t < 3; ++t) {
        tasks[t].id = "task" + std::to_string(t);
        tasks[t].y.resize(6);
        tasks[t].n.resize(6);
        tasks[t].sigma2 = 0.123456789012345678;
        for (int g = 0; g < 6; ++g) {
            tasks[t].n[g] = (g + t) % 4;
            tasks[t].y[g] = tasks[t].n[g] > 0 ? normal(rng) / 3.0 : 0.0;
        }
    }
    tasks[2].group_variance = Eigen::VectorXd::Constant(6, 0.1 / 3.0);
    const std::string text = summaries_to_json(space, tasks).dump();
    const auto file = summaries_from_json(Json::parse(text));
    CHECK(file.space == space);
    REQUIRE(file.tasks.size() == 3);
    for (int t = 0; t < 3; ++t) {
        CHECK(file.tasks[t].id == tasks[t].id);
        CHECK(file.tasks[t].y == tasks[t].y);
        CHECK(file.tasks[t].n == tasks[t].n);
        CHECK(file.tasks[t].sigma2 == tasks[t].sigma2);
    }
    CHECK(file.tasks[2].group_variance == tasks[2].group_variance);
    CHECK(file.tasks[0].group_variance.size() == 0);
}

TEST_CASE("summary JSON validation") {
    const Json base = Json::parse(R"({"attributes":[{"name":"g","levels":["a","b"]}],
        "tasks":[{"id":"x","y":[1,2],"n":[1,1]}],"sigma2":1})");
    CHECK_NOTHROW(summaries_from_json(base));
    Json bad = base;
    bad["tasks"][0]["y"] = Json::array({1});
    CHECK_THROWS_AS(summaries_from_json(bad), DataError);
    bad = base;
    bad["sigma2"] = -1;
    CHECK_THROWS_AS(summaries_from_json(bad), DataError);
    bad = base;
    bad.erase("tasks");
    CHECK_THROWS_AS(summaries_from_json(bad), DataError);
    bad = base;
    bad["tasks"][0]["n"] = Json::array({1, -2});
    CHECK_THROWS_AS(summaries_from_json(bad), DataError);
}

TEST_CASE("subset vectors serialize with labels") {
    const AttributeSpace space({{"sex", {"F", "M"}}, {"age", {"a", "b"}}});
    const Eigen::VectorXd v = (Eigen::VectorXd(4) << 1, 2, 3, 4).finished();
    const Json j = subset_vector_to_json(space, v);
    CHECK(j["subsets"] == Json::array({"{}", "{sex}", "{age}", "{sex,age}"}));
    CHECK(subset_vector_from_json(space, j) == v);
    CHECK_THROWS_AS(subset_vector_from_json(space, Json::array({1, 2})), DataError);
}

TEST_CASE("numbers format to the shortest round-trip text") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(-1.5e-20) == "-1.5e-20");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("AUC agrees with pair counting") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coarse(0, 5), label(0, 1);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 25; ++i) {
            scores.push_back(coarse(rng) / 5.0);  // frequent ties
            labels.push_back(label(rng));
        }
        labels[0] = 0;
        labels[1] = 1;
        double wins = 0.0;
        int pairs = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            for (std::size_t j = 0; j < scores.size(); ++j)
                if (labels[i] == 1 && labels[j] == 0) {
                    ++pairs;
                    wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
                }
        CHECK(auc_value(scores, labels) == doctest::Approx(wins / pairs).epsilon(1e-14));
    }
    CHECK_THROWS_AS(auc_value(std::vector<double>{1, 2}, std::vector<int>{1, 1}), DomainError);
}

TEST_CASE("AUC summaries use Mann-Whitney variances") {
    const auto data = parse("g,label,score\na,0,0.1\na,1,0.9\na,1,0.4\na,0,0.5\na,1,0.2\nb,1,0.3\nb,1,0.8\n",
                            CsvOptions{std::nullopt, true});
    CHECK(data.is_auc());
    const auto tasks = summarize_dataset(data);
    REQUIRE(tasks.size() == 1);
    // Group a: positives {0.9,0.4,0.2} versus negatives {0.1,0.5}: wins 2+1+1 of 6.
    CHECK(tasks[0].y[0] == doctest::Approx(4.0 / 6.0));
    CHECK(tasks[0].n[0] == 5);
    CHECK(tasks[0].group_variance[0] == doctest::Approx(auc_group_variance(5, 2, 3)));
    CHECK(tasks[0].n[1] == 0);  // single class
    CHECK(tasks[0].precision()[0] == doctest::Approx(1.0 / auc_group_variance(5, 2, 3)));
    const auto truth = dataset_truth(data, 5);
    CHECK(truth[0].included[0]);
    CHECK(!truth[0].included[1]);
    CHECK(error_of("g,label,score\na,2,0.1\n", CsvOptions{std::nullopt, true}).find("label") != std::string::npos);
}

TEST_CASE("dataset selection keeps tasks and labels") {
    const auto data = parse("task,g,label,score\nu,a,0,0.1\nv,a,1,0.2\nu,b,1,0.3\n", CsvOptions{std::nullopt, true});
    const std::vector<std::size_t> rows = {2, 2, 1};
    const auto sub = data.select(rows);
    CHECK(sub.batch.size() == 3);
    CHECK(sub.labels == std::vector<int>{1, 1, 1});
    CHECK(sub.task_ids() == data.task_ids());
    CHECK(data.rows_by_task() == std::vector<std::vector<std::size_t>>{{0, 2}, {1}});
    const auto counts = group_counts(data);
    CHECK(counts[0][0] == 1);
    CHECK(counts[0][1] == 1);
}
