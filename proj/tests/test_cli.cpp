#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "suremap/cli.hpp"
#include "suremap/io.hpp"

using namespace suremap;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("suremap_cli_test_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

const std::string kFixture = "grp,value\nA,0.0\nA,1.0\nB,1.0\n";

}  // namespace

TEST_CASE("summarize the three-row fixture") {
    TempDir dir;
    const auto r = run({"summarize", dir.file("f.csv", kFixture)});
    REQUIRE(r.code == 0);
    const Json j = Json::parse(r.out);
    CHECK(j["tasks"][0]["y"] == Json::array({0.5, 1.0}));
    CHECK(j["tasks"][0]["n"] == Json::array({2, 1}));
    CHECK(j["sigma2"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("summarize with a task column shares sigma2") {
    TempDir dir;
    const auto r = run({"summarize", "--input",
                        dir.file("f.csv", "task,g,value\nu,a,0\nu,a,1\nu,b,1\nv,a,0\nv,a,1\nv,b,1\n")});
    REQUIRE(r.code == 0);
    const Json j = Json::parse(r.out);
    CHECK(j["tasks"].size() == 2);
    CHECK(!j["tasks"][0].contains("sigma2"));
    CHECK(j["sigma2"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("summary output reloads to the same summaries") {
    TempDir dir;
    std::string csv = "sex,age,task,value\n";
    for (int i = 0; i < 40; ++i)
        csv += std::string(i % 2 ? "F" : "M") + "," + std::to_string(i % 3) + ",t" + std::to_string(i % 2) + "," +
               std::to_string(0.01 * i * i - 0.3) + "\n";
    const auto path = dir.file("d.csv", csv);
    const auto r = run({"summarize", path, "--output", dir.path("s.json")});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto file = summaries_from_json(read_json_file(dir.path("s.json")));
    const auto again = summaries_from_json(Json::parse(summaries_to_json(file.space, file.tasks).dump()));
    for (std::size_t t = 0; t < file.tasks.size(); ++t) {
        CHECK(again.tasks[t].y == file.tasks[t].y);
        CHECK(again.tasks[t].n == file.tasks[t].n);
        CHECK(again.tasks[t].sigma2 == file.tasks[t].sigma2);
    }
}

TEST_CASE("summarize errors") {
    TempDir dir;
    auto r = run({"summarize", dir.file("bad.csv", "g,value\na,1\nb,oops\n")});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 3") != std::string::npos);
    const auto space = dir.file("space.json", R"({"attributes":[{"name":"g","levels":["a","b"]}]})");
    r = run({"summarize", dir.file("unk.csv", "g,value\na,1\nc,2\nb,3\n"), "--space", space});
    CHECK(r.code == 1);
    CHECK(r.err.find("known levels: a b") != std::string::npos);
    r = run({"summarize", dir.path("missing.csv")});
    CHECK(r.code == 1);
    r = run({"summarize", dir.file("flat.csv", "g,value\na,0.7\na,0.7\nb,0.7\nb,0.7\nb,0.7\n")});
    CHECK(r.code == 0);  // zero variance is floored
    r = run({"summarize", dir.file("one.csv", "g,value\na,1\nb,2\n")});
    CHECK(r.code == 1);
    CHECK(r.err.find("degenerate") != std::string::npos);
    r = run({"summarize", dir.path("one.csv"), "--fallback-sigma2", "2"});
    CHECK(r.code == 0);
    CHECK(Json::parse(r.out)["sigma2"] == 2.0);
}

TEST_CASE("estimate baselines") {
    TempDir dir;
    const auto summary = dir.file("s.json", run({"summarize", dir.file("f.csv", kFixture)}).out);
    auto r = run({"estimate", summary, "--method", "pooled"});
    REQUIRE(r.code == 0);
    const Json j = Json::parse(r.out);
    CHECK(j["method"] == "pooled");
    CHECK(j["tasks"][0]["mu_hat"][0].get<double>() == doctest::Approx(2.0 / 3.0));
    CHECK(j["tasks"][0]["mu_hat"][1].get<double>() == doctest::Approx(2.0 / 3.0));
    r = run({"estimate", summary, "--method", "naive", "--format", "csv"});
    CHECK(r.out == "task,grp,mu_hat\nall,A,0.5\nall,B,1\n");
}

TEST_CASE("estimate usage errors exit with 2") {
    TempDir dir;
    const auto summary = dir.file("s.json", run({"summarize", dir.file("f.csv", kFixture)}).out);
    CHECK(run({"estimate", summary, "--method", "naive", "--variant", "metamap"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "pooled", "--max-order", "0"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "suremap", "--fallback-pooled"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "naive", "--verify-oracle"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "magic"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "suremap", "--max-order", "5"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "mt-suremap", "--variant", "other"}).code == 2);
    CHECK(run({"estimate", summary}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"estimate", summary, "--method", "naive", "--format", "xml"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("suremap restriction and fit fields") {
    TempDir dir;
    const auto sim = dir.file("sim.json", run({"simulate", "--seed", "4"}).out);
    auto r = run({"estimate", sim, "--method", "suremap", "--max-order", "0"});
    REQUIRE(r.code == 0);
    const Json j = Json::parse(r.out);
    for (const auto& task : j["tasks"]) {
        const auto tau2 = task["tau2_hat"]["values"];
        CHECK(tau2[1] == 0.0);
        CHECK(tau2[2] == 0.0);
        CHECK(task.contains("objective"));
        CHECK(task["status"].is_string());
    }
    CHECK(j["tasks"][0]["tau2_hat"]["subsets"] == Json::array({"{}", "{a1}", "{a2}", "{a1,a2}"}));
}

TEST_CASE("mt-suremap oracle cross-check") {
    TempDir dir;
    const auto sim = dir.file("sim.json", run({"simulate", "--seed", "8"}).out);
    auto r = run({"estimate", sim, "--method", "mt-suremap", "--verify-oracle"});
    REQUIRE(r.code == 0);
    Json j = Json::parse(r.out);
    CHECK(j["oracle"]["max_discrepancy"].get<double>() <= 1e-6);
    CHECK(j["variant"] == "metamap");
    CHECK(j.contains("upsilon2_hat"));
    CHECK(j["theta_hat"].size() == 6);
    r = run({"estimate", sim, "--method", "suremap", "--verify-oracle"});
    REQUIRE(r.code == 0);
    j = Json::parse(r.out);
    for (const auto& task : j["tasks"]) CHECK(task["oracle"]["max_discrepancy"].get<double>() <= 1e-6);
    CHECK(run({"estimate", sim, "--method", "mt-suremap", "--variant", "suresolve", "--verify-oracle"}).code == 2);
    r = run({"estimate", sim, "--method", "mt-suremap", "--variant", "suresolve", "--allow-negative-center"});
    REQUIRE(r.code == 0);
    CHECK(!Json::parse(r.out).contains("upsilon2_hat"));
}

TEST_CASE("bock center file") {
    TempDir dir;
    const auto sim = dir.file("sim.json", run({"simulate"}).out);
    const auto center = dir.file("c.json", "[1,1,1,1,1,1]");
    CHECK(run({"estimate", sim, "--method", "bock", "--center", center}).code == 0);
    CHECK(run({"estimate", sim, "--method", "bock", "--center", dir.file("short.json", "[1]")}).code == 1);
}

TEST_CASE("benchmark output is deterministic across runs and threads") {
    TempDir dir;
    const auto rows = dir.file("rows.csv", run({"simulate", "--seed", "2", "--format", "csv", "--spec",
                                                dir.file("spec.json", R"({"tasks":3,"n_min":30,"n_max":60})")})
                                               .out);
    const std::vector<std::string> base = {"benchmark", rows, "--methods", "naive,mt-suremap,suremap",
                                           "--rates", "0.5,0.2", "--trials", "4", "--threshold", "30"};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return run(args);
    };
    const auto a = with({"--threads", "1", "--csv", dir.path("a.csv")});
    const auto b = with({"--threads", "1"});
    const auto c = with({"--threads", "8", "--csv", dir.path("c.csv")});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    std::ifstream fa(dir.path("a.csv")), fc(dir.path("c.csv"));
    std::stringstream sa, sc;
    sa << fa.rdbuf();
    sc << fc.rdbuf();
    CHECK(sa.str() == sc.str());
    CHECK(sa.str().rfind("method,rate,trial,metric_value\n", 0) == 0);
    const Json j = Json::parse(a.out);
    CHECK(j["results"][0]["rate"] == 0.2);  // rates are sorted
    CHECK(with({"--format", "csv"}).out == sa.str());
    CHECK(with({"--methods", "naive,bogus"}).code == 2);
    CHECK(with({"--variant", "suresolve"}).code == 0);
    CHECK(run({"benchmark", rows, "--methods", "naive", "--rates", "0.5", "--variant", "metamap"}).code == 2);
    CHECK(run({"benchmark", rows, "--methods", "naive", "--rates", "0.5", "--threshold", "100000"}).code == 1);
}

TEST_CASE("simulate outputs") {
    auto r = run({"simulate", "--seed", "1"});
    REQUIRE(r.code == 0);
    const Json j = Json::parse(r.out);
    CHECK(j["tasks"].size() == 10);
    CHECK(j["truth"]["mu"].size() == 10);
    CHECK(run({"simulate", "--seed", "1"}).out == r.out);
    CHECK(run({"simulate", "--seed", "2"}).out != r.out);
    TempDir dir;
    CHECK(run({"simulate", "--spec", dir.file("bad.json", R"({"tasks":0})")}).code == 2);
    CHECK(run({"simulate", "--spec", dir.file("broken.json", "{")}).code == 1);
    const auto csv = run({"simulate", "--format", "csv"}).out;
    CHECK(csv.rfind("a1,a2,task,value\n", 0) == 0);
}

TEST_CASE("ablate commands") {
    auto r = run({"ablate", "--sweep", "alpha", "--values", "0,1.5", "--methods", "naive"});
    CHECK(r.code == 2);
    r = run({"ablate", "--sweep", "max-order", "--values", "-1,0,2", "--methods", "suremap", "--trials", "3",
             "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("sweep,value,method,mean,ci_halfwidth,failures\n", 0) == 0);
    r = run({"ablate", "--sweep", "tasks", "--values", "2,3", "--methods", "mt-suremap,naive", "--trials", "3"});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["rows"].size() == 4);
    TempDir dir;
    const auto data = dir.file("d.csv", "g,value\na,1\na,2\nb,3\nb,5\n");
    CHECK(run({"ablate", "--sweep", "tasks", "--values", "2", "--methods", "naive", "--input", data}).code == 2);
    CHECK(run({"ablate", "--sweep", "max-order", "--values", "0", "--methods", "suremap", "--max-order", "1"}).code ==
          2);
    r = run({"ablate", "--sweep", "max-order", "--values", "0,1", "--methods", "suremap", "--input", data,
             "--threshold", "2", "--trials", "2"});
    CHECK(r.code == 0);
}
