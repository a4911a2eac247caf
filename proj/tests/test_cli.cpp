#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "per/io.hpp"
#include "per/random_models.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace per;
namespace fs = std::filesystem;

namespace {

const fs::path& work() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "per_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path(const std::string& name) { return (work() / name).string(); }

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const std::string& args) {
    const auto err_file = path("stderr.txt");
    const std::string cmd = std::string(PER_CIS_BINARY) + " " + args + " 2>" + err_file;
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream e(err_file);
    r.err.assign(std::istreambuf_iterator<char>(e), {});
    return r;
}

std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void write(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

// Synthetic separable-example CSV with observed columns only.
const std::string& separable_csv() {
    static const std::string csv = [] {
        write(path("syn.json"), "{}");
        const auto r = run("--seed 3 sample --synthetic " + path("syn.json") + " -n 20000 --out " + path("separable.csv"));
        REQUIRE(r.code == 0);
        return path("separable.csv");
    }();
    return csv;
}

} // namespace

TEST_CASE("help lists every subcommand") {
    const auto r = run("--help");
    CHECK(r.code == 0);
    for (const char* s : {"validate", "sample", "info", "bounds", "bootstrap", "cis", "bench", "pipeline"})
        CHECK(r.out.find(s) != std::string::npos);
}

TEST_CASE("usage errors exit 2 with an envelope") {
    const auto r = run("frobnicate");
    CHECK(r.code == 2);
    const auto j = Json::parse(r.err.substr(r.err.find("{\"error\"")));
    CHECK(j["error"]["code"] == 2);
    CHECK(run("").code == 2);
}

TEST_CASE("pipeline on the separable example") {
    write(path("seeds.json"), R"({"V_G": "good", "V_B": "bad"})");
    const auto r = run("pipeline --data " + separable_csv() + " --seeds " + path("seeds.json") + " --label Y --out-dir " +
                       path("pipe"));
    REQUIRE(r.code == 0);
    const auto labels = read_json_file(path("pipe/labels.json"));
    CHECK(labels["labels"]["V_G"] == "good");
    CHECK(labels["labels"]["V_B"] == "bad");
    CHECK(labels["labels"]["V_A1"] == "ambiguous");
    CHECK(labels["labels"]["V_A2"] == "ambiguous");
    const auto model = read_json_file(path("pipe/model.json"));
    CHECK(model["cis"]["columns"].size() == 2);
    CHECK(model["features"].size() == 3);
    const auto metrics = read_json_file(path("pipe/metrics.json"));
    CHECK(metrics["test"]["accuracy"].get<double>() > 0.8);
    const auto header = slurp(path("pipe/engineered.csv")).substr(0, 60);
    CHECK(header.find("cis_V_G_y0,cis_V_G_y1") != std::string::npos);
    CHECK_FALSE(fs::exists(path("pipe/error.json")));
}

TEST_CASE("pipeline outputs are byte-identical across runs") {
    write(path("seeds.json"), R"({"V_G": "good", "V_B": "bad"})");
    for (const char* dir : {"rep_a", "rep_b"})
        REQUIRE(run("--seed 5 pipeline --data " + separable_csv() + " --seeds " + path("seeds.json") + " --label Y --out-dir " +
                    path(dir))
                    .code == 0);
    for (const char* f : {"labels.json", "engineered.csv", "model.json", "metrics.json"})
        CHECK(slurp(path(std::string("rep_a/") + f)) == slurp(path(std::string("rep_b/") + f)));

    write(path("bench.json"), R"({"n_train": 1000, "n_test": 1000, "repetitions": 2,
                                 "sweep": [{"sigma_mg": 1, "sigma_mb": 1}, {"sigma_mg": 1, "sigma_mb": 8}]})");
    const auto a = run("--seed 2 bench synthetic --config " + path("bench.json"));
    const auto b = run("bench synthetic --config " + path("bench.json") + " --seed 2");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("runtime_seconds") == std::string::npos);
    const auto c = run("bench synthetic --seed 9 --config " + path("bench.json"));
    CHECK(c.out != a.out);
}

TEST_CASE("missing seeds file names the path") {
    const auto missing = path("no_such_seeds.json");
    const auto r = run("pipeline --data " + separable_csv() + " --seeds " + missing + " --label Y --out-dir " + path("fail"));
    CHECK(r.code == 2);
    CHECK(r.err.find(missing) != std::string::npos);
    const auto err = read_json_file(path("fail/error.json"));
    CHECK(err["error"]["code"] == 2);
    CHECK(err["error"]["stage"] == "load");
    CHECK(err["error"]["message"].get<std::string>().find(missing) != std::string::npos);
    CHECK_FALSE(fs::exists(path("fail/model.json")));
}

TEST_CASE("no ambiguous proxies skips CIS") {
    write(path("seeds.json"), R"({"V_G": "good", "V_B": "bad"})");
    const auto r = run("pipeline --data " + separable_csv() + " --seeds " + path("seeds.json") +
                       " --label Y --proxies V_G,V_B --out-dir " + path("noamb"));
    REQUIRE(r.code == 0);
    const auto model = read_json_file(path("noamb/model.json"));
    CHECK(model["cis"].is_null());
    CHECK(model["features"] == Json::array({"V_G"}));
    const auto notes = read_json_file(path("noamb/metrics.json"))["notes"];
    CHECK(notes.dump().find("CIS skipped") != std::string::npos);
}

TEST_CASE("validate, info, bounds and oracle bootstrap on the separable example") {
    write_json_file(path("separable_example_dsd.json"), to_json(separable_example_dsd()));
    write_json_file(path("separable_example_scm.json"), to_json(separable_example_scm()));

    const auto v = run("validate " + path("separable_example_dsd.json"));
    REQUIRE(v.code == 0);
    const auto vj = Json::parse(v.out);
    CHECK(vj["valid"] == true);
    CHECK(vj["proxies"]["ambiguous"] == Json::array({"V_A"}));

    // A round trip through the file format keeps the model.
    write_json_file(path("separable_example_scm2.json"), to_json(scm_from_json(read_json_file(path("separable_example_scm.json")))));
    CHECK(slurp(path("separable_example_scm.json")) == slurp(path("separable_example_scm2.json")));

    write(path("queries.json"), R"([{"kind": "mi", "a": ["Y"], "b": ["V_G"]},
                                    {"kind": "entropy", "a": "Y"},
                                    {"kind": "context_sensitivity", "m": "M_G", "x": ["V_G"]}])");
    const auto q = run("info --scm " + path("separable_example_scm.json") + " --queries " + path("queries.json"));
    REQUIRE(q.code == 0);
    const auto qj = Json::parse(q.out)["results"];
    REQUIRE(qj.size() == 3);
    CHECK(qj[0]["bits"].get<double>() > 0);
    CHECK(qj[1]["bits"].get<double>() > 0);

    write(path("badq.json"), R"([{"kind": "nope"}])");
    CHECK(run("info --scm " + path("separable_example_scm.json") + " --queries " + path("badq.json")).code == 2);

    const auto b = run("bounds --scm " + path("separable_example_scm.json"));
    REQUIRE(b.code == 0);
    for (const auto& rep : Json::parse(b.out))
        if (!rep["skipped"].get<bool>()) CHECK(rep["satisfied"] == true);

    write(path("seeds_va.json"), R"({"V_G": "good", "V_B": "bad"})");
    const auto o = run("bootstrap --scm " + path("separable_example_dsd.json") + " --seeds " + path("seeds_va.json"));
    REQUIRE(o.code == 0);
    const auto oj = Json::parse(o.out);
    CHECK(oj["labels"]["V_A"] == "ambiguous");
    CHECK(oj["mode"] == "oracle");

    const auto s = run("bootstrap --data " + separable_csv() + " --label Y --seeds " + path("seeds_va.json") + " --threads 1");
    REQUIRE(s.code == 0);
    CHECK(Json::parse(s.out)["labels"]["V_A2"] == "ambiguous");
}

TEST_CASE("cis subcommand writes its three artifacts") {
    write(path("spec.json"), R"({"target": "V_G", "source": ["V_A1", "V_A2"], "label": "Y"})");
    const auto r = run("cis --data " + separable_csv() + " --spec " + path("spec.json") + " --out-dir " + path("cis"));
    REQUIRE(r.code == 0);
    CHECK(read_json_file(path("cis/improvement.json"))["condition_met"] == true);
    const auto fs_ = isolation_from_json(read_json_file(path("cis/cis_model.json")));
    CHECK(fs_.columns.size() == 2);
    CHECK(slurp(path("cis/augmented.csv")).find("cis_V_G_y1") != std::string::npos);
}
