#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "poolcast/dataset.hpp"
#include "poolcast/model_io.hpp"
#include "poolcast/scoring.hpp"

namespace fs = std::filesystem;
using namespace poolcast;

namespace {

const fs::path kData = POOLCAST_TEST_DATA;

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("poolcast_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int status;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args, const std::string& env = "") {
    const fs::path out = scratch() / "stdout.txt";
    const fs::path err = scratch() / "stderr.txt";
    const std::string cmd = (env.empty() ? "" : env + " ") + std::string(POOLCAST_BINARY) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read_file(out), read_file(err)};
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("simulate, fit and predict round trip") {
    const std::string config = (kData / "stacking.json").string();
    REQUIRE(run("simulate --gen latent --config " + config + " --rows 1000 --seed 4 --out " + path("d.csv")).status ==
            0);
    REQUIRE(run("fit --data " + path("d.csv") + " --link ep --power 9 --seed 4 --out " + path("m.json")).status == 0);
    REQUIRE(run("predict --model " + path("m.json") + " --data " + path("d.csv") + " --out " + path("p.csv")).status ==
            0);
    const Predictions p = read_predictions(path("p.csv"));
    CHECK(p.forecast.size() == 1000);
    CHECK((p.forecast.array() > 0.0).all());
    CHECK((p.forecast.array() < 1.0).all());
    const ModelDocument doc = read_model(path("m.json"));
    CHECK(doc.model.link.power() == 9.0);
    CHECK(doc.training_rows == 1000);

    const Run s = run("score --preds " + path("p.csv") + " --base-rate 0.3");
    REQUIRE(s.status == 0);
    const PredictionSet preds(p.forecast, p.outcome);
    char expected[64];
    std::snprintf(expected, sizeof expected, "1000,%.6f,", mean_log_score(preds));
    CHECK(s.out.find(expected) != std::string::npos);

    const Run e = run("extremize-rate --preds " + path("p.csv") + " --prior 0.3");
    CHECK(e.status == 0);
    CHECK(e.out.rfind("rate,classified,excluded\n", 0) == 0);
}

TEST_CASE("power grid fit records the grid") {
    const std::string data = (kData / "cv_fixture.csv").string();
    REQUIRE(run("fit --data " + data + " --power-grid 1,2,4 --folds 5 --seed 2 --out " + path("g.json")).status == 0);
    const ModelDocument doc = read_model(path("g.json"));
    CHECK(doc.grid_results.size() == 3);
    CHECK(doc.model.link.kind() == LinkFamily::Kind::ExponentialPower);
    CHECK(run("fit --data " + data + " --link logistic --power-grid 1,2 --out " + path("x.json")).status == 2);
}

TEST_CASE("cv reproduces the golden report") {
    const std::string data = (kData / "cv_fixture.csv").string();
    for (const char* jobs : {"1", "2"}) {
        REQUIRE(run("cv --data " + data + " --seed 11 --jobs " + jobs + " --report " + path("r.md")).status == 0);
        CHECK(read_file(path("r.md")) == read_file(kData / "cv_golden.md"));
    }
    REQUIRE(run("cv --data " + data + " --seed 11 --methods avg,glm:ep4 --report " + path("r.csv")).status == 0);
    CHECK(read_file(path("r.csv")).rfind("method,ls,als,auc\navg,", 0) == 0);
}

TEST_CASE("plot data for the agreeing Beta/Bernoulli experts") {
    const Run r = run("plot-data --figure 1a");
    REQUIRE(r.status == 0);
    CHECK(r.out.find("\n0.75,0.75,0.75,0.83333333333333337,extremizes\n") != std::string::npos);
    CHECK(run("plot-data --figure 9z").status == 2);
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
    const std::string config = (kData / "stacking.json").string();
    REQUIRE(run("simulate --gen latent --config " + config + " --rows 5000 --seed 8 --out " + path("a.csv")).status ==
            0);
    REQUIRE(run("simulate --gen latent --config " + config + " --rows 5000 --seed 8 --jobs 4 --out " + path("b.csv"))
                .status == 0);
    CHECK(read_file(path("a.csv")) == read_file(path("b.csv")));
    for (const char* out : {"f1.json", "f2.json"})
        REQUIRE(run("fit --data " + path("a.csv") + " --power-grid 1,2 --folds 3 --seed 8 --out " + path(out)).status ==
                0);
    CHECK(read_file(path("f1.json")) == read_file(path("f2.json")));
}

TEST_CASE("exit codes") {
    CHECK(run("").status == 2);
    CHECK(run("cv --data x.csv --bogus").status == 2);
    CHECK(run("frobnicate").status == 2);
    CHECK(run("cv --data " + path("missing.csv")).status == 2);
    CHECK(run("cv --data " + (kData / "cv_fixture.csv").string() + " --report /no/such/dir/r.md").status == 2);

    std::ofstream(path("bad.csv")) << "y,p_a\n1,0.5\n2,0.5\n";
    const Run bad = run("cv --data " + path("bad.csv"));
    CHECK(bad.status == 3);
    CHECK(bad.err.find(":3: y must be 0 or 1") != std::string::npos);

    std::ofstream(path("sep.csv")) << "y,p_a\n0,0.1\n0,0.2\n0,0.3\n1,0.7\n1,0.8\n1,0.9\n";
    const Run sep = run("fit --data " + path("sep.csv") + " --out " + path("sep.json"));
    CHECK(sep.status == 4);
    CHECK(sep.err.find("separation") != std::string::npos);

    std::ofstream(path("other.csv")) << "y,p_b\n0,0.1\n1,0.7\n";
    CHECK(run("predict --model " + path("m.json") + " --data " + path("other.csv") + " --out " + path("o.csv"))
              .status == 3);

    CHECK(run("plot-data --figure 1a", "POOLCAST_LOG=loud").status == 2);
}

TEST_CASE("help lists defaults and logging is opt-in") {
    const Run h = run("cv --help");
    CHECK(h.status == 0);
    for (const char* flag : {"--folds INT [10]", "--seed UINT [0]", "--jobs INT:POSITIVE [1]",
                             "[experts,avg,olop,blop,logit,glm-grid]", "[1,2,3,4,6,9,12,16,25,40,64]"})
        CHECK(h.out.find(flag) != std::string::npos);
    const std::string data = (kData / "cv_fixture.csv").string();
    CHECK(run("cv --data " + data + " --methods avg --report " + path("q.md")).err.empty());
    const Run info = run("cv --data " + data + " --methods avg --report " + path("q.md"), "POOLCAST_LOG=info");
    CHECK(info.err.find("cross-validating 1 methods") != std::string::npos);
}
