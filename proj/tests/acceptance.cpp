// Acceptance suite: one PASS/FAIL line per criterion; exit status counts failures.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "poolcast/conjugate_pairs.hpp"
#include "poolcast/dataset.hpp"
#include "poolcast/distributions.hpp"
#include "poolcast/errors.hpp"
#include "poolcast/evaluation.hpp"
#include "poolcast/fitting.hpp"
#include "poolcast/gp_ensemble.hpp"
#include "poolcast/random.hpp"
#include "poolcast/scoring.hpp"
#include "poolcast/simulation.hpp"
#include "poolcast/special_functions.hpp"

namespace fs = std::filesystem;
using namespace poolcast;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

std::string fix(double x, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("poolcast_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(POOLCAST_BINARY) + " " + args + " 2>/dev/null";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome exact_oracle_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng rng(1001);
    double worst = 0.0;
    int checks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = 1.0 + static_cast<double>(rng.below(5));
        const double b = 1.0 + static_cast<double>(rng.below(5));
        const int k = 1 + static_cast<int>(rng.below(4));
        std::vector<int> sizes;
        for (int i = 0; i < k; ++i) sizes.push_back(1 + static_cast<int>(rng.below(5)));
        const int ns = static_cast<int>(rng.below(4));
        const int ts = static_cast<int>(rng.below(static_cast<std::uint64_t>(ns + 1)));
        Eigen::VectorXd p(k);
        for (int i = 0; i < k; ++i) {
            const int ti = static_cast<int>(rng.below(static_cast<std::uint64_t>(sizes[static_cast<std::size_t>(i)] + 1)));
            p(i) = (a + ti + ts) / (a + b + sizes[static_cast<std::size_t>(i)] + ns);
        }
        const auto pair = ConjugatePair::beta_bernoulli(a, b);
        const SampleDesign design(sizes, ns);
        const ExpertReports reports(p);
        const double oracle = exact_posterior_oracle(pair, design, reports);
        if (ns == 0) {
            worst = std::max(worst, std::abs(aggregate_private(pair, design, reports) - oracle));
            ++checks;
        }
        worst = std::max(worst, std::abs(aggregate_shared_enumerate(pair, design, reports) - oracle));
        ++checks;
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 60.0,
            "1000 configurations, " + std::to_string(checks) + " comparisons, max error " + sci(worst) + ", " +
                fix(secs, 2) + " s"};
}

Outcome example_five() {
    const auto pair = ConjugatePair::beta_bernoulli(1, 1);
    const SampleDesign design({1, 1}, 1);
    std::string detail;
    bool pass = true;
    for (const auto& [p2, expected] : std::vector<std::pair<double, double>>{{0.25, 0.4}, {0.5, 0.6}}) {
        try {
            const double got = aggregate_shared_enumerate(pair, design, {0.75, p2});
            const bool ok = std::abs(got - expected) <= 4 * std::numeric_limits<double>::epsilon();
            pass = pass && ok;
            detail += "p2=" + fix(p2, 2) + " -> " + fix(got, 15) + (ok ? " ok; " : " wrong; ");
        } catch (const Error& e) {
            pass = false;
            detail += "p2=" + fix(p2, 2) + " -> " + e.what() + "; ";
        }
    }
    return {pass, detail};
}

Outcome shared_normal_vs_quadrature() {
    CounterRng rng(1003);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto pair = ConjugatePair::normal_normal(-2.0 + 4.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(),
                                                       0.2 + 2.0 * rng.uniform());
        const int k = 1 + static_cast<int>(rng.below(4));
        std::vector<int> sizes;
        for (int i = 0; i < k; ++i) sizes.push_back(1 + static_cast<int>(rng.below(6)));
        const SampleDesign d(sizes, 1 + static_cast<int>(rng.below(4)));
        Eigen::VectorXd p(k);
        for (int i = 0; i < k; ++i) p(i) = 0.05 + 0.9 * rng.uniform();
        const ExpertReports r(p);
        worst = std::max(worst, std::abs(aggregate_shared_normal(pair, d, r) - aggregate_shared_quadrature(pair, d, r)));
    }
    return {worst <= 1e-6, "100 configurations, max difference " + sci(worst)};
}

Outcome link_bridge() {
    CounterRng rng(1004);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto pair = ConjugatePair::normal_normal(-2.0 + 4.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(),
                                                       0.2 + 2.0 * rng.uniform());
        const int k = 1 + static_cast<int>(rng.below(4));
        std::vector<int> sizes;
        for (int i = 0; i < k; ++i) sizes.push_back(1 + static_cast<int>(rng.below(8)));
        const SampleDesign d(sizes);
        Eigen::VectorXd p(k);
        for (int i = 0; i < k; ++i) p(i) = 0.02 + 0.96 * rng.uniform();
        const ExpertReports r(p);
        const auto w = derive_weights(information_model_from_pair(pair, d));
        worst = std::max(worst, std::abs(aggregate_normal_link(w, prior_predictive(pair), r) - aggregate_private(pair, d, r)));
    }
    return {worst <= 1e-8, "200 cases, max difference " + sci(worst)};
}

Outcome exchangeable_weights() {
    const auto w = derive_weights(exchangeable_model<double>(2, 0.75));
    const auto w0 = derive_weights(exchangeable_model<double>(2, 0.0));
    const bool pass = std::abs(w.beta(0) - 0.5714) <= 5e-4 && std::abs(w.beta(1) - 0.5714) <= 5e-4 &&
                      fix(w.beta(0), 2) == "0.57" && w0.beta(0) == 1.0 && w0.beta(1) == 1.0;
    return {pass, "rho=0.75: beta=" + fix(w.beta(0), 6) + " (shown " + fix(w.beta(0), 2) + "); rho=0: beta=" +
                      fix(w0.beta(0), 17)};
}

Outcome link_checkpoints() {
    const auto ep2 = LinkFamily::exponential_power(2.0);
    double cdf_err = 0.0;
    double q_err = 0.0;
    for (int i = 0; i <= 1600; ++i) {
        const double z = -8.0 + 0.01 * i;
        cdf_err = std::max(cdf_err, std::abs(link_cdf(ep2, z) - normal_cdf(z)));
        const double p = normal_cdf(z);
        if (p > 0.0 && p < 1.0 - 1e-15) q_err = std::max(q_err, std::abs(link_quantile(ep2, p) - normal_quantile(p)));
    }
    CounterRng rng(1006);
    double ens_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng.below(4));
        const double lo = k > 1 ? -1.0 / (k - 1) : -0.9;
        const auto w = derive_weights(
            exchangeable_model<double>(k, lo + (1 - lo) * (0.05 + 0.9 * rng.uniform()), 0.5 + rng.uniform()));
        Eigen::VectorXd p(k);
        for (int i = 0; i < k; ++i) p(i) = 0.01 + 0.98 * rng.uniform();
        const double p0 = 0.05 + 0.9 * rng.uniform();
        ens_err = std::max(ens_err, std::abs(aggregate_ep_link(w, 2.0, p0, ExpertReports(p)) -
                                             aggregate_normal_link(w, p0, ExpertReports(p))));
    }
    const auto nn = ConjugatePair::normal_normal(-1.25, 1, 1);
    const double f2 = predictive_prob(nn, 2, nn.tau1());
    const bool pass = cdf_err <= 1e-10 && q_err <= 1e-10 && ens_err <= 1e-10 && std::abs(f2 - 0.3591) <= 5e-4;
    return {pass, "cdf " + sci(cdf_err) + ", quantile " + sci(q_err) + ", ensemble " + sci(ens_err) +
                      ", F_2(-1.25) = " + fix(f2, 6)};
}

Outcome always_extremizes() {
    CounterRng rng(1007);
    int violations = 0;
    int classified = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const double a = 0.5 + 4.5 * rng.uniform();
        const double b = 0.5 + 4.5 * rng.uniform();
        const auto pair = ConjugatePair::beta_bernoulli(a, b);
        const int k = 2 + static_cast<int>(rng.below(4));
        const int n = 1 + static_cast<int>(rng.below(6));
        Eigen::VectorXd p(k);
        for (int i = 0; i < k; ++i)
            p(i) = (a + static_cast<double>(rng.below(static_cast<std::uint64_t>(n + 1)))) / (a + b + n);
        const ExpertReports reports(p);
        const double p0 = prior_predictive(pair);
        const double pbar = reports.mean();
        if (std::abs(pbar - p0) <= 1e-12) continue;
        const double agg =
            aggregate_private(pair, SampleDesign(std::vector<int>(static_cast<std::size_t>(k), n)), reports);
        ++classified;
        if (classify_extremizing(agg, pbar, p0) != Extremizing::Extremizes) ++violations;
    }
    return {violations == 0,
            "10000 report vectors, " + std::to_string(classified) + " with p_bar != p0, " +
                std::to_string(violations) + " violations"};
}

Outcome glm_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    FittedAggregator truth;
    truth.link = LinkFamily::exponential_power(2.0);
    truth.intercept = 0.05;
    truth.coefficients = Eigen::Vector2d(0.4, 0.6);
    truth.names = {"e1", "e2"};
    const TrainingSet d = simulate_fitted(FittedGenerator{truth}, 50000, 1008).training();
    const FittedAggregator m = fit_glm(truth.link, d);
    double coef_err = std::abs(m.intercept - truth.intercept);
    for (int i = 0; i < 2; ++i) coef_err = std::max(coef_err, std::abs(m.coefficients(i) - truth.coefficients(i)));

    const GlmObjective f(truth.link, d, 1e-9);
    CounterRng rng(1018);
    double grad_err = 0.0;
    for (int point = 0; point < 20; ++point) {
        const Eigen::VectorXd x = testgen::random_point(rng, 3, 1.0);
        Eigen::VectorXd g;
        f(x, &g);
        const Eigen::VectorXd fd = testgen::numeric_gradient(f, x, 1e-6);
        for (Eigen::Index i = 0; i < 3; ++i)
            grad_err = std::max(grad_err, std::abs(g(i) - fd(i)) / std::max(std::abs(fd(i)), 1e-2));
    }
    const double secs = seconds_since(t0);
    return {coef_err <= 0.05 && grad_err <= 1e-6 && secs < 120.0,
            "max coefficient error " + fix(coef_err, 4) + ", max relative gradient error " + sci(grad_err) + ", " +
                fix(secs, 2) + " s"};
}

Outcome power_selection() {
    std::string detail;
    bool pass = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LatentGenerator gen{testgen::stacking_model(), LinkFamily::normal()};
        const TrainingSet d = simulate_latent(gen, 4000, 1090 + seed).training();
        const PowerSelection sel = select_power(PowerGrid{}, d, split_folds(d.rows(), 10, seed));
        double best = std::numeric_limits<double>::infinity();
        double at2 = std::numeric_limits<double>::infinity();
        for (const GridPoint& g : sel.grid) {
            if (!g.mean_oof_ls) continue;
            best = std::min(best, *g.mean_oof_ls);
            if (g.power == 2.0) at2 = *g.mean_oof_ls;
        }
        const double gap = at2 - best;
        pass = pass && gap <= 0.002;
        detail += (seed > 1 ? ", " : "") + sci(gap);
    }
    return {pass, "LS(2) - min LS over 5 seeds: " + detail};
}

Outcome scoring_fixtures() {
    const double ls = log_score(0.5, 1);
    const double als = asym_log_score(0.9, 1, 0.5);
    const double a = auc(PredictionSet(Eigen::Vector4d(0.1, 0.4, 0.35, 0.8), Eigen::Vector4i(0, 0, 1, 1)));
    bool proper = true;
    for (int qi = 1; qi < 100; ++qi) {
        const double q = qi / 100.0;
        int best = 0;
        double best_val = std::numeric_limits<double>::infinity();
        for (int pi = 1; pi < 100; ++pi) {
            const double p = pi / 100.0;
            const double expected = q * log_score(p, 1) + (1 - q) * log_score(p, 0);
            if (expected < best_val) {
                best_val = expected;
                best = pi;
            }
        }
        proper = proper && best == qi;
    }
    const bool pass = std::abs(ls - 0.6931) <= 1e-4 && std::abs(als - 0.8480) <= 1e-4 && a == 0.75 && proper;
    return {pass, "LS " + fix(ls, 6) + ", ALS " + fix(als, 6) + ", AUC " + fix(a, 4) +
                      (proper ? ", propriety grid ok" : ", propriety grid violated")};
}

Outcome stacking_ordering() {
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LatentGenerator gen{testgen::stacking_model(), LinkFamily::normal()};
        const TrainingSet d = simulate_latent(gen, 2000, 1110 + seed, {"rlr", "rf", "xgb"}).training();
        CvOptions opts;
        opts.fit.seed = seed;
        const ScoreTable t = cross_validate(d, parse_methods("avg,glm-grid", d.names()), split_folds(d.rows(), 10, seed),
                                            opts);
        const double avg = *t.methods[0].ls;
        const double grid = *t.methods[1].ls;
        wins += grid <= avg;
        detail += (seed > 1 ? "; " : "") + fix(grid, 4) + " vs " + fix(avg, 4);
    }
    return {wins >= 4, std::to_string(wins) + "/5 seeds, glm-grid vs avg LS: " + detail};
}

Outcome cv_determinism() {
    const fs::path data = fs::path(POOLCAST_TEST_DATA) / "cv_fixture.csv";
    std::vector<std::string> reports;
    for (const char* jobs : {"1", "1", "4"}) {
        const fs::path out = scratch() / ("report_" + std::to_string(reports.size()) + ".md");
        if (run_cli("cv --data " + data.string() + " --seed 5 --jobs " + jobs + " --report " + out.string()) != 0)
            return {false, "cv exited with an error"};
        reports.push_back(read_file(out));
    }
    const bool pass = !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2];
    return {pass, "three runs (jobs 1, 1, 4), " + std::to_string(reports[0].size()) + " bytes each, " +
                      (pass ? "identical" : "different")};
}

Outcome table_layout() {
    // The documented base-model schema: y plus one p_ column per base model.
    LatentGenerator gen{testgen::stacking_model(), LinkFamily::normal()};
    Dataset d = simulate_latent(gen, 800, 1130, {"rlr", "rf", "xgb"});
    d.oracle_names.clear();
    d.oracle.resize(d.rows(), 0);
    const fs::path data = scratch() / "base_models.csv";
    write_dataset(data, d);
    const fs::path out = scratch() / "table.md";
    if (run_cli("cv --data " + data.string() + " --report " + out.string()) != 0) return {false, "cv failed"};
    const std::string report = read_file(out);

    std::istringstream lines(report);
    std::vector<std::string> rows;
    bool header = false;
    for (std::string line; std::getline(lines, line);) {
        if (line == "| Method | LS | ALS | AUC |") header = true;
        if (line.rfind("| p_", 0) == 0 || line.rfind("| avg |", 0) == 0 || line.rfind("| olop |", 0) == 0 ||
            line.rfind("| blop |", 0) == 0 || line.rfind("| logit |", 0) == 0 || line.rfind("| glm-grid |", 0) == 0) {
            rows.push_back(line.substr(2, line.find(" |", 2) - 2));
            const auto cells = std::count(line.begin(), line.end(), '|');
            if (cells != 5) return {false, "row '" + line + "' does not have 3 metric cells"};
        }
    }
    const std::vector<std::string> expected{"p_rlr", "p_rf", "p_xgb", "avg", "olop", "blop", "logit", "glm-grid"};
    const bool summary = report.find("| Power parameter |") != std::string::npos &&
                         report.find("| Observations | 800 |") != std::string::npos;
    const bool pass = header && rows == expected && summary;
    std::string got;
    for (const auto& r : rows) got += (got.empty() ? "" : ",") + r;
    return {pass, "rows " + got + (summary ? ", final-fit summary present" : ", summary missing")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exact-oracle suite", exact_oracle_suite},
        {"shared Beta/Bernoulli checkpoint", example_five},
        {"shared normal closed form vs quadrature", shared_normal_vs_quadrature},
        {"link ensemble vs conjugate normal ensemble", link_bridge},
        {"exchangeable weights", exchangeable_weights},
        {"link checkpoints", link_checkpoints},
        {"exchangeable Beta/Bernoulli ensembles extremize", always_extremizes},
        {"GLM recovery and gradients", glm_recovery},
        {"power selection", power_selection},
        {"scoring fixtures", scoring_fixtures},
        {"stacking ordering", stacking_ordering},
        {"cv determinism", cv_determinism},
        {"score table layout", table_layout},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    std::error_code ec;
    fs::remove_all(scratch(), ec);
    return failures == 0 ? 0 : 1;
}
