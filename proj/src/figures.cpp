#include "poolcast/figures.hpp"

#include <ostream>

#include "poolcast/conjugate_pairs.hpp"
#include "poolcast/dataset.hpp"
#include "poolcast/errors.hpp"
#include "poolcast/gp_ensemble.hpp"
#include "poolcast/scoring.hpp"

namespace poolcast {

namespace {

std::vector<double> report_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
    return g;
}

std::string classify(double ensemble, double p_bar, double p0) {
    try {
        return classify_extremizing(ensemble, p_bar, p0) == Extremizing::Extremizes ? "extremizes" : "anti-extremizes";
    } catch (const UndefinedClassification&) {
        return "undefined";
    }
}

// Expert 1 fixed at p1, expert 2 swept over grid; infeasible report pairs are kept with an empty aggregate.
FigureTable conjugate_figure(const ConjugatePair& pair, const SampleDesign& design, double p1,
                             const std::vector<double>& grid) {
    FigureTable t{{"p1", "p2", "p_bar", "ensemble", "classification"}, {}};
    const double p0 = prior_predictive(pair);
    for (double p2 : grid) {
        const ExpertReports reports{p1, p2};
        const double p_bar = reports.mean();
        try {
            const double e = aggregate_conjugate(pair, design, reports);
            t.rows.push_back({format_double(p1), format_double(p2), format_double(p_bar), format_double(e),
                              classify(e, p_bar, p0)});
        } catch (const InfeasibleReports&) {
            t.rows.push_back({format_double(p1), format_double(p2), format_double(p_bar), "", "infeasible"});
        }
    }
    return t;
}

// Every report F_n(tau1 + x) a Beta/Bernoulli expert with n draws can make.
std::vector<double> bernoulli_reports(const ConjugatePair& pair, int n) {
    std::vector<double> g;
    for (int x = 0; x <= n; ++x) g.push_back(predictive_prob(pair, n, pair.tau1() + x));
    return g;
}

FigureTable exchangeable_figure(const std::vector<std::string>& series, const std::vector<double>& rhos,
                                const std::vector<double>& powers) {
    FigureTable t{{"p1", "p2"}, {}};
    for (const auto& s : series) t.columns.push_back(s);
    const double sd = 1.0 / 20.0;
    std::vector<EnsembleWeights> weights;
    for (double rho : rhos) weights.push_back(derive_weights(exchangeable_model<double>(2, rho, sd * sd)));
    for (double p2 : report_grid()) {
        std::vector<std::string> row{format_double(0.5), format_double(p2)};
        for (std::size_t i = 0; i < series.size(); ++i) {
            const EnsembleWeights& w = weights[rhos.size() == 1 ? 0 : i];
            const LinkFamily link = LinkFamily::exponential_power(powers[powers.size() == 1 ? 0 : i]);
            const double p0 = model_prior_predictive(w, link);
            row.push_back(format_double(aggregate_link(w, link, p0, ExpertReports{0.5, p2})));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"1a", "1b", "1c", "1d", "2a", "2b", "3a", "3b"};
    return ids;
}

FigureTable figure_data(const std::string& id) {
    if (id == "1a" || id == "1b") {
        const ConjugatePair pair = ConjugatePair::beta_bernoulli(1, 1);
        const SampleDesign design = id == "1a" ? SampleDesign({2, 2}) : SampleDesign({1, 1}, 1);
        return conjugate_figure(pair, design, 0.75, bernoulli_reports(pair, 2));
    }
    if (id == "1c" || id == "1d") {
        const ConjugatePair pair = ConjugatePair::normal_normal(-1.25, 1, 1);
        const SampleDesign design = id == "1c" ? SampleDesign({2, 2}) : SampleDesign({1, 1}, 1);
        return conjugate_figure(pair, design, predictive_prob(pair, 2, pair.tau1()), report_grid());
    }
    if (id == "2a") {
        FigureTable t{{"p1", "p2", "p_bar", "klop", "blop"}, {}};
        for (double p2 : report_grid()) {
            const double p_bar = (0.5 + p2) / 2.0;
            t.rows.push_back({format_double(0.5), format_double(p2), format_double(p_bar),
                              format_double(klop(2.5, p_bar)), format_double(blop(5, 5, p_bar))});
        }
        return t;
    }
    if (id == "2b") {
        const ConjugatePair pair = ConjugatePair::normal_normal(0, 1, 1);
        const SampleDesign design({2, 2});
        const double p1 = predictive_prob(pair, 2, pair.tau1());
        FigureTable t{{"p1", "p2", "probit", "logit"}, {}};
        for (double p2 : report_grid()) {
            const ExpertReports reports{p1, p2};
            t.rows.push_back({format_double(p1), format_double(p2), format_double(aggregate_private(pair, design, reports)),
                              format_double(logit_pool(1.25, reports))});
        }
        return t;
    }
    if (id == "3a") return exchangeable_figure({"eta_1", "eta_2", "eta_4"}, {0.75}, {1, 2, 4});
    if (id == "3b") return exchangeable_figure({"rho_0.75", "rho_-0.5"}, {0.75, -0.5}, {2});
    throw UsageError("unknown figure '" + id + "' (expected 1a, 1b, 1c, 1d, 2a, 2b, 3a or 3b)");
}

void write_figure(std::ostream& out, const FigureTable& table) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
    }
}

}  // namespace poolcast
