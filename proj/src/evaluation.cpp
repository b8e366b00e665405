#include "poolcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "poolcast/dataset.hpp"
#include "poolcast/errors.hpp"
#include "poolcast/parallel.hpp"
#include "poolcast/scoring.hpp"

namespace poolcast {

namespace {

std::string format_power(double power) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", power);
    return buf;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

Method glm_method(const std::string& spec) {
    Method m;
    m.kind = Method::Kind::Glm;
    if (spec == "glm") return m;
    const std::string link = spec.substr(4);
    if (link.rfind("ep", 0) == 0 && link.size() > 2) {
        m.link = LinkFamily::exponential_power(parse_double(link.substr(2), "method '" + spec + "'"));
    } else if (link == "ep") {
        throw UsageError("method 'glm:ep' needs a power, e.g. glm:ep9");
    } else {
        try {
            m.link = LinkFamily::from_name(link);
        } catch (const SchemaError&) {
            throw UsageError("unknown link in method '" + spec + "'");
        }
    }
    return m;
}

struct Fitted {
    Eigen::VectorXd forecast;
    Eigen::VectorXd parameters;
};

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

Eigen::VectorXd glm_parameters(const FittedAggregator& model) {
    Eigen::VectorXd p(model.coefficients.size() + 1);
    p << model.intercept, model.coefficients;
    return p;
}

// Fits one method on train and forecasts test. Pass-through and avg read only test reports.
Fitted fit_and_predict(const Method& m, const TrainingSet& data, const std::vector<Eigen::Index>& train,
                       const Eigen::MatrixXd& test, const FitOptions& opts) {
    const double eps = opts.clip_epsilon;
    switch (m.kind) {
        case Method::Kind::PassThrough: {
            const auto it = std::find(data.names().begin(), data.names().end(), m.column);
            return {test.col(it - data.names().begin()), {}};
        }
        case Method::Kind::Average:
            return {test.rowwise().mean(), {}};
        case Method::Kind::Olop: {
            const Eigen::VectorXd w = fit_olop(data.subset(train), opts);
            return {predict_lop(w, test, eps), w};
        }
        case Method::Kind::Blop: {
            const BlopFit f = fit_blop(data.subset(train), opts);
            Eigen::VectorXd p(f.weights.size() + 2);
            p << f.weights, f.a, f.b;
            return {predict_blop(f, test, eps), p};
        }
        case Method::Kind::Klop:
        case Method::Kind::Logit: {
            const ScalarPool pool = m.kind == Method::Kind::Klop ? ScalarPool::Karmarkar : ScalarPool::Logit;
            const double a = fit_scalar(pool, data.subset(train), opts);
            return {predict_scalar(pool, a, test, eps), Eigen::VectorXd::Constant(1, a)};
        }
        case Method::Kind::Glm: {
            const FittedAggregator model = fit_glm(m.link, data.subset(train), opts);
            return {predict_glm(model, test), glm_parameters(model)};
        }
        case Method::Kind::GlmGrid: break;
    }
    throw UsageError("glm-grid is fitted through the power search");
}

void score_fold(FoldScore& fs, const Eigen::VectorXd& forecast, const Eigen::VectorXi& y, double eps) {
    const PredictionSet preds(forecast, y, eps);
    fs.ls = mean_log_score(preds);
    if (fs.baseline > 0.0 && fs.baseline < 1.0)
        fs.als = mean_asym_log_score(preds, fs.baseline);
    else
        fs.als.reset();
    try {
        fs.auc = auc(preds);
    } catch (const UndefinedMetric&) {
        fs.auc.reset();
    }
}

void summarize(MethodScores& ms, const TrainingSet& data, const FoldAssignment& folds, double eps) {
    double ls = 0.0;
    double als = 0.0;
    double auc_sum = 0.0;
    Eigen::Index rows = 0;
    Eigen::Index als_rows = 0;
    int auc_folds = 0;
    for (const FoldScore& fs : ms.folds) {
        if (fs.failed()) continue;
        ls += *fs.ls * static_cast<double>(fs.rows);
        rows += fs.rows;
        if (fs.als) {
            als += *fs.als * static_cast<double>(fs.rows);
            als_rows += fs.rows;
        }
        if (fs.auc) {
            auc_sum += *fs.auc;
            ++auc_folds;
        }
    }
    if (rows == 0) return;
    ms.ls = ls / static_cast<double>(rows);
    if (als_rows > 0) ms.als = als / static_cast<double>(als_rows);
    if (auc_folds > 0) ms.auc = auc_sum / auc_folds;
    if (ms.method.kind == Method::Kind::PassThrough) return;

    Eigen::VectorXd q(rows);
    Eigen::VectorXi y(rows);
    Eigen::VectorXd p_bar(rows);
    Eigen::VectorXd p0(rows);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        const FoldScore& fs = ms.folds[static_cast<std::size_t>(folds.fold_of(r))];
        if (fs.failed()) continue;
        q(i) = ms.oof(r);
        y(i) = data.outcome()(r);
        p_bar(i) = data.row(r).clipped(eps).mean();
        p0(i) = fs.baseline;
        ++i;
    }
    PredictionSet preds(q, y, eps);
    preds.with_average(p_bar).with_prior(p0);
    try {
        ms.extremizing_rate = extremizing_rate(preds).rate;
    } catch (const UndefinedMetric&) {
        ms.extremizing_rate.reset();
    }
}

// Fixed-point text shared by both report formats; never prints a negative zero.
std::string fixed4(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    std::string s = buf;
    if (s == "-0.0000") s = "0.0000";
    return s;
}

std::string cell(const std::optional<double>& x) { return x ? fixed4(*x) : "n/a"; }

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string md_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out;
}

struct SummaryRow {
    std::string label;
    std::string key;
    std::string value;
};

std::vector<SummaryRow> summary_rows(const GridSummary& g) {
    const FittedAggregator& m = g.selection.model;
    std::vector<SummaryRow> rows;
    rows.push_back({"Constant", "constant", fixed4(m.intercept)});
    for (std::size_t i = 0; i < m.names.size(); ++i)
        rows.push_back({"Coefficient " + m.names[i], "coefficient_" + m.names[i],
                        fixed4(m.coefficients(static_cast<Eigen::Index>(i)))});
    rows.push_back({"Power parameter", "power", format_power(g.selection.power)});
    rows.push_back({"Extremizes the average", "extremizing_rate",
                    g.extremizing_rate ? fixed4(*g.extremizing_rate) : "n/a"});
    rows.push_back({"Base rate", "base_rate", fixed4(g.base_rate)});
    rows.push_back({"Observations", "observations", std::to_string(g.observations)});
    return rows;
}

void render_markdown(std::ostringstream& out, const ScoreTable& t) {
    out << "# Out-of-sample scores\n\n";
    out << "Rows: " << t.rows << ". Folds: " << t.folds << ". Seed: " << t.seed << ".\n\n";
    out << "| Method | LS | ALS | AUC |\n| --- | ---: | ---: | ---: |\n";
    for (const MethodScores& ms : t.methods)
        out << "| " << ms.method.label() << " | " << cell(ms.ls) << " | " << cell(ms.als) << " | " << cell(ms.auc)
            << " |\n";

    bool any = false;
    for (const MethodScores& ms : t.methods)
        for (std::size_t j = 0; j < ms.folds.size(); ++j)
            if (ms.folds[j].failed()) {
                if (!any) out << "\nFailed fits (excluded from the averages):\n\n";
                any = true;
                out << "- " << ms.method.label() << ", fold " << j + 1 << ": " << md_escape(ms.folds[j].failure)
                    << "\n";
            }

    if (!t.grid) return;
    out << "\n## Final glm-grid fit on all rows\n\n| Quantity | Value |\n| --- | ---: |\n";
    for (const SummaryRow& r : summary_rows(*t.grid)) out << "| " << r.label << " | " << r.value << " |\n";
    out << "\n### Power grid\n\n| Power | Mean out-of-fold LS |\n| ---: | ---: |\n";
    for (const GridPoint& p : t.grid->selection.grid)
        out << "| " << format_power(p.power) << " | "
            << (p.mean_oof_ls ? fixed4(*p.mean_oof_ls) : "failed: " + md_escape(p.failure)) << " |\n";
}

void render_delimited(std::ostringstream& out, const ScoreTable& t) {
    out << "method,ls,als,auc\n";
    for (const MethodScores& ms : t.methods)
        out << csv_quote(ms.method.label()) << ',' << cell(ms.ls) << ',' << cell(ms.als) << ',' << cell(ms.auc)
            << '\n';

    bool any = false;
    for (const MethodScores& ms : t.methods)
        for (std::size_t j = 0; j < ms.folds.size(); ++j)
            if (ms.folds[j].failed()) {
                if (!any) out << "\nmethod,fold,failure\n";
                any = true;
                out << csv_quote(ms.method.label()) << ',' << j + 1 << ',' << csv_quote(ms.folds[j].failure) << '\n';
            }

    if (!t.grid) return;
    out << "\nquantity,value\n";
    for (const SummaryRow& r : summary_rows(*t.grid)) out << csv_quote(r.key) << ',' << r.value << '\n';
    out << "\npower,mean_oof_ls\n";
    for (const GridPoint& p : t.grid->selection.grid)
        out << format_power(p.power) << ',' << (p.mean_oof_ls ? fixed4(*p.mean_oof_ls) : "n/a") << '\n';
}

}  // namespace

std::string Method::label() const {
    switch (kind) {
        case Kind::PassThrough: return "p_" + column;
        case Kind::Average: return "avg";
        case Kind::Olop: return "olop";
        case Kind::Blop: return "blop";
        case Kind::Klop: return "klop";
        case Kind::Logit: return "logit";
        case Kind::Glm:
            return "glm:" + (link.kind() == LinkFamily::Kind::ExponentialPower ? "ep" + format_power(link.power())
                                                                                : link.name());
        case Kind::GlmGrid: return "glm-grid";
    }
    return "unknown";
}

std::size_t MethodScores::failed_folds() const {
    return static_cast<std::size_t>(std::count_if(folds.begin(), folds.end(), [](const FoldScore& f) {
        return f.failed();
    }));
}

std::vector<Method> parse_methods(const std::string& list, const std::vector<std::string>& experts) {
    std::vector<Method> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw UsageError("empty entry in method list '" + list + "'");
        Method m;
        if (item == "experts") {
            for (const std::string& e : experts) {
                Method p;
                p.kind = Method::Kind::PassThrough;
                p.column = e;
                out.push_back(p);
            }
            continue;
        }
        if (item == "avg") {
            m.kind = Method::Kind::Average;
        } else if (item == "olop") {
            m.kind = Method::Kind::Olop;
        } else if (item == "blop") {
            m.kind = Method::Kind::Blop;
        } else if (item == "klop") {
            m.kind = Method::Kind::Klop;
        } else if (item == "logit") {
            m.kind = Method::Kind::Logit;
        } else if (item == "glm-grid") {
            m.kind = Method::Kind::GlmGrid;
        } else if (item == "glm" || item.rfind("glm:", 0) == 0) {
            m = glm_method(item);
        } else {
            const std::string name = item.rfind("p_", 0) == 0 ? item.substr(2) : item;
            if (std::find(experts.begin(), experts.end(), name) == experts.end())
                throw UsageError("unknown method or expert column '" + item + "'");
            m.kind = Method::Kind::PassThrough;
            m.column = name;
        }
        out.push_back(m);
    }
    if (out.empty()) throw UsageError("method list is empty");
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (out[i].label() == out[j].label()) throw UsageError("method '" + out[i].label() + "' listed twice");
    return out;
}

ScoreTable cross_validate(const TrainingSet& data, const std::vector<Method>& methods, const FoldAssignment& folds,
                          const CvOptions& opts) {
    opts.fit.validate();
    opts.grid.validate();
    if (methods.empty()) throw UsageError("no methods to evaluate");
    if (folds.rows() != data.rows()) throw SchemaError("fold assignment does not match the data's row count");
    for (const Method& m : methods)
        if (m.kind == Method::Kind::PassThrough &&
            std::find(data.names().begin(), data.names().end(), m.column) == data.names().end())
            throw SchemaError("no expert column '" + m.column + "'");

    const int k = folds.folds();
    const double eps = opts.fit.clip_epsilon;
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
    std::vector<std::vector<Eigen::Index>> complement(static_cast<std::size_t>(k));
    std::vector<double> baseline(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        members[static_cast<std::size_t>(j)] = folds.members(j);
        complement[static_cast<std::size_t>(j)] = folds.complement(j);
        double ones = 0.0;
        for (Eigen::Index r : complement[static_cast<std::size_t>(j)]) ones += data.outcome()(r);
        baseline[static_cast<std::size_t>(j)] = ones / static_cast<double>(complement[static_cast<std::size_t>(j)].size());
    }

    ScoreTable table;
    table.rows = data.rows();
    table.folds = k;
    table.seed = folds.seed();
    table.methods.resize(methods.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        MethodScores& ms = table.methods[mi];
        ms.method = methods[mi];
        ms.folds.resize(static_cast<std::size_t>(k));
        ms.oof = Eigen::VectorXd::Constant(data.rows(), std::numeric_limits<double>::quiet_NaN());
        for (int j = 0; j < k; ++j) {
            ms.folds[static_cast<std::size_t>(j)].rows = static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)].size());
            ms.folds[static_cast<std::size_t>(j)].baseline = baseline[static_cast<std::size_t>(j)];
        }
    }

    // Each (method, fold) task owns its FoldScore and its fold's oof rows.
    parallel_for(methods.size() * static_cast<std::size_t>(k), opts.jobs, [&](std::size_t task) {
        const std::size_t mi = task / static_cast<std::size_t>(k);
        const std::size_t j = task % static_cast<std::size_t>(k);
        MethodScores& ms = table.methods[mi];
        if (ms.method.kind == Method::Kind::GlmGrid) return;
        FoldScore& fs = ms.folds[j];
        const std::vector<Eigen::Index>& test = members[j];
        try {
            Fitted f = fit_and_predict(ms.method, data, complement[j], rows_of(data.reports(), test), opts.fit);
            Eigen::VectorXi y(static_cast<Eigen::Index>(test.size()));
            for (std::size_t i = 0; i < test.size(); ++i) {
                y(static_cast<Eigen::Index>(i)) = data.outcome()(test[i]);
                ms.oof(test[i]) = f.forecast(static_cast<Eigen::Index>(i));
            }
            score_fold(fs, f.forecast, y, eps);
            fs.parameters = std::move(f.parameters);
        } catch (const std::exception& e) {
            fs.failure = e.what();
        }
    });

    for (MethodScores& ms : table.methods) {
        if (ms.method.kind != Method::Kind::GlmGrid) continue;
        try {
            PowerSelection sel = select_power(opts.grid, data, folds, opts.fit, opts.jobs);
            const GridPoint& best = *std::find_if(sel.grid.begin(), sel.grid.end(), [&](const GridPoint& p) {
                return p.power == sel.power;
            });
            ms.oof = best.oof;
            for (int j = 0; j < k; ++j) {
                FoldScore& fs = ms.folds[static_cast<std::size_t>(j)];
                const std::vector<Eigen::Index>& test = members[static_cast<std::size_t>(j)];
                Eigen::VectorXd q(static_cast<Eigen::Index>(test.size()));
                Eigen::VectorXi y(static_cast<Eigen::Index>(test.size()));
                for (std::size_t i = 0; i < test.size(); ++i) {
                    q(static_cast<Eigen::Index>(i)) = best.oof(test[i]);
                    y(static_cast<Eigen::Index>(i)) = data.outcome()(test[i]);
                }
                score_fold(fs, q, y, eps);
                fs.parameters = glm_parameters(best.fold_models[static_cast<std::size_t>(j)]);
            }
            GridSummary g;
            g.selection = std::move(sel);
            g.base_rate = data.base_rate();
            g.observations = data.rows();
            table.grid = std::move(g);
        } catch (const std::exception& e) {
            for (FoldScore& fs : ms.folds) fs.failure = e.what();
        }
    }

    for (MethodScores& ms : table.methods) {
        summarize(ms, data, folds, eps);
        if (ms.method.kind == Method::Kind::GlmGrid && table.grid) table.grid->extremizing_rate = ms.extremizing_rate;
    }
    return table;
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    if (name == "delimited" || name == "csv") return ReportFormat::Delimited;
    throw UsageError("unknown report format '" + name + "' (expected markdown or csv)");
}

std::string render_report(const ScoreTable& table, ReportFormat format) {
    if (table.methods.empty()) throw UsageError("cannot render a report without methods");
    std::ostringstream out;
    if (format == ReportFormat::Markdown)
        render_markdown(out, table);
    else
        render_delimited(out, table);
    return out.str();
}

}  // namespace poolcast
