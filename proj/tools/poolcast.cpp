// poolcast command-line entry point.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "poolcast/dataset.hpp"
#include "poolcast/errors.hpp"
#include "poolcast/evaluation.hpp"
#include "poolcast/figures.hpp"
#include "poolcast/fitting.hpp"
#include "poolcast/folds.hpp"
#include "poolcast/model_io.hpp"
#include "poolcast/scoring.hpp"
#include "poolcast/simulation.hpp"

namespace fs = std::filesystem;
using namespace poolcast;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("POOLCAST_LOG");
    if (env == nullptr || *env == '\0') return LogLevel::Error;
    const std::string v = env;
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    throw UsageError("POOLCAST_LOG must be error, info or debug, got '" + v + "'");
}

LogLevel g_level = LogLevel::Error;

void log(LogLevel level, const std::string& msg) {
    if (level <= g_level) std::cerr << "poolcast: " << msg << '\n';
}

struct Common {
    int jobs = 1;
    std::uint64_t seed = 0;
};

struct FitFlags {
    double tolerance = 1e-8;
    int max_iterations = 500;
    int restarts = 3;
    double clip = 1e-9;
    std::string power_grid;

    FitOptions options(std::uint64_t seed) const {
        FitOptions o;
        o.gradient_tolerance = tolerance;
        o.max_iterations = max_iterations;
        o.restarts = restarts;
        o.clip_epsilon = clip;
        o.seed = seed;
        o.validate();
        return o;
    }
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--tol", f.tolerance, "Gradient tolerance on the mean loss")->capture_default_str();
    cmd->add_option("--max-iter", f.max_iterations, "Optimizer iteration cap per start")->capture_default_str();
    cmd->add_option("--restarts", f.restarts, "Optimizer starts per fit")->capture_default_str();
    cmd->add_option("--clip", f.clip, "Reports are clipped to [clip, 1 - clip]")->capture_default_str();
}

void require_readable(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw UsageError(std::string("cannot read ") + what + " '" + path + "'");
}

void require_writable(const std::string& path) {
    if (path == "-") return;
    const fs::path parent = fs::absolute(fs::path(path)).parent_path();
    std::error_code ec;
    if (!fs::is_directory(parent, ec)) throw UsageError("output directory '" + parent.string() + "' does not exist");
}

// Writes text to path, or to stdout for "-".
void emit(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << text;
    if (!out) throw UsageError("write to '" + path + "' failed");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

// Expert columns of the data in the model's coefficient order.
Eigen::MatrixXd columns_for(const Dataset& data, const FittedAggregator& model) {
    if (data.experts.size() != model.names.size())
        throw SchemaError("data has " + std::to_string(data.experts.size()) + " expert columns, model has " +
                          std::to_string(model.names.size()));
    Eigen::MatrixXd out(data.rows(), static_cast<Eigen::Index>(model.names.size()));
    for (std::size_t i = 0; i < model.names.size(); ++i) {
        const auto it = std::find(data.experts.begin(), data.experts.end(), model.names[i]);
        if (it == data.experts.end()) throw SchemaError("data has no column p_" + model.names[i]);
        out.col(static_cast<Eigen::Index>(i)) = data.reports.col(it - data.experts.begin());
    }
    return out;
}

FoldAssignment make_folds(const TrainingSet& data, int folds, std::uint64_t seed, bool stratified) {
    return stratified ? split_folds_stratified(data.outcome(), folds, seed) : split_folds(data.rows(), folds, seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aggregate probability forecasts of binary events"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Common common;
    const auto add_common = [&](CLI::App* cmd, bool seeded) {
        cmd->add_option("--jobs", common.jobs, "Worker threads; results do not depend on it")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        if (seeded) cmd->add_option("--seed", common.seed, "Root seed for every random draw")->capture_default_str();
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic data file");
    std::string sim_gen;
    std::string sim_config;
    Eigen::Index sim_rows = 1000;
    std::string sim_out;
    sim->add_option("--gen", sim_gen, "Generator: conjugate or latent")
        ->required()
        ->check(CLI::IsMember({"conjugate", "latent"}));
    sim->add_option("--config", sim_config, "JSON generator settings")->required();
    sim->add_option("--rows", sim_rows, "Rows to generate")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--out", sim_out, "Output data file ('-' for stdout)")->required();
    add_common(sim, true);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit the link-GLM aggregator and write a model file");
    std::string fit_data;
    std::string fit_link = "normal";
    double fit_power = 2.0;
    int fit_folds = 10;
    bool fit_strat = false;
    std::string fit_out;
    FitFlags fit_flags;
    fit->add_option("--data", fit_data, "Training data file")->required();
    fit->add_option("--link", fit_link, "Link family: normal, logistic or ep")
        ->capture_default_str()
        ->check(CLI::IsMember({"normal", "logistic", "ep"}));
    fit->add_option("--power", fit_power, "Exponential-power shape for --link ep")->capture_default_str();
    fit->add_option("--power-grid", fit_flags.power_grid,
                    "Comma list of powers; picks one by cross-validation (implies --link ep)");
    fit->add_option("--folds", fit_folds, "Folds for --power-grid")->capture_default_str();
    fit->add_flag("--stratified", fit_strat, "Stratify folds by outcome");
    fit->add_option("--out", fit_out, "Output model file ('-' for stdout)")->required();
    add_fit_flags(fit, fit_flags);
    add_common(fit, true);

    // predict
    auto* pred = app.add_subcommand(
        "predict", "Apply a model file to a data file; forecasts are clipped to the model's [clip, 1 - clip]");
    std::string pred_model;
    std::string pred_data;
    std::string pred_out;
    pred->add_option("--model", pred_model, "Model file")->required();
    pred->add_option("--data", pred_data, "Data file")->required();
    pred->add_option("--out", pred_out, "Output predictions file ('-' for stdout)")->required();

    // cv
    auto* cv = app.add_subcommand("cv", "Cross-validate aggregation methods and write a score report");
    std::string cv_data;
    std::string cv_methods = "experts,avg,olop,blop,logit,glm-grid";
    int cv_folds = 10;
    bool cv_strat = false;
    std::string cv_report = "-";
    std::string cv_format;
    FitFlags cv_flags;
    cv->add_option("--data", cv_data, "Data file")->required();
    cv->add_option("--methods", cv_methods,
                   "Comma list: experts, <expert>, avg, olop, blop, klop, logit, glm, glm:<link>, glm-grid")
        ->capture_default_str();
    cv->add_option("--folds", cv_folds, "Fold count")->capture_default_str();
    cv->add_flag("--stratified", cv_strat, "Stratify folds by outcome");
    cv->add_option("--power-grid", cv_flags.power_grid, "Powers searched by glm-grid")
        ->default_str("1,2,3,4,6,9,12,16,25,40,64");
    cv->add_option("--report", cv_report, "Report file ('-' for stdout)")->capture_default_str();
    cv->add_option("--format", cv_format, "markdown or csv (default: csv for a .csv report, else markdown)")
        ->check(CLI::IsMember({"markdown", "md", "csv", "delimited"}));
    add_fit_flags(cv, cv_flags);
    add_common(cv, true);

    // score
    auto* score = app.add_subcommand("score", "Score a predictions file");
    std::string score_preds;
    double score_base = 0.0;
    score->add_option("--preds", score_preds, "Predictions file with columns y, pred")->required();
    score->add_option("--base-rate", score_base, "Baseline c of the asymmetric log score")->required();

    // extremize-rate
    auto* ext = app.add_subcommand("extremize-rate", "Share of predictions that extremize the average forecast");
    std::string ext_preds;
    double ext_prior = 0.0;
    ext->add_option("--preds", ext_preds, "Predictions file with columns y, pred, p_bar")->required();
    ext->add_option("--prior", ext_prior, "Prior-predictive probability p0")->required();

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "Emit the grid behind one of the ensemble figures");
    std::string plot_figure;
    std::string plot_out = "-";
    plot->add_option("--figure", plot_figure, "1a, 1b, 1c, 1d, 2a, 2b, 3a or 3b")
        ->required()
        ->check(CLI::IsMember(figure_ids()));
    plot->add_option("--out", plot_out, "Output file ('-' for stdout)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        g_level = log_level();
        if (sim->parsed()) {
            require_readable(sim_config, "config");
            require_writable(sim_out);
            SimConfig config = sim_config_from_json(sim_gen, slurp(sim_config), sim_config);
            config.rows = sim_rows;
            config.seed = common.seed;
            log(LogLevel::Info, "simulating " + std::to_string(sim_rows) + " rows");
            const Dataset d = simulate(config, common.jobs);
            std::ostringstream out;
            write_dataset(out, d);
            emit(sim_out, out.str());
        } else if (fit->parsed()) {
            require_readable(fit_data, "data file");
            require_writable(fit_out);
            const FitOptions opts = fit_flags.options(common.seed);
            const Dataset d = read_dataset(fit_data);
            const TrainingSet data = d.training();
            ModelDocument doc;
            doc.training_rows = data.rows();
            doc.base_rate = data.base_rate();
            doc.seed = common.seed;
            if (!fit_flags.power_grid.empty()) {
                if (fit_link != "ep" && fit->count("--link") > 0)
                    throw UsageError("--power-grid searches exponential-power links; drop --link or use --link ep");
                const PowerGrid grid = PowerGrid::parse(fit_flags.power_grid);
                const FoldAssignment folds = make_folds(data, fit_folds, common.seed, fit_strat);
                log(LogLevel::Info, "searching " + std::to_string(grid.powers.size()) + " powers over " +
                                        std::to_string(fit_folds) + " folds");
                PowerSelection sel = select_power(grid, data, folds, opts, common.jobs);
                for (const GridPoint& p : sel.grid) {
                    doc.grid_results.push_back({p.power, p.mean_oof_ls});
                    if (!p.failure.empty()) log(LogLevel::Info, "power " + format_double(p.power) + ": " + p.failure);
                }
                log(LogLevel::Info, "selected power " + format_double(sel.power));
                doc.model = std::move(sel.model);
            } else {
                doc.model = fit_glm(LinkFamily::from_name(fit_link, fit_power), data, opts);
            }
            emit(fit_out, model_to_json(doc));
        } else if (pred->parsed()) {
            require_readable(pred_model, "model file");
            require_readable(pred_data, "data file");
            require_writable(pred_out);
            const ModelDocument doc = read_model(pred_model);
            const Dataset d = read_dataset(pred_data);
            const Eigen::MatrixXd reports = columns_for(d, doc.model);
            Predictions p;
            p.outcome = d.outcome;
            const double eps = doc.model.clip_epsilon;
            p.forecast = predict_glm(doc.model, reports).array().max(eps).min(1.0 - eps);
            p.average = Eigen::VectorXd(d.rows());
            for (Eigen::Index r = 0; r < d.rows(); ++r)
                (*p.average)(r) = reports.row(r).array().max(eps).min(1.0 - eps).mean();
            std::ostringstream out;
            write_predictions(out, p);
            emit(pred_out, out.str());
        } else if (cv->parsed()) {
            require_readable(cv_data, "data file");
            require_writable(cv_report);
            ReportFormat format = ReportFormat::Markdown;
            if (!cv_format.empty())
                format = parse_report_format(cv_format);
            else if (fs::path(cv_report).extension() == ".csv")
                format = ReportFormat::Delimited;
            CvOptions opts;
            opts.fit = cv_flags.options(common.seed);
            if (!cv_flags.power_grid.empty()) opts.grid = PowerGrid::parse(cv_flags.power_grid);
            opts.jobs = common.jobs;
            const Dataset d = read_dataset(cv_data);
            const TrainingSet data = d.training();
            const std::vector<Method> methods = parse_methods(cv_methods, data.names());
            const FoldAssignment folds = make_folds(data, cv_folds, common.seed, cv_strat);
            log(LogLevel::Info, "cross-validating " + std::to_string(methods.size()) + " methods over " +
                                    std::to_string(cv_folds) + " folds");
            const ScoreTable table = cross_validate(data, methods, folds, opts);
            for (const MethodScores& m : table.methods)
                for (std::size_t j = 0; j < m.folds.size(); ++j)
                    if (m.folds[j].failed())
                        log(LogLevel::Info, m.method.label() + " fold " + std::to_string(j + 1) + ": " +
                                                m.folds[j].failure);
            emit(cv_report, render_report(table, format));
        } else if (score->parsed()) {
            require_readable(score_preds, "predictions file");
            const Predictions p = read_predictions(score_preds);
            const PredictionSet s(p.forecast, p.outcome);
            std::string auc_text = "n/a";
            try {
                auc_text = fixed(auc(s), 6);
            } catch (const UndefinedMetric& e) {
                log(LogLevel::Info, e.what());
            }
            std::cout << "rows,ls,als,auc\n"
                      << p.forecast.size() << ',' << fixed(mean_log_score(s), 6) << ','
                      << fixed(mean_asym_log_score(s, score_base), 6) << ',' << auc_text << '\n';
        } else if (ext->parsed()) {
            require_readable(ext_preds, "predictions file");
            const Predictions p = read_predictions(ext_preds);
            if (!p.average) throw SchemaError(ext_preds + " has no p_bar column");
            PredictionSet s(p.forecast, p.outcome);
            s.with_average(*p.average).with_prior(ext_prior);
            const ExtremizingRate r = extremizing_rate(s);
            std::cout << "rate,classified,excluded\n"
                      << fixed(r.rate, 6) << ',' << r.classified << ',' << r.excluded << '\n';
        } else if (plot->parsed()) {
            require_writable(plot_out);
            std::ostringstream out;
            write_figure(out, figure_data(plot_figure));
            emit(plot_out, out.str());
        }
    } catch (const Error& e) {
        std::cerr << "poolcast: " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::Usage: return 2;
            case ErrorKind::Data: return 3;
            case ErrorKind::Numeric: return 4;
        }
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "poolcast: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
