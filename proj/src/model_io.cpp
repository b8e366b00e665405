#include "poolcast/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poolcast/dataset.hpp"
#include "poolcast/errors.hpp"

namespace poolcast {

namespace {

using Json = nlohmann::ordered_json;

const Json& field(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
    return obj.at(key);
}

double number(const Json& obj, const char* key, const std::string& where) {
    const Json& v = field(obj, key, where);
    if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

double number_or(const Json& obj, const char* key, double fallback, const std::string& where) {
    return obj.contains(key) ? number(obj, key, where) : fallback;
}

Eigen::VectorXd vector_of(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw SchemaError(where + " must be a nonempty array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw SchemaError(where + " must be a nonempty array of numbers");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

ConjugatePair pair_from_json(const Json& p, const std::string& where) {
    const Json& family = field(p, "family", where);
    if (!family.is_string()) throw SchemaError(where + ": family must be a string");
    const std::string f = family.get<std::string>();
    if (f == "beta_bernoulli") return ConjugatePair::beta_bernoulli(number(p, "alpha", where), number(p, "beta", where));
    if (f == "gamma_poisson") return ConjugatePair::gamma_poisson(number(p, "shape", where), number(p, "rate", where));
    if (f == "normal_normal")
        return ConjugatePair::normal_normal(number(p, "prior_mean", where), number(p, "prior_sd", where),
                                            number(p, "sd", where));
    if (f == "gen_gamma_gumbel")
        return ConjugatePair::gen_gamma_gumbel(number(p, "alpha", where), number(p, "beta", where),
                                               number(p, "scale", where));
    throw SchemaError(where + ": unknown pair family '" + f + "'");
}

InformationModel latent_model_from_json(const Json& j, const std::string& where) {
    if (j.contains("exchangeable")) {
        const Json& e = j.at("exchangeable");
        const Json& k = field(e, "k", where + " exchangeable");
        if (!k.is_number_integer()) throw SchemaError(where + ": exchangeable k must be an integer");
        return exchangeable_model<double>(k.get<int>(), number(e, "rho", where), number_or(e, "variance", 1.0, where),
                                          number_or(e, "coefficient", 1.0, where),
                                          number_or(e, "intercept", 0.0, where), number_or(e, "mean", 0.0, where));
    }
    InformationModel m;
    m.mean = vector_of(field(j, "mean", where), where + " mean");
    m.coefficients = vector_of(field(j, "coefficients", where), where + " coefficients");
    m.intercept = number_or(j, "intercept", 0.0, where);
    const Json& cov = field(j, "covariance", where);
    const auto k = m.mean.size();
    if (!cov.is_array() || static_cast<Eigen::Index>(cov.size()) != k)
        throw SchemaError(where + ": covariance must be a " + std::to_string(k) + " x " + std::to_string(k) + " array");
    m.covariance.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::VectorXd row = vector_of(cov[static_cast<std::size_t>(i)], where + " covariance row");
        if (row.size() != k) throw SchemaError(where + ": covariance rows must have " + std::to_string(k) + " entries");
        m.covariance.row(i) = row.transpose();
    }
    return m;
}

}  // namespace

SimConfig sim_config_from_json(const std::string& generator, const std::string& text, const std::string& source) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError(source + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw SchemaError(source + " must hold a JSON object");
    using Generator = decltype(SimConfig::generator);
    const auto make = [&]() -> Generator {
        if (generator == "conjugate") {
            const Json& priv = field(j, "private", source);
            if (!priv.is_array() || priv.empty()) throw SchemaError(source + ": private must be a nonempty array");
            std::vector<int> sizes;
            for (const Json& n : priv) {
                if (!n.is_number_integer()) throw SchemaError(source + ": private sizes must be integers");
                sizes.push_back(n.get<int>());
            }
            int shared = 0;
            if (j.contains("shared")) {
                if (!j.at("shared").is_number_integer()) throw SchemaError(source + ": shared must be an integer");
                shared = j.at("shared").get<int>();
            }
            return ConjugateGenerator{pair_from_json(field(j, "pair", source), source + " pair"),
                                      SampleDesign(sizes, shared)};
        }
        if (generator == "latent") {
            LatentGenerator gen{latent_model_from_json(j, source), LinkFamily::normal()};
            if (j.contains("link")) {
                const Json& link = j.at("link");
                const Json& family = field(link, "family", source + " link");
                if (!family.is_string()) throw SchemaError(source + ": link family must be a string");
                gen.link = LinkFamily::from_name(family.get<std::string>(), number_or(link, "power", 2.0, source));
            }
            validate(gen.model);
            return gen;
        }
        throw UsageError("unknown generator '" + generator + "' (expected conjugate or latent)");
    };
    SimConfig config = [&] {
        try {
            return SimConfig{make()};
        } catch (const DomainError& e) {
            throw SchemaError(source + ": " + e.what());
        }
    }();
    if (j.contains("names")) {
        const Json& names = j.at("names");
        if (!names.is_array()) throw SchemaError(source + ": names must be an array of strings");
        for (const Json& n : names) {
            if (!n.is_string()) throw SchemaError(source + ": names must be an array of strings");
            config.names.push_back(n.get<std::string>());
        }
    }
    return config;
}

std::string model_to_json(const ModelDocument& doc) {
    const FittedAggregator& m = doc.model;
    m.validate();
    Json j;
    j["schema_version"] = ModelDocument::kSchemaVersion;
    Json link;
    link["family"] = m.link.name();
    if (m.link.kind() == LinkFamily::Kind::ExponentialPower)
        link["power"] = m.link.power();
    else
        link["power"] = nullptr;
    j["link"] = link;
    j["intercept"] = m.intercept;
    Json coefs = Json::object();
    for (std::size_t i = 0; i < m.names.size(); ++i) coefs[m.names[i]] = m.coefficients(static_cast<Eigen::Index>(i));
    j["coefficients"] = coefs;
    j["clip_epsilon"] = m.clip_epsilon;
    j["training"] = {{"n", doc.training_rows}, {"base_rate", doc.base_rate}, {"seed", doc.seed}};
    Json grid = Json::array();
    for (const auto& g : doc.grid_results) {
        Json point;
        point["eta"] = g.power;
        if (g.mean_oof_ls)
            point["mean_oof_ls"] = *g.mean_oof_ls;
        else
            point["mean_oof_ls"] = nullptr;
        grid.push_back(point);
    }
    j["grid_results"] = grid;
    return j.dump(2) + "\n";
}

ModelDocument model_from_json(const std::string& text, const std::string& source) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError(source + " is not valid JSON: " + e.what());
    }
    const Json& version = field(j, "schema_version", source);
    if (!version.is_number_integer() || version.get<int>() != ModelDocument::kSchemaVersion)
        throw SchemaError(source + ": unsupported schema_version (expected " +
                          std::to_string(ModelDocument::kSchemaVersion) + ")");

    ModelDocument doc;
    const Json& link = field(j, "link", source);
    const Json& family = field(link, "family", source + " link");
    if (!family.is_string()) throw SchemaError(source + ": link family must be a string");
    const std::string name = family.get<std::string>();
    double power = 2.0;
    if (name == "ep") power = number(link, "power", source + " link");
    try {
        doc.model.link = LinkFamily::from_name(name, power);
    } catch (const DomainError& e) {
        throw SchemaError(source + ": " + e.what());
    }

    doc.model.intercept = number(j, "intercept", source);
    const Json& coefs = field(j, "coefficients", source);
    if (!coefs.is_object() || coefs.empty()) throw SchemaError(source + ": coefficients must be a nonempty object");
    doc.model.coefficients.resize(static_cast<Eigen::Index>(coefs.size()));
    Eigen::Index i = 0;
    for (auto it = coefs.begin(); it != coefs.end(); ++it, ++i) {
        if (!it.value().is_number()) throw SchemaError(source + ": coefficient '" + it.key() + "' must be a number");
        doc.model.names.push_back(it.key());
        doc.model.coefficients(i) = it.value().get<double>();
    }
    doc.model.clip_epsilon = number(j, "clip_epsilon", source);
    try {
        doc.model.validate();
    } catch (const DomainError& e) {
        throw SchemaError(source + ": " + e.what());
    }

    const Json& training = field(j, "training", source);
    const Json& n = field(training, "n", source + " training");
    const Json& seed = field(training, "seed", source + " training");
    if (!n.is_number_unsigned() || !seed.is_number_unsigned())
        throw SchemaError(source + ": training n and seed must be nonnegative integers");
    doc.training_rows = n.get<Eigen::Index>();
    doc.seed = seed.get<std::uint64_t>();
    doc.base_rate = number(training, "base_rate", source + " training");

    if (j.contains("grid_results")) {
        const Json& grid = j.at("grid_results");
        if (!grid.is_array()) throw SchemaError(source + ": grid_results must be an array");
        for (const Json& g : grid) {
            ModelDocument::GridResult r{number(g, "eta", source + " grid_results"), std::nullopt};
            const Json& ls = field(g, "mean_oof_ls", source + " grid_results");
            if (ls.is_number())
                r.mean_oof_ls = ls.get<double>();
            else if (!ls.is_null())
                throw SchemaError(source + ": grid_results mean_oof_ls must be a number or null");
            doc.grid_results.push_back(r);
        }
    }
    return doc;
}

void write_model(const std::filesystem::path& path, const ModelDocument& doc) {
    const std::string text = model_to_json(doc);
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path.string());
    out << text;
}

ModelDocument read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open model file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str(), path.string());
}

Predictions parse_predictions(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(source + " is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    int y_col = -1;
    int q_col = -1;
    int a_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y") y_col = static_cast<int>(c);
        if (header[c] == "pred") q_col = static_cast<int>(c);
        if (header[c] == "p_bar") a_col = static_cast<int>(c);
    }
    if (y_col < 0 || q_col < 0) throw SchemaError(source + " needs columns y and pred");

    std::vector<int> ys;
    std::vector<double> qs;
    std::vector<double> as;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != header.size())
            throw SchemaError(where + " has " + std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(header.size()));
        const std::string& yf = fields[static_cast<std::size_t>(y_col)];
        if (yf != "0" && yf != "1") throw SchemaError(where + ": y must be 0 or 1, got '" + yf + "'");
        ys.push_back(yf == "1" ? 1 : 0);
        for (int c : {q_col, a_col}) {
            if (c < 0) continue;
            const double p = parse_double(fields[static_cast<std::size_t>(c)], where);
            if (p < 0.0 || p > 1.0)
                throw SchemaError(where + ": " + header[static_cast<std::size_t>(c)] + " is outside [0, 1]");
            (c == q_col ? qs : as).push_back(p);
        }
    }
    const auto n = static_cast<Eigen::Index>(ys.size());
    if (n == 0) throw SchemaError(source + " has no data rows");
    Predictions p;
    p.outcome = Eigen::Map<Eigen::VectorXi>(ys.data(), n);
    p.forecast = Eigen::Map<Eigen::VectorXd>(qs.data(), n);
    if (a_col >= 0) p.average = Eigen::Map<Eigen::VectorXd>(as.data(), n);
    return p;
}

Predictions read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open predictions file " + path.string());
    return parse_predictions(in, path.string());
}

void write_predictions(std::ostream& out, const Predictions& preds) {
    out << (preds.average ? "y,pred,p_bar\n" : "y,pred\n");
    for (Eigen::Index r = 0; r < preds.forecast.size(); ++r) {
        out << preds.outcome(r) << ',' << format_double(preds.forecast(r));
        if (preds.average) out << ',' << format_double((*preds.average)(r));
        out << '\n';
    }
}

void write_predictions(const std::filesystem::path& path, const Predictions& preds) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path.string());
    write_predictions(out, preds);
}

}  // namespace poolcast
