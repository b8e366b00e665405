#include "poolcast/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "poolcast/errors.hpp"

namespace poolcast {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& field, const std::string& context) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || field.empty() || !std::isfinite(v))
        throw SchemaError("cannot read number '" + field + "' at " + context);
    return v;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Eigen::VectorXd Dataset::oracle_column(const std::string& name) const {
    for (std::size_t j = 0; j < oracle_names.size(); ++j)
        if (oracle_names[j] == name) return oracle.col(static_cast<Eigen::Index>(j));
    throw SchemaError("data has no oracle_" + name + " column");
}

Dataset parse_dataset(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(source + " is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);

    int y_col = -1;
    std::vector<int> p_cols;
    std::vector<int> o_cols;
    Dataset d;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "y") {
            if (y_col >= 0) throw SchemaError(source + " has two y columns");
            y_col = static_cast<int>(c);
        } else if (starts_with(h, "p_") && h.size() > 2) {
            p_cols.push_back(static_cast<int>(c));
            d.experts.push_back(h.substr(2));
        } else if (starts_with(h, "oracle_") && h.size() > 7) {
            o_cols.push_back(static_cast<int>(c));
            d.oracle_names.push_back(h.substr(7));
        }
    }
    if (y_col < 0) throw SchemaError(source + " has no y column");
    if (p_cols.empty()) throw SchemaError(source + " has no expert columns (prefix p_)");

    std::vector<int> ys;
    std::vector<double> ps;
    std::vector<double> os;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != header.size())
            throw SchemaError(where + " has " + std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(header.size()));
        const std::string& yf = fields[static_cast<std::size_t>(y_col)];
        if (yf != "0" && yf != "1") throw SchemaError(where + ": y must be 0 or 1, got '" + yf + "'");
        ys.push_back(yf == "1" ? 1 : 0);
        for (int c : p_cols) {
            const double p = parse_double(fields[static_cast<std::size_t>(c)], where);
            if (p < 0.0 || p > 1.0)
                throw SchemaError(where + ": " + header[static_cast<std::size_t>(c)] + " is outside [0, 1]");
            ps.push_back(p);
        }
        for (int c : o_cols) os.push_back(parse_double(fields[static_cast<std::size_t>(c)], where));
    }
    const auto n = static_cast<Eigen::Index>(ys.size());
    if (n == 0) throw SchemaError(source + " has no data rows");
    d.outcome = Eigen::Map<Eigen::VectorXi>(ys.data(), n);
    d.reports = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        ps.data(), n, static_cast<Eigen::Index>(p_cols.size()));
    d.oracle = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        os.data(), n, static_cast<Eigen::Index>(o_cols.size()));
    return d;
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open data file " + path.string());
    return parse_dataset(in, path.string());
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "y";
    for (const auto& n : data.experts) out << ",p_" << n;
    for (const auto& n : data.oracle_names) out << ",oracle_" << n;
    out << '\n';
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        out << data.outcome(r);
        for (Eigen::Index j = 0; j < data.reports.cols(); ++j) out << ',' << format_double(data.reports(r, j));
        for (Eigen::Index j = 0; j < data.oracle.cols(); ++j) out << ',' << format_double(data.oracle(r, j));
        out << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path.string());
    write_dataset(out, data);
}

}  // namespace poolcast
