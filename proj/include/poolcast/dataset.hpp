#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolcast/fitting.hpp"

namespace poolcast {

/// In-memory form of the delimited data file: a `y` column, expert columns
/// `p_<name>`, and optional `oracle_<name>` columns. Names are stored without
/// their prefixes.
struct Dataset {
    std::vector<std::string> experts;
    Eigen::VectorXi outcome;
    Eigen::MatrixXd reports;
    std::vector<std::string> oracle_names;
    Eigen::MatrixXd oracle;

    Eigen::Index rows() const noexcept { return outcome.size(); }
    TrainingSet training() const { return TrainingSet(experts, outcome, reports); }
    /// Oracle column by name; throws SchemaError when absent.
    Eigen::VectorXd oracle_column(const std::string& name) const;
};

/// Parses comma-separated text with a header row. Columns other than y, p_*
/// and oracle_* are ignored.
Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);

/// Writes y, p_*, oracle_* with round-trip precision.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Round-trip decimal form of a double ("%.17g").
std::string format_double(double x);

/// Splits one line of comma-separated text; surrounding whitespace and a
/// trailing carriage return are removed from each field.
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& field, const std::string& context);

}  // namespace poolcast
