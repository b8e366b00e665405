#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace poolcast {

/// Named columns of text cells, one row per grid point of p_2.
struct FigureTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// Figure ids: 1a, 1b, 1c, 1d (conjugate ensembles with p_1 fixed), 2a
/// (Karmarkar and beta transforms of the average), 2b (probit ensemble and
/// logit pool), 3a (exponential-power ensembles for powers 1, 2, 4), 3b
/// (positive and negative correlation).
const std::vector<std::string>& figure_ids();

/// Throws UsageError for an unknown id.
FigureTable figure_data(const std::string& id);

void write_figure(std::ostream& out, const FigureTable& table);

}  // namespace poolcast
