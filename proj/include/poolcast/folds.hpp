#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace poolcast {

/// Partition of n rows into K folds.
class FoldAssignment {
public:
    FoldAssignment(std::vector<int> fold_of_row, int folds, std::uint64_t seed);

    Eigen::Index rows() const noexcept { return static_cast<Eigen::Index>(fold_of_row_.size()); }
    int folds() const noexcept { return folds_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int fold_of(Eigen::Index row) const { return fold_of_row_.at(static_cast<std::size_t>(row)); }
    const std::vector<int>& map() const noexcept { return fold_of_row_; }

    /// Rows of fold j in increasing order.
    std::vector<Eigen::Index> members(int fold) const;
    /// Rows outside fold j in increasing order.
    std::vector<Eigen::Index> complement(int fold) const;

private:
    std::vector<int> fold_of_row_;
    int folds_;
    std::uint64_t seed_;
};

/// Seeded shuffle, then contiguous blocks; the first n mod K folds get one
/// extra row. With strata, each class is shuffled separately and the classes
/// are dealt round-robin, so every fold's class counts differ by at most one.
FoldAssignment split_folds(Eigen::Index n, int folds, std::uint64_t seed);
FoldAssignment split_folds_stratified(const Eigen::VectorXi& outcome, int folds, std::uint64_t seed);

}  // namespace poolcast
