#include "poolcast/folds.hpp"

#include <numeric>
#include <string>

#include "poolcast/errors.hpp"
#include "poolcast/random.hpp"

namespace poolcast {

namespace {

void check_shape(Eigen::Index n, int folds) {
    if (folds < 2) throw UsageError("fold count must be at least 2");
    if (n < folds)
        throw SchemaError("cannot split " + std::to_string(n) + " rows into " + std::to_string(folds) + " folds");
}

void shuffle(std::vector<Eigen::Index>& v, CounterRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

FoldAssignment::FoldAssignment(std::vector<int> fold_of_row, int folds, std::uint64_t seed)
    : fold_of_row_(std::move(fold_of_row)), folds_(folds), seed_(seed) {
    check_shape(rows(), folds);
    std::vector<int> sizes(static_cast<std::size_t>(folds), 0);
    for (int f : fold_of_row_) {
        if (f < 0 || f >= folds) throw SchemaError("fold index out of range");
        ++sizes[static_cast<std::size_t>(f)];
    }
    for (int s : sizes)
        if (s == 0) throw SchemaError("every fold needs at least one row");
}

std::vector<Eigen::Index> FoldAssignment::members(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t r = 0; r < fold_of_row_.size(); ++r)
        if (fold_of_row_[r] == fold) out.push_back(static_cast<Eigen::Index>(r));
    return out;
}

std::vector<Eigen::Index> FoldAssignment::complement(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t r = 0; r < fold_of_row_.size(); ++r)
        if (fold_of_row_[r] != fold) out.push_back(static_cast<Eigen::Index>(r));
    return out;
}

FoldAssignment split_folds(Eigen::Index n, int folds, std::uint64_t seed) {
    check_shape(n, folds);
    CounterRng rng = CounterRng(seed).substream("folds");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    shuffle(order, rng);

    std::vector<int> map(static_cast<std::size_t>(n));
    const Eigen::Index base = n / folds;
    const Eigen::Index extra = n % folds;
    std::size_t pos = 0;
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index size = base + (f < extra ? 1 : 0);
        for (Eigen::Index j = 0; j < size; ++j) map[static_cast<std::size_t>(order[pos++])] = f;
    }
    return FoldAssignment(std::move(map), folds, seed);
}

FoldAssignment split_folds_stratified(const Eigen::VectorXi& outcome, int folds, std::uint64_t seed) {
    const Eigen::Index n = outcome.size();
    check_shape(n, folds);
    CounterRng rng = CounterRng(seed).substream("folds-stratified");
    std::vector<Eigen::Index> zeros;
    std::vector<Eigen::Index> ones;
    for (Eigen::Index r = 0; r < n; ++r) (outcome(r) == 1 ? ones : zeros).push_back(r);
    shuffle(zeros, rng);
    shuffle(ones, rng);

    std::vector<int> map(static_cast<std::size_t>(n));
    std::size_t pos = 0;
    for (const auto* cls : {&zeros, &ones})
        for (Eigen::Index r : *cls) map[static_cast<std::size_t>(r)] = static_cast<int>(pos++ % static_cast<std::size_t>(folds));
    return FoldAssignment(std::move(map), folds, seed);
}

}  // namespace poolcast
