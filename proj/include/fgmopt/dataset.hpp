#pragma once

#include <iosfwd>
#include <vector>

#include "fgmopt/numkit.hpp"

namespace fgmopt {

/// Design space: per-variable category counts for discrete spaces, or an
/// unconstrained real space of the given dimension.
struct Space {
    int d = 0;
    std::vector<int> categories;  // empty for continuous spaces

    static Space continuous(int d) { return {d, {}}; }
    static Space discrete(std::vector<int> categories)
    {
        const int d = static_cast<int>(categories.size());
        return {d, std::move(categories)};
    }
    static Space binary(int d) { return discrete(std::vector<int>(d, 2)); }

    bool is_discrete() const { return !categories.empty(); }
    /// Number of points of a discrete space (saturates at 2^62).
    std::uint64_t cardinality() const;
};

struct Dataset {
    DenseMatrix X;  // N x d, one design per row
    Vector y;
    Space space;

    Eigen::Index size() const { return X.rows(); }
    int dimension() const { return space.d; }
    Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// Seeded shuffle into (train, held-out) with `train_fraction` of rows in train.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction,
                                          numkit::Rng& rng);

/// CSV "x_0,...,x_{d-1},y" with round-trip precision.
void write_csv(std::ostream& out, const Dataset& data);

}  // namespace fgmopt
