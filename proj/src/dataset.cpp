#include "fgmopt/dataset.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fgmopt {

std::uint64_t Space::cardinality() const
{
    constexpr std::uint64_t cap = std::uint64_t{1} << 62;
    std::uint64_t total = 1;
    for (int k : categories) {
        if (total > cap / static_cast<std::uint64_t>(k))
            return cap;
        total *= static_cast<std::uint64_t>(k);
    }
    return total;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const
{
    Dataset out;
    out.space = space;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = static_cast<Eigen::Index>(rows[r]);
        out.X.row(static_cast<Eigen::Index>(r)) = X.row(src);
        out.y(static_cast<Eigen::Index>(r)) = y(src);
    }
    return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction,
                                          numkit::Rng& rng)
{
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
        throw std::invalid_argument("split_dataset: train fraction must lie in (0, 1]");
    const auto n = static_cast<std::size_t>(data.size());
    auto order = numkit::permutation(n, rng);
    const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
    std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> held(order.begin() + n_train, order.end());
    return {data.subset(train), data.subset(held)};
}

void write_csv(std::ostream& out, const Dataset& data)
{
    for (int k = 0; k < data.dimension(); ++k)
        out << "x_" << k << ',';
    out << "y\n";
    char buf[64];
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        for (Eigen::Index k = 0; k < data.X.cols(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", data.X(r, k));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", data.y(r));
        out << buf;
    }
}

}  // namespace fgmopt
