#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the library code path it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fgmopt/fgm.hpp"
#include "fgmopt/numkit.hpp"

namespace oracle {

using fgmopt::Matrix;
using fgmopt::Vector;

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-5)
{
    Vector g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Vector up = x, down = x;
        up(k) += h;
        down(k) -= h;
        g(k) = (f(up) - f(down)) / (2.0 * h);
    }
    return g;
}

/// Largest componentwise relative error, skipping entries where both sides
/// are below `floor` in magnitude.
inline double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-6)
{
    double worst = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double scale = std::max(std::abs(a(k)), std::abs(b(k)));
        if (scale < floor)
            continue;
        worst = std::max(worst, std::abs(a(k) - b(k)) / scale);
    }
    return worst;
}

/// (X^T X + lambda I)^{-1} X^T y through a full-pivot LU inverse.
inline Vector ridge_closed_form(const Matrix& X, const Vector& y, double lambda)
{
    const Matrix A = X.transpose() * X + lambda * Matrix::Identity(X.cols(), X.cols());
    return A.fullPivLu().inverse() * (X.transpose() * y);
}

/// Adjacency as a d x d boolean table.
inline std::vector<std::vector<bool>> adjacency(const fgmopt::fgm::FgmGraph& g)
{
    const int d = g.dimension();
    std::vector<std::vector<bool>> a(d, std::vector<bool>(d, false));
    for (const auto& [i, j] : g.edges())
        a[i][j] = a[j][i] = true;
    return a;
}

/// Every vertex subset that is a clique and cannot be extended, by
/// enumerating all 2^d subsets.
inline std::vector<fgmopt::fgm::Clique> brute_force_maximal_cliques(const fgmopt::fgm::FgmGraph& g)
{
    const int d = g.dimension();
    const auto a = adjacency(g);
    auto is_clique = [&](unsigned mask) {
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if ((mask >> i & 1u) && (mask >> j & 1u) && !a[i][j])
                    return false;
        return true;
    };
    std::vector<fgmopt::fgm::Clique> out;
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
        if (!is_clique(mask))
            continue;
        bool maximal = true;
        for (int v = 0; v < d && maximal; ++v)
            if (!(mask >> v & 1u) && is_clique(mask | (1u << v)))
                maximal = false;
        if (!maximal)
            continue;
        fgmopt::fgm::Clique c;
        for (int v = 0; v < d; ++v)
            if (mask >> v & 1u)
                c.push_back(v);
        out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Marginal of a mixed-radix table (variable 0 most significant) onto `vars`,
/// indexed in the same convention.
inline Vector marginal(const Vector& table, const std::vector<int>& categories,
                       const std::vector<int>& vars)
{
    std::size_t size = 1;
    for (int v : vars)
        size *= static_cast<std::size_t>(categories[v]);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(size));
    const int d = static_cast<int>(categories.size());
    std::vector<int> digits(d, 0);
    for (Eigen::Index idx = 0; idx < table.size(); ++idx) {
        Eigen::Index rest = idx;
        for (int k = d - 1; k >= 0; --k) {
            digits[k] = static_cast<int>(rest % categories[k]);
            rest /= categories[k];
        }
        std::size_t m = 0;
        for (int v : vars)
            m = m * static_cast<std::size_t>(categories[v]) + static_cast<std::size_t>(digits[v]);
        out(static_cast<Eigen::Index>(m)) += table(idx);
    }
    return out;
}

inline double max_ratio(const Vector& pi, const Vector& p)
{
    double worst = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
        if (pi(k) <= 0.0)
            continue;
        worst = std::max(worst, p(k) > 0.0 ? pi(k) / p(k) : INFINITY);
    }
    return worst;
}

}  // namespace oracle
